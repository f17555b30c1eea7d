//! One function per verb. Each returns the JSON document
//! `{verb, inputs, params, results, provenance}`.

use std::fmt;
use std::path::Path;

use chanres::conic::SolveOptions;
use chanres::free_sets::{self, FreeKind, FreeSetSpec};
use chanres::majorization;
use chanres::monotones::{self, AscentOptions, SmoothParams, StateMonotone};
use chanres::protocols::{self, ProtocolOptions};
use chanres::report::{Provenance, SolveSummary};
use chanres::{norms, Channel, Error};
use serde_json::{json, Map, Value};

use crate::render::normalize;
use crate::{Cli, FreeArg, Verb, TOLERANCE_ENV};

/// A failed command: either bad input (exit 2) or a solver failure (exit 3).
#[derive(Debug)]
pub struct CommandError {
    context: Option<String>,
    source: Error,
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self.source {
            Error::SolverFailure { .. } | Error::Infeasible(_) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.context {
            Some(c) => write!(f, "{c}: {}", self.source),
            None => write!(f, "{}", self.source),
        }
    }
}

impl From<Error> for CommandError {
    fn from(source: Error) -> Self {
        Self { context: None, source }
    }
}

type Result<T> = std::result::Result<T, CommandError>;

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for std::result::Result<T, Error> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CommandError { context: Some(what()), source })
    }
}

fn invalid(flag: &str, msg: impl Into<String>) -> CommandError {
    CommandError { context: Some(flag.to_owned()), source: Error::InvalidParameter(msg.into()) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MonotoneArg {
    Coherence,
    FreeEnergy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PowerKind {
    Generating,
    Increasing,
}

fn solver_options() -> Result<SolveOptions> {
    match std::env::var(TOLERANCE_ENV) {
        Err(_) => Ok(SolveOptions::default()),
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(tol) if tol > 0.0 && tol < 1.0 => Ok(SolveOptions::with_tolerance(tol)),
            _ => Err(invalid(TOLERANCE_ENV, format!("expected a tolerance in (0, 1), got {text:?}"))),
        },
    }
}

fn load(flag: &str, path: &Path) -> Result<Channel> {
    chanres::channel::load_channel(path).context(|| format!("{flag} {}", path.display()))
}

fn free_spec(arg: &FreeArg, dim_in: usize, dim_out: usize) -> Result<FreeSetSpec> {
    let spec = match arg.free.as_str() {
        "constant" => FreeSetSpec::constant(dim_in, dim_out),
        "mio" => FreeSetSpec::mio(dim_in, dim_out),
        "mmp" | "max-mixed-preserving" => FreeSetSpec::max_mixed_preserving(dim_in, dim_out),
        path => {
            let text = std::fs::read_to_string(path).map_err(Error::from).context(|| format!("--free {path}"))?;
            let spec: FreeSetSpec = serde_json::from_str(&text).map_err(Error::from).context(|| format!("--free {path}"))?;
            spec.validate().context(|| format!("--free {path}"))?;
            if (spec.dim_in, spec.dim_out) != (dim_in, dim_out) {
                return Err(CommandError {
                    context: Some(format!("--free {path}")),
                    source: Error::DimensionMismatch(format!(
                        "free set is {}→{}, channel is {dim_in}→{dim_out}",
                        spec.dim_in, spec.dim_out
                    )),
                });
            }
            spec
        }
    };
    Ok(spec)
}

fn check_eps(flag: &str, eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid(flag, format!("{eps} is outside [0, 1]")));
    }
    Ok(())
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

struct Doc {
    verb: &'static str,
    inputs: Map<String, Value>,
    params: Map<String, Value>,
    seed: Option<u64>,
    solves: Vec<SolveSummary>,
}

impl Doc {
    fn new(verb: &'static str) -> Self {
        Self { verb, inputs: Map::new(), params: Map::new(), seed: None, solves: Vec::new() }
    }

    fn input(mut self, name: &str, p: &Path) -> Self {
        self.inputs.insert(name.into(), path_value(p));
        self
    }

    fn param(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.params.insert(name.into(), v.into());
        self
    }

    fn finish(self, results: Value, solver: &SolveOptions) -> Value {
        let provenance = Provenance::new(solver, self.seed).with_solves(self.solves);
        normalize(json!({
            "verb": self.verb,
            "inputs": self.inputs,
            "params": self.params,
            "results": results,
            "provenance": serde_json::to_value(provenance).expect("provenance serialises"),
        }))
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialise")
}

pub fn run(cli: &Cli) -> Result<Value> {
    let solver = solver_options()?;
    let seed = cli.seed;
    match &cli.verb {
        Verb::Dmax { lhs, rhs, eps } => {
            check_eps("--eps", *eps)?;
            let (n, m) = (load("--lhs", lhs)?, load("--rhs", rhs)?);
            let mut doc = Doc::new("dmax").input("lhs", lhs).input("rhs", rhs).param("eps", *eps);
            let r = monotones::channel_dmax_smooth(&n, &m, &SmoothParams { epsilon: *eps, solver: solver.clone() })?;
            doc.solves.extend(r.solve.clone());
            let results = json!({
                "epsilon": r.epsilon,
                "value": to_value(&r.value),
                "unsmoothed": to_value(&r.unsmoothed),
                "lower_bound": to_value(&r.lower_bound),
            });
            Ok(doc.finish(results, &solver))
        }
        Verb::Robust { channel, free, eps, witness_out } => {
            check_eps("--eps", *eps)?;
            let n = load("channel", channel)?;
            let spec = free_spec(free, n.dim_in(), n.dim_out())?;
            let r = monotones::robustness_with(&n, &spec, *eps, &solver)?;
            if let Some(path) = witness_out {
                chanres::channel::save_channel(path, &r.optimal_free).context(|| format!("--witness-out {}", path.display()))?;
            }
            let mut doc = Doc::new("robust").input("channel", channel).param("free", free.free.as_str()).param("eps", *eps);
            doc.solves.push(r.solve.clone());
            let results = json!({
                "cone": spec.name(),
                "epsilon": r.epsilon,
                "robustness": r.robustness,
                "log_robustness": r.log_robustness,
                "witness": witness_out.as_deref().map(path_value),
            });
            Ok(doc.finish(results, &solver))
        }
        Verb::Imax { channel } => {
            let n = load("channel", channel)?;
            let r = monotones::i_max_with(&n, &solver)?;
            let mut doc = Doc::new("imax").input("channel", channel);
            doc.solves.push(r.solve.clone());
            let results = json!({ "value": r.value, "constant_robustness": r.constant_robustness });
            Ok(doc.finish(results, &solver))
        }
        Verb::Diamond { lhs, rhs } => {
            let (a, b) = (load("--lhs", lhs)?, load("--rhs", rhs)?);
            let (d, s) = norms::diamond_distance_report(&a, &b, &solver)?;
            let mut doc = Doc::new("diamond").input("lhs", lhs).input("rhs", rhs);
            doc.solves.push(s);
            Ok(doc.finish(json!({ "distance": d }), &solver))
        }
        Verb::DistFree { channel, free } => {
            let n = load("channel", channel)?;
            let spec = free_spec(free, n.dim_in(), n.dim_out())?;
            let r = norms::diamond_distance_to_free_with(&n, &spec, &solver)?;
            let mut doc = Doc::new("dist-free").input("channel", channel).param("free", free.free.as_str());
            doc.solves.push(r.solve.clone());
            Ok(doc.finish(json!({ "cone": spec.name(), "distance": r.distance }), &solver))
        }
        Verb::Power { channel, monotone, free, kind, complete, starts } => {
            if *starts == 0 {
                return Err(invalid("--starts", "at least one start is needed"));
            }
            let n = load("channel", channel)?;
            let (omega, unit) = match monotone {
                MonotoneArg::Coherence => (StateMonotone::Coherence, "bits"),
                MonotoneArg::FreeEnergy => {
                    let Some(f) = free else {
                        return Err(invalid("--free", "the free-energy monotone needs a Gibbs-preserving free set"));
                    };
                    let spec = free_spec(&FreeArg { free: f.clone() }, n.dim_in(), n.dim_out())?;
                    match spec.kind {
                        FreeKind::GibbsPreserving { hamiltonian, beta, .. } => (StateMonotone::FreeEnergy { hamiltonian, beta }, "nats"),
                        _ => return Err(invalid("--free", "the free-energy monotone needs a Gibbs-preserving free set")),
                    }
                }
            };
            let opts = AscentOptions { starts: *starts, seed, ..AscentOptions::default() };
            let r = match kind {
                PowerKind::Generating => monotones::generating_power(&n, &omega, *complete, &opts)?,
                PowerKind::Increasing => monotones::increasing_power(&n, &omega, *complete, &opts)?,
            };
            let power = match kind {
                PowerKind::Generating => "generating",
                PowerKind::Increasing => "increasing",
            };
            let mut doc = Doc::new("power")
                .input("channel", channel)
                .param("monotone", omega.name())
                .param("kind", power)
                .param("complete", *complete)
                .param("starts", *starts as u64);
            doc.seed = Some(seed);
            let results = json!({
                "power": power,
                "monotone": omega.name(),
                "complete": complete,
                "value": r.value,
                "unit": unit,
                "ancilla_dim_used": r.ancilla_dim_used,
                "certified": r.certified,
                "maximizing_state": to_value(&r.maximizing_state),
            });
            Ok(doc.finish(results, &solver))
        }
        Verb::ConvexSplit { alpha, beta, n } => {
            if *n == 0 {
                return Err(invalid("--n", "the number of copies must be at least 1"));
            }
            let (a, b) = (load("--alpha", alpha)?, load("--beta", beta)?);
            let opts = ProtocolOptions { solver: solver.clone(), ..ProtocolOptions::default() };
            let r = protocols::convex_split_with(&a, &b, *n, &opts)?;
            let mut doc = Doc::new("convex-split").input("alpha", alpha).input("beta", beta).param("n", *n as u64);
            doc.solves.extend(r.solve.clone());
            Ok(doc.finish(to_value(&r), &solver))
        }
        Verb::Erasure { channel, free, eps, eta } => {
            if !(0.0 < *eta && eta < eps && *eps < 1.0) {
                return Err(invalid("--eps/--eta", format!("need 0 < eta < eps < 1, got eps = {eps}, eta = {eta}")));
            }
            let n = load("channel", channel)?;
            let spec = free_spec(free, n.dim_in(), n.dim_out())?;
            let opts = ProtocolOptions { solver: solver.clone(), ..ProtocolOptions::default() };
            let r = protocols::erasure_protocol_with(&n, &spec, *eps, *eta, &opts)?;
            let mut doc =
                Doc::new("erasure").input("channel", channel).param("free", free.free.as_str()).param("eps", *eps).param("eta", *eta);
            doc.solves.extend(r.solves.iter().cloned());
            let mut results = to_value(&r);
            if let Some(o) = results.as_object_mut() {
                o.remove("solves");
            }
            Ok(doc.finish(results, &solver))
        }
        Verb::SimulateCheck { channel, target, pre, post, free, eps } => {
            check_eps("--eps", *eps)?;
            let n = load("--channel", channel)?;
            let t = load("--target", target)?;
            let e = load("--pre", pre)?;
            let d = load("--post", post)?;
            let spec = free_spec(free, t.dim_in(), t.dim_out())?;
            let r = protocols::verify_simulation_with(&n, &t, &e, &d, &spec, *eps, &solver)?;
            let mut doc = Doc::new("simulate-check")
                .input("channel", channel)
                .input("target", target)
                .input("pre", pre)
                .input("post", post)
                .param("free", free.free.as_str())
                .param("eps", *eps);
            doc.solves.push(r.solve.clone());
            Ok(doc.finish(to_value(&r), &solver))
        }
        Verb::Axioms { free, dim_in, dim_out, trials } => {
            let spec = free_spec(free, *dim_in, *dim_out)?;
            let r = free_sets::axiom_check(&spec, *trials, seed)?;
            let mut doc = Doc::new("axioms")
                .param("free", free.free.as_str())
                .param("dim_in", *dim_in as u64)
                .param("dim_out", *dim_out as u64)
                .param("trials", *trials as u64);
            doc.seed = Some(seed);
            Ok(doc.finish(to_value(&r), &solver))
        }
        Verb::MonotoneSuite { free, dim_in, dim_out, trials } => {
            let spec = free_spec(free, *dim_in, *dim_out)?;
            let r = monotones::monotone_suite(&spec, *trials, seed)?;
            let mut doc = Doc::new("monotone-suite")
                .param("free", free.free.as_str())
                .param("dim_in", *dim_in as u64)
                .param("dim_out", *dim_out as u64)
                .param("trials", *trials as u64);
            doc.seed = Some(seed);
            let mut results = to_value(&r);
            if let Some(o) = results.as_object_mut() {
                o.insert("total_violations".into(), json!(r.total_violations()));
            }
            Ok(doc.finish(results, &solver))
        }
        Verb::Majorize { p, q } => {
            let m = majorization::majorizes(p, q).context(|| "--p/--q".to_owned())?;
            let doc = Doc::new("majorize").param("p", json!(p)).param("q", json!(q));
            Ok(doc.finish(json!({ "majorizes": m }), &solver))
        }
        Verb::CqCost { channel } => {
            let n = load("channel", channel)?;
            let v = monotones::cq_asymptotic_cost(&n).context(|| format!("channel {}", channel.display()))?;
            Ok(Doc::new("cq-cost").input("channel", channel).finish(json!({ "value": v }), &solver))
        }
    }
}
