//! Metadata attached to every computed result.

use serde::{Deserialize, Serialize};

use crate::conic::{SolveOptions, SolveResult, SolveStatus};

/// What the solver said about the program behind a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub duality_gap: f64,
    pub max_residual: f64,
    pub iterations: usize,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        Self { status: r.status, duality_gap: r.duality_gap, max_residual: r.max_residual, iterations: r.iterations }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solves: Vec<SolveSummary>,
}

impl Provenance {
    pub fn new(options: &SolveOptions, seed: Option<u64>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            gap_tolerance: options.gap_tolerance,
            feasibility_tolerance: options.feasibility_tolerance,
            seed,
            solves: Vec::new(),
        }
    }

    pub fn with_solves(mut self, solves: impl IntoIterator<Item = SolveSummary>) -> Self {
        self.solves.extend(solves);
        self
    }
}
