//! Output formats. Tables and CSV are rendered from the JSON document, so
//! a saved JSON output reproduces the table exactly.

use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// Which part of `results` becomes rows, and which fields become columns.
pub struct View {
    /// Pointer (relative to `results`) to an array of records; `None` for a
    /// single record.
    pub rows: Option<&'static str>,
    pub columns: &'static [(&'static str, &'static str)],
}

pub fn view(verb: &str) -> View {
    let (rows, columns): (Option<&'static str>, &'static [(&'static str, &'static str)]) = match verb {
        "dmax" => (
            None,
            &[
                ("D_max (bits)", "/value"),
                ("epsilon", "/epsilon"),
                ("unsmoothed D_max (bits)", "/unsmoothed"),
                ("lower bound (bits)", "/lower_bound"),
            ],
        ),
        "robust" => (
            None,
            &[("cone", "/cone"), ("epsilon", "/epsilon"), ("R", "/robustness"), ("LR (bits)", "/log_robustness"), ("witness", "/witness")],
        ),
        "imax" => (None, &[("I_max (bits)", "/value"), ("LR over constant channels (bits)", "/constant_robustness")]),
        "diamond" => (None, &[("half-diamond distance", "/distance")]),
        "dist-free" => (None, &[("cone", "/cone"), ("half-diamond distance to free", "/distance")]),
        "power" => (
            None,
            &[
                ("power", "/power"),
                ("monotone", "/monotone"),
                ("complete", "/complete"),
                ("value", "/value"),
                ("unit", "/unit"),
                ("ancilla dim", "/ancilla_dim_used"),
                ("certified", "/certified"),
            ],
        ),
        "convex-split" => (
            None,
            &[
                ("n", "/n"),
                ("lambda", "/lambda"),
                ("half-diamond distance", "/measured_distance"),
                ("bound", "/bound"),
                ("shortcut", "/used_shortcut"),
                ("dim", "/gamma_dim"),
            ],
        ),
        "erasure" => (
            None,
            &[
                ("epsilon", "/epsilon"),
                ("eta", "/eta"),
                ("n", "/n_used"),
                ("cost (bits)", "/cost_bits"),
                ("LR^(eps-eta) (bits)", "/lr_value"),
                ("upper bound (bits)", "/upper_bound"),
                ("executed", "/executed"),
                ("shortcut", "/used_shortcut"),
                ("protocol half-diamond distance", "/protocol_distance"),
                ("achieved half-diamond distance", "/achieved_distance"),
                ("delta", "/lower_bound_info/delta"),
                ("lower bound mu=2 (bits)", "/lower_bound_info/value"),
                ("LR^delta (bits)", "/lower_bound_info/convex_value"),
            ],
        ),
        "simulate-check" => (
            None,
            &[
                ("ancilla dim", "/ancilla_dim"),
                ("pre free", "/pre_free"),
                ("post free", "/post_free"),
                ("half-diamond distance", "/distance"),
                ("epsilon", "/epsilon"),
                ("passes", "/passes"),
            ],
        ),
        "axioms" => (
            Some("/outcomes"),
            &[("axiom", "/axiom"), ("property", "/property"), ("status", "/status"), ("checks", "/checks"), ("witness", "/witness")],
        ),
        "monotone-suite" => (
            Some("/checks"),
            &[
                ("property", "/property"),
                ("evaluations", "/evaluations"),
                ("violations", "/violations"),
                ("worst excess (bits)", "/worst_excess"),
                ("witness", "/witness"),
            ],
        ),
        "majorize" => (None, &[("p majorizes q", "/majorizes")]),
        "cq-cost" => (None, &[("asymptotic cost (bits)", "/value")]),
        _ => (None, &[]),
    };
    View { rows, columns }
}

/// Nine significant digits, trailing zeros trimmed down to one decimal.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    if !x.is_finite() {
        return if x > 0.0 {
            "+inf".into()
        } else if x < 0.0 {
            "-inf".into()
        } else {
            "nan".into()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.8e}");
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        format!("{}e{e}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    match s.split_once('.') {
        Some((int, frac)) => {
            let frac = frac.trim_end_matches('0');
            format!("{int}.{}", if frac.is_empty() { "0" } else { frac })
        }
        None => format!("{s}.0"),
    }
}

/// Rounds every float to nine significant digits, so that all formats
/// carry the same numbers.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = format!("{x:.8e}").parse().expect("round trip");
            serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => "-".into(),
        Some(Value::Bool(b)) => b.to_string(),
        Some(Value::Number(n)) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(i)) => i.to_string(),
            _ => format_number(n.as_f64().unwrap_or(f64::NAN)),
        },
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

fn records(doc: &Value) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let verb = doc.get("verb").and_then(Value::as_str).unwrap_or_default();
    let view = view(verb);
    let results = doc.get("results").unwrap_or(&Value::Null);
    let headers: Vec<&'static str> = view.columns.iter().map(|(h, _)| *h).collect();
    let row = |record: &Value| view.columns.iter().map(|(_, p)| cell(record.pointer(p))).collect::<Vec<_>>();
    let rows = match view.rows {
        Some(ptr) => results.pointer(ptr).and_then(Value::as_array).map(|a| a.iter().map(row).collect()).unwrap_or_default(),
        None => vec![row(results)],
    };
    (headers, rows)
}

/// Aligned columns: single records as `quantity  value` pairs, record lists
/// as one line per record.
pub fn table(doc: &Value) -> String {
    let (headers, rows) = records(doc);
    let verb = doc.get("verb").and_then(Value::as_str).unwrap_or_default();
    let mut out = String::new();
    if view(verb).rows.is_none() {
        let values = rows.first().cloned().unwrap_or_default();
        let width = headers.iter().map(|h| h.chars().count()).max().unwrap_or(0);
        for (h, v) in headers.iter().zip(values) {
            out.push_str(&format!("{h:<width$}  {v}\n"));
        }
        return out;
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_owned() + "\n"
    };
    out.push_str(&line(headers.iter().map(|h| h.to_string()).collect()));
    out.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect()));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

pub fn csv(doc: &Value) -> String {
    let (headers, rows) = records(doc);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&headers).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

pub fn json(doc: &Value) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialise") + "\n"
}

pub fn emit(doc: &Value, format: Format) -> String {
    match format {
        Format::Table => table(doc),
        Format::Json => json(doc),
        Format::Csv => csv(doc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(2.0), "2.0");
        assert_eq!(format_number(0.0), "0.0");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456.7891234), "123456.789");
        assert_eq!(format_number(1.5e-9), "1.5e-9");
        assert_eq!(format_number(-0.25), "-0.25");
        assert_eq!(format_number(9.9999999999), "10.0");
        assert_eq!(format_number(3e12), "3.0e12");
    }

    #[test]
    fn empty_suite_is_header_only_csv() {
        let doc = json!({"verb": "monotone-suite", "results": {"checks": []}});
        assert_eq!(csv(&doc), "property,evaluations,violations,worst excess (bits),witness\n");
    }

    #[test]
    fn convex_split_has_six_columns() {
        let doc = json!({"verb": "convex-split", "results": {
            "n": 8, "lambda": 2.0, "measured_distance": 0.13671875, "bound": 0.5, "used_shortcut": true, "gamma_dim": 65536
        }});
        let text = csv(&doc);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,lambda,half-diamond distance,bound,shortcut,dim");
        assert_eq!(lines[1], "8,2.0,0.13671875,0.5,true,65536");
    }

    #[test]
    fn record_tables_are_aligned() {
        let doc = json!({"verb": "axioms", "results": {"outcomes": [
            {"axiom": 1, "property": "composition", "status": "pass", "checks": 20},
            {"axiom": 2, "property": "identity", "status": "fail", "checks": 1, "witness": "w"}
        ]}});
        let t = table(&doc);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        let col = lines[0].find("status").unwrap();
        assert_eq!(&lines[2][col..col + 4], "pass");
        assert_eq!(&lines[3][col..col + 4], "fail");
    }

    #[test]
    fn normalization_is_idempotent() {
        let v = json!({"a": 0.1 + 0.2, "b": [1.0 / 3.0], "c": 7});
        let once = normalize(v);
        assert_eq!(once["a"], json!(0.3));
        assert_eq!(normalize(once.clone()), once);
    }
}
