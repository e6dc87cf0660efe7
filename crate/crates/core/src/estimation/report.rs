use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::fit::{FitResult, ParamEstimate};
use crate::error::{Error, Result};
use crate::model::ModelKind;

/// Header of the parameter table.
pub const PARAMETER_HEADER: &str = "key,transition,name,estimate,se,lower,upper";

fn fixed(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "NA".to_string()
    }
}

/// One record per parameter, fixed six decimals, `NA` for unavailable values.
pub fn parameter_table(fit: &FitResult) -> String {
    let mut out = String::from(PARAMETER_HEADER);
    out.push('\n');
    for e in &fit.estimates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.key,
            e.group,
            e.name,
            fixed(e.estimate),
            fixed(e.se),
            fixed(e.lower),
            fixed(e.upper)
        );
    }
    out
}

/// Inverse of [`parameter_table`]; values come back rounded to six decimals.
pub fn parse_parameter_table(text: &str) -> Result<Vec<ParamEstimate>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != PARAMETER_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header `{}`", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<f64> {
            match &rec[i] {
                "NA" => Ok(f64::NAN),
                s => s.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("cannot parse `{s}` as a number"),
                }),
            }
        };
        out.push(ParamEstimate {
            key: rec[0].to_string(),
            group: rec[1].to_string(),
            name: rec[2].to_string(),
            estimate: num(3)?,
            se: num(4)?,
            lower: num(5)?,
            upper: num(6)?,
        });
    }
    Ok(out)
}

/// `key = value` run metadata.
pub fn metadata_block(fit: &FitResult) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("model", fit.spec.kind.to_string());
    kv("random_effects", fit.spec.random_effects.to_string());
    kv("quadrature_points", fit.spec.quadrature_points.to_string());
    kv("log_likelihood", format!("{:.6}", fit.log_likelihood));
    kv("iterations", fit.iterations.to_string());
    kv("converged", fit.converged.to_string());
    kv("stop_reason", fit.message.clone());
    kv("gradient_norm", format!("{:.3e}", fit.gradient_norm));
    kv("patients", fit.n_patients.to_string());
    kv("transitions", fit.n_transitions.to_string());
    kv("floor_hits", fit.floor_hits.to_string());
    kv("seed", fit.seed.map_or("none".into(), |s| s.to_string()));
    out
}

fn cell(e: &ParamEstimate) -> String {
    if e.has_interval() {
        format!("{:.3} ({:.3}, {:.3})", e.estimate, e.lower, e.upper)
    } else {
        format!("{:.3}", e.estimate)
    }
}

/// Human-readable table: regression coefficients in one column per
/// transition (six-state) or sojourn/jump quantity (five-state), followed by
/// the remaining scalar parameters.
pub fn table_report(fit: &FitResult, truth: Option<&BTreeMap<String, f64>>) -> String {
    let (labels, heads): (&[&str], &[&str]) = match fit.spec.kind {
        ModelKind::SixState => (
            fit.spec.kind.regression_labels(),
            &["inactive->active", "active->inactive", "undamaged->damaged"],
        ),
        ModelKind::FiveState => (
            fit.spec.kind.regression_labels(),
            &[
                "sojourn inactive",
                "sojourn active",
                "jump inactive->damaged",
                "jump active->damaged",
            ],
        ),
    };
    let mut rows: Vec<String> = Vec::new();
    let mut by_cell: BTreeMap<(String, String), &ParamEstimate> = BTreeMap::new();
    let mut others = Vec::new();
    for e in &fit.estimates {
        if labels.contains(&e.group.as_str()) {
            if !rows.contains(&e.name) {
                rows.push(e.name.clone());
            }
            by_cell.insert((e.name.clone(), e.group.clone()), e);
        } else {
            others.push(e);
        }
    }
    let width = 30;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} model, {} random effects, {} quadrature points",
        fit.spec.kind, fit.spec.random_effects, fit.spec.quadrature_points
    );
    let _ = writeln!(
        out,
        "log-likelihood {:.2}, {} iterations, converged: {}",
        fit.log_likelihood, fit.iterations, fit.converged
    );
    out.push('\n');
    let _ = write!(out, "{:<24}", "");
    for h in heads {
        let _ = write!(out, "{h:<width$}");
    }
    out.push('\n');
    for r in &rows {
        let _ = write!(out, "{r:<24}");
        for l in labels {
            let text = by_cell
                .get(&(r.clone(), l.to_string()))
                .map_or("-".to_string(), |e| cell(e));
            let _ = write!(out, "{text:<width$}");
        }
        out.push('\n');
    }
    out.push('\n');
    for e in &others {
        let _ = writeln!(out, "{:<24}{}", e.key, cell(e));
    }
    if let Some(truth) = truth {
        out.push_str("\ntruth vs estimate\n");
        let _ = writeln!(
            out,
            "{:<40}{:>12}{:>12}{:>12}{:>10}",
            "parameter", "truth", "estimate", "se", "z"
        );
        for e in &fit.estimates {
            if let Some(t) = truth.get(&e.key) {
                let z = (e.estimate - t) / e.se;
                let _ = writeln!(
                    out,
                    "{:<40}{:>12.4}{:>12.4}{:>12.4}{:>10.2}",
                    e.key, t, e.estimate, e.se, z
                );
            }
        }
    }
    out
}
