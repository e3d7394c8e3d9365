//! Aggregation of earlier runs: convergence of `λ₁` against `h` and
//! pass/fail counts of the theorem checks.

use crate::config::RunConfig;
use crate::svg::{self, Series};
use crate::{CliError, Command, ExperimentRecord, Output};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

const COLORS: [&str; 6] = ["#1f4e9c", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50"];

pub fn load_records(config: &RunConfig, config_dir: &Path) -> Result<Vec<ExperimentRecord>, CliError> {
    let records =
        config.records.iter().map(|p| ExperimentRecord::load(&config_dir.join(p))).collect::<Result<Vec<_>, _>>()?;
    let mut versions: Vec<String> = records.iter().map(|r| r.version.clone()).collect();
    versions.sort();
    versions.dedup();
    if versions.len() > 1 {
        return Err(CliError::VersionMismatch { found: versions });
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub domain: String,
    pub h: f64,
    pub lambda1: f64,
    pub exact: f64,
    pub rel_error: f64,
    /// Observed order against the next coarser `h` of the same domain.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub theorem: String,
    pub pass: usize,
    pub fail: usize,
    pub min_margin: f64,
}

pub fn convergence_table(records: &[ExperimentRecord]) -> Vec<ConvergenceRow> {
    let mut groups: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == "ok" && matches!(r.command, Command::Eigen | Command::Solve)) {
        let res = &r.results;
        let (Some(l), Some(x)) = (res["lambda1"].as_f64(), res["exact_lambda1"].as_f64()) else { continue };
        let Some(h) = res["mesh"]["h"].as_f64() else { continue };
        groups.entry(domain_label(&res["domain"])).or_default().push((h, l, x));
    }
    let mut rows = Vec::new();
    for (domain, mut runs) in groups {
        runs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut prev: Option<(f64, f64)> = None;
        for (h, lambda1, exact) in runs {
            let rel_error = (lambda1 - exact) / exact;
            let order = prev.filter(|&(ph, _)| ph != h).map(|(ph, pe)| (pe / rel_error).abs().ln() / (ph / h).ln());
            rows.push(ConvergenceRow { domain: domain.clone(), h, lambda1, exact, rel_error, order });
            prev = Some((h, rel_error));
        }
    }
    rows
}

/// `Disk(radius=1)`-style label without commas.
fn domain_label(d: &Value) -> String {
    let kind = d["kind"].as_str().unwrap_or("unknown");
    let fields: Vec<String> = d
        .as_object()
        .map(|o| o.iter().filter(|(k, _)| *k != "kind").map(|(k, v)| format!("{k}={v}").replace(',', " ")).collect())
        .unwrap_or_default();
    format!("{kind}({})", fields.join(" "))
}

pub fn check_table(records: &[ExperimentRecord]) -> Vec<CheckRow> {
    let mut rows: BTreeMap<String, CheckRow> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == "ok") {
        let Some(checks) = r.results["checks"].as_array() else { continue };
        for c in checks {
            let (Some(t), Some(pass)) = (c["theorem"].as_str(), c["pass"].as_bool()) else { continue };
            let row = rows.entry(t.to_string()).or_insert(CheckRow {
                theorem: t.to_string(),
                pass: 0,
                fail: 0,
                min_margin: f64::INFINITY,
            });
            if pass {
                row.pass += 1;
            } else {
                row.fail += 1;
            }
            if let Some(m) = c["margin"].as_f64() {
                row.min_margin = row.min_margin.min(m);
            }
        }
    }
    rows.into_values().collect()
}

pub fn report(records: &[ExperimentRecord], out: &mut Output) -> Result<Value, CliError> {
    let conv = convergence_table(records);
    let mut csv = String::from("domain,h,lambda1,exact,rel_error,order\n");
    for r in &conv {
        let order = r.order.map_or(String::new(), |o| format!("{o:.6}"));
        writeln!(csv, "{},{},{:.15e},{:.15e},{:.6e},{order}", r.domain, r.h, r.lambda1, r.exact, r.rel_error).unwrap();
    }
    out.text("convergence.csv", &csv)?;
    let mut domains: Vec<&str> = conv.iter().map(|r| r.domain.as_str()).collect();
    domains.dedup();
    let series: Vec<Series> = domains
        .iter()
        .enumerate()
        .map(|(i, d)| Series {
            label: d,
            points: conv
                .iter()
                .filter(|r| r.domain == *d && r.rel_error != 0.0)
                .map(|r| extremal_core::geom2d::Vec2(r.h.log10(), r.rel_error.abs().log10()))
                .collect(),
            stroke: COLORS[i % COLORS.len()],
        })
        .collect();
    out.text(
        "convergence.svg",
        &svg::line_plot(&series, "log10 h", "log10 |rel. error|", "lambda1 convergence", &out.digest),
    )?;

    let checks = check_table(records);
    let mut csv = String::from("theorem,pass,fail,min_margin\n");
    for c in &checks {
        writeln!(csv, "{},{},{},{:.6e}", c.theorem, c.pass, c.fail, c.min_margin).unwrap();
    }
    out.text("checks.csv", &csv)?;
    let bars: Vec<(String, usize, usize)> = checks.iter().map(|c| (c.theorem.clone(), c.pass, c.fail)).collect();
    out.text("checks.svg", &svg::pass_fail_bars(&bars, "theorem checks", &out.digest))?;

    let summary = json!({
        "records": records.len(),
        "version": records.first().map(|r| r.version.clone()),
        "failed_records": records.iter().filter(|r| r.status != "ok").count(),
        "convergence": conv,
        "checks": checks,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}
