//! Artifact emission: the diagnostics CSV, the run summary JSON, and the
//! plot-ready long-format report.
//!
//! Every artifact embeds the grid, preset and code-version metadata needed
//! to reproduce it; nothing time- or thread-dependent is written, so
//! identical invocations produce byte-identical files.

use std::fs;
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::lemmas::{fit_power_law, time_average, Trajectory};
use crate::scenarios::{self, PropertyResult, PropertyTag};
use crate::transport::{RunConfig, RunOutput, RunStatus};

pub const CSV_HEADER: &str = "t,E_P,E,K,u2_l2sq,u_l2sq,theta_h0,theta_h1,theta_h2,theta_h3,theta_h4,gradpsi_hk,d2E_integrand,mass,linf,bc_drift";

/// Reproducibility metadata stamped into every artifact header.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Metadata {
    pub preset: String,
    pub seed: u64,
    pub version: &'static str,
}

impl Metadata {
    pub fn new(preset: impl Into<String>, seed: u64) -> Self {
        Metadata { preset: preset.into(), seed, version: env!("CARGO_PKG_VERSION") }
    }
}

fn fmt(v: f64) -> String {
    // normalize negative zero so all-zero columns read cleanly
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn csv_preamble(meta: &Metadata, config: &RunConfig) -> String {
    format!(
        "# stratlab {}\n# preset = {}\n# seed = {}\n# model = {}, n1 = {}, n2 = {}, fd_order = {}, ic_epsilon = {}\n",
        meta.version,
        meta.preset,
        meta.seed,
        config.model,
        config.n1,
        config.n2,
        config.fd_order,
        fmt(config.ic_epsilon),
    )
}

pub fn render_diagnostics_csv(
    records: &[DiagnosticsRecord],
    meta: &Metadata,
    config: &RunConfig,
) -> String {
    let mut out = csv_preamble(meta, config);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let row = [
            r.t,
            r.e_p,
            r.e,
            r.k,
            r.u2_l2sq,
            r.u_l2sq,
            r.theta_hk[0],
            r.theta_hk[1],
            r.theta_hk[2],
            r.theta_hk[3],
            r.theta_hk[4],
            r.gradpsi_hk,
            r.d2e_integrand,
            r.mass,
            r.linf,
            r.bc_drift,
        ];
        let cells: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_diagnostics_csv(
    path: &Path,
    records: &[DiagnosticsRecord],
    meta: &Metadata,
    config: &RunConfig,
) -> Result<()> {
    fs::write(path, render_diagnostics_csv(records, meta, config))?;
    Ok(())
}

/// Parse a diagnostics CSV back into records (comment lines skipped).
pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    use crate::error::Error;
    let mut records = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad CSV cell `{c}`")))
            })
            .collect::<Result<_>>()?;
        if cells.len() != 16 {
            return Err(Error::Config(format!("expected 16 CSV columns, got {}", cells.len())));
        }
        records.push(DiagnosticsRecord {
            t: cells[0],
            e_p: cells[1],
            e: cells[2],
            k: cells[3],
            u2_l2sq: cells[4],
            u_l2sq: cells[5],
            theta_hk: [cells[6], cells[7], cells[8], cells[9], cells[10]],
            gradpsi_hk: cells[11],
            d2e_integrand: cells[12],
            mass: cells[13],
            linf: cells[14],
            bc_drift: cells[15],
        });
    }
    Ok(records)
}

/// Fitted decay exponents of the energy cascade; the K and u2 series are
/// fitted through their running time averages.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Exponents {
    pub e: Option<f64>,
    pub k_avg: Option<f64>,
    pub u2_avg: Option<f64>,
}

/// Machine-readable run summary.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Summary {
    pub preset: String,
    pub seed: u64,
    pub version: &'static str,
    pub model: String,
    pub n1: usize,
    pub n2: usize,
    pub fd_order: usize,
    pub t_end: f64,
    pub sample_dt: f64,
    pub status: RunStatus,
    pub samples: usize,
    pub exponents: Exponents,
    pub resid_e_max: f64,
    pub resid_k_max: f64,
    pub mass_drift: f64,
    pub bc_drift_max: f64,
    pub rearrangement_drift_final: f64,
    pub properties: Vec<PropertyResult>,
    pub all_properties_pass: bool,
}

/// Time-averaged series (mean over [t/2, t]) of a record column, sampled on
/// the record times that admit the window.
pub fn averaged_series(
    records: &[DiagnosticsRecord],
    get: impl Fn(&DiagnosticsRecord) -> f64,
) -> Result<Trajectory> {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let values: Vec<f64> = records.iter().map(|r| get(r).max(0.0)).collect();
    let tr = Trajectory::new(times, values)?;
    let mut avg_t = Vec::new();
    let mut avg_v = Vec::new();
    for r in records.iter().skip(1) {
        if let Ok(v) = time_average(&tr, r.t) {
            avg_t.push(r.t);
            avg_v.push(v.max(0.0));
        }
    }
    Trajectory::new(avg_t, avg_v)
}

fn fit_window(records: &[DiagnosticsRecord], config: &RunConfig) -> (f64, f64) {
    let _ = records;
    (config.t_end / 5.0, config.t_end)
}

pub fn build_summary(
    meta: &Metadata,
    config: &RunConfig,
    expected: &[PropertyTag],
    output: &RunOutput,
) -> Summary {
    let records = &output.records;
    let (lo, hi) = fit_window(records, config);

    let e_fit = scenarios::fitted_exponent(records, config, |r| r.e);
    let k_fit = averaged_series(records, |r| r.k)
        .ok()
        .and_then(|tr| fit_power_law(&tr, lo, hi).ok())
        .map(|f| f.exponent);
    let u2_fit = averaged_series(records, |r| r.u2_l2sq)
        .ok()
        .and_then(|tr| fit_power_law(&tr, lo, hi).ok())
        .map(|f| f.exponent);

    let (resid_e_max, resid_k_max) = scenarios::identity_residuals(records);
    let m0 = records.first().map(|r| r.mass).unwrap_or(0.0);
    let mass_drift = records.iter().fold(0.0f64, |acc, r| acc.max((r.mass - m0).abs()));
    let bc_drift_max = records.iter().fold(0.0f64, |acc, r| acc.max(r.bc_drift));
    let rearrangement_drift_final = output.drift.last().map(|d| d.1).unwrap_or(0.0);

    let properties = scenarios::evaluate_properties(expected, config, output);
    let all_properties_pass =
        properties.iter().all(|p| p.pass) && output.status == RunStatus::Completed;

    Summary {
        preset: meta.preset.clone(),
        seed: meta.seed,
        version: meta.version,
        model: config.model.to_string(),
        n1: config.n1,
        n2: config.n2,
        fd_order: config.fd_order,
        t_end: config.t_end,
        sample_dt: config.sample_dt,
        status: output.status.clone(),
        samples: records.len(),
        exponents: Exponents { e: e_fit, k_avg: k_fit, u2_avg: u2_fit },
        resid_e_max,
        resid_k_max,
        mass_drift,
        bc_drift_max,
        rearrangement_drift_final,
        properties,
        all_properties_pass,
    }
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Long-format (t, series, value) CSV for plotting consumers.
pub fn render_report_csv(records: &[DiagnosticsRecord], meta: &Metadata, config: &RunConfig) -> String {
    let mut out = csv_preamble(meta, config);
    out.push_str("t,series,value\n");
    for r in records {
        let series: [(&str, f64); 16] = [
            ("E_P", r.e_p),
            ("E", r.e),
            ("K", r.k),
            ("u2_l2sq", r.u2_l2sq),
            ("u_l2sq", r.u_l2sq),
            ("theta_h0", r.theta_hk[0]),
            ("theta_h1", r.theta_hk[1]),
            ("theta_h2", r.theta_hk[2]),
            ("theta_h3", r.theta_hk[3]),
            ("theta_h4", r.theta_hk[4]),
            ("gradpsi_hk", r.gradpsi_hk),
            ("d2E_integrand", r.d2e_integrand),
            ("mass", r.mass),
            ("linf", r.linf),
            ("bc_drift", r.bc_drift),
            ("t", r.t),
        ];
        for (name, value) in series.iter().take(15) {
            out.push_str(&format!("{},{},{}\n", fmt(r.t), name, fmt(*value)));
        }
    }
    out
}
