//! Writes a sweep report to disk: one CSV of per-sample records, one JSON
//! summary, and per-metric SVG plots with one polyline per eps.
//!
//! The CSV carries no timestamp, so identical runs produce byte-identical
//! files; the JSON summary records its creation time in `created_unix` and
//! is otherwise reproducible too.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;

use super::svg::{line_plot, Series};
use super::sweep::{SweepRecord, SweepReport};

/// Column order of `sweep.csv`. Optional columns (`geostrophic_residual`,
/// `qg_mismatch`; only produced by m = 1 runs) are left empty when absent.
pub const CSV_SCHEMA: [&str; 13] = [
    "eps",
    "t",
    "taylor_proudman",
    "boussinesq_residual",
    "geostrophic_residual",
    "qg_mismatch",
    "total_mass",
    "total_energy",
    "relative_entropy",
    "balance_residual",
    "sigma_min",
    "rho_min",
    "parity_defect",
];

#[derive(Debug, Clone, Copy)]
pub struct ReportFormats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for ReportFormats {
    fn default() -> Self {
        ReportFormats {
            csv: true,
            json: true,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReportFiles {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svgs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    created_unix: u64,
    config_hash: &'a str,
    config: &'a super::config::RunConfig,
    n_records: usize,
    csv_schema: [&'static str; 13],
    summaries: &'a [super::sweep::EpsSummary],
    flags: &'a super::sweep::SweepFlags,
    slopes: &'a Option<super::sweep::SweepSlopes>,
}

pub fn emit_report(
    report: &SweepReport,
    out_dir: &Path,
    formats: ReportFormats,
) -> Result<ReportFiles> {
    fs::create_dir_all(out_dir)?;
    let mut files = ReportFiles::default();

    if formats.csv {
        let path = out_dir.join("sweep.csv");
        fs::write(&path, render_csv(&report.records))?;
        files.csv = Some(path);
    }

    if formats.json {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let summary = JsonSummary {
            created_unix,
            config_hash: &report.config_hash,
            config: &report.config,
            n_records: report.records.len(),
            csv_schema: CSV_SCHEMA,
            summaries: &report.summaries,
            flags: &report.flags,
            slopes: &report.slopes,
        };
        let body = serde_json::to_string_pretty(&summary)
            .map_err(|e| crate::error::Error::Structural(format!("summary encode: {e}")))?;
        let path = out_dir.join("summary.json");
        fs::write(&path, body + "\n")?;
        files.json = Some(path);
    }

    if formats.svg {
        for (name, title, extract) in metric_plots() {
            let series = per_eps_series(&report.records, extract);
            if series.iter().all(|s| s.points.is_empty()) {
                continue;
            }
            let svg = line_plot(title, "t", title, &series);
            let path = out_dir.join(format!("{name}.svg"));
            fs::write(&path, svg)?;
            files.svgs.push(path);
        }
    }

    Ok(files)
}

type Extract = fn(&SweepRecord) -> Option<f64>;

fn metric_plots() -> [(&'static str, &'static str, Extract); 4] {
    [
        (
            "taylor_proudman",
            "taylor_proudman",
            (|r| Some(r.taylor_proudman)) as Extract,
        ),
        (
            "boussinesq",
            "boussinesq_residual",
            (|r| Some(r.boussinesq_residual)) as Extract,
        ),
        (
            "geostrophic",
            "geostrophic_residual",
            (|r| r.geostrophic_residual) as Extract,
        ),
        ("qg_mismatch", "qg_mismatch", (|r| r.qg_mismatch) as Extract),
    ]
}

fn per_eps_series(records: &[SweepRecord], extract: Extract) -> Vec<Series> {
    let mut eps_order: Vec<f64> = Vec::new();
    for r in records {
        if !eps_order.contains(&r.eps) {
            eps_order.push(r.eps);
        }
    }
    eps_order
        .into_iter()
        .map(|eps| Series {
            label: format!("eps={eps}"),
            points: records
                .iter()
                .filter(|r| r.eps == eps)
                .filter_map(|r| extract(r).map(|v| (r.t, v)))
                .collect(),
        })
        .collect()
}

fn render_csv(records: &[SweepRecord]) -> String {
    let mut out = CSV_SCHEMA.join(",");
    out.push('\n');
    for r in records {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.eps,
            r.t,
            r.taylor_proudman,
            r.boussinesq_residual,
            opt(r.geostrophic_residual),
            opt(r.qg_mismatch),
            r.total_mass,
            r.total_energy,
            r.relative_entropy,
            r.balance_residual,
            r.sigma_min,
            r.rho_min,
            r.parity_defect,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::config::RunConfig;
    use super::super::sweep::{EpsSummary, SweepFlags, SweepRecord, SweepReport};
    use super::*;

    fn record(eps: f64, t: f64, with_geo: bool) -> SweepRecord {
        SweepRecord {
            eps,
            t,
            taylor_proudman: 0.5 * eps + t,
            boussinesq_residual: eps * (1.0 + t),
            geostrophic_residual: with_geo.then_some(eps * 0.3),
            qg_mismatch: with_geo.then_some(eps * 0.1),
            total_mass: 1.0,
            total_energy: 2.0,
            relative_entropy: 0.01,
            balance_residual: 1e-9,
            sigma_min: 0.0,
            rho_min: 0.8,
            parity_defect: 1e-16,
        }
    }

    fn synthetic_report(with_geo: bool) -> SweepReport {
        let mut records = Vec::new();
        for &eps in &[0.4, 0.2] {
            for &t in &[0.0, 0.05, 0.1] {
                records.push(record(eps, t, with_geo));
            }
        }
        let summaries = [0.4, 0.2]
            .iter()
            .map(|&eps| EpsSummary {
                eps,
                avg_taylor_proudman: eps,
                avg_boussinesq: eps,
                avg_geostrophic: with_geo.then_some(eps),
                gamma_modulus: 0.1,
                w_modulus: 1.0 / eps,
                mass_drift_rel: 0.0,
                rho_min: 0.8,
                steps_taken: 10,
                config_hash: "f00f".into(),
            })
            .collect();
        SweepReport {
            config: RunConfig::default(),
            config_hash: "f00f".into(),
            records,
            summaries,
            flags: SweepFlags::default(),
            slopes: None,
        }
    }

    #[test]
    fn emits_csv_json_and_one_svg_per_available_metric() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&synthetic_report(true), dir.path(), ReportFormats::default())
            .unwrap();

        let csv = std::fs::read_to_string(files.csv.as_ref().unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 6);
        assert_eq!(lines[0], CSV_SCHEMA.join(","));
        assert_eq!(lines[1].split(',').count(), CSV_SCHEMA.len());

        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(files.json.as_ref().unwrap()).unwrap())
                .unwrap();
        assert_eq!(json["n_records"], 6);
        assert_eq!(json["config_hash"], "f00f");
        assert!(json["created_unix"].as_u64().unwrap() > 0);
        assert_eq!(json["summaries"].as_array().unwrap().len(), 2);

        assert_eq!(files.svgs.len(), 4);
        for p in &files.svgs {
            let body = std::fs::read_to_string(p).unwrap();
            assert_eq!(body.matches("<polyline").count(), 2, "{}", p.display());
        }
    }

    #[test]
    fn optional_columns_go_empty_and_their_plots_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&synthetic_report(false), dir.path(), ReportFormats::default())
            .unwrap();
        let csv = std::fs::read_to_string(files.csv.unwrap()).unwrap();
        let second = csv.lines().nth(1).unwrap();
        let cols: Vec<&str> = second.split(',').collect();
        assert_eq!(cols[4], "");
        assert_eq!(cols[5], "");
        let names: Vec<String> = files
            .svgs
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(!names.contains(&"geostrophic.svg".to_string()));
        assert!(!names.contains(&"qg_mismatch.svg".to_string()));
        assert_eq!(files.svgs.len(), 2);
    }

    #[test]
    fn csv_and_svg_bytes_reproduce_exactly() {
        let report = synthetic_report(true);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let f1 = emit_report(&report, d1.path(), ReportFormats::default()).unwrap();
        let f2 = emit_report(&report, d2.path(), ReportFormats::default()).unwrap();
        assert_eq!(
            std::fs::read(f1.csv.unwrap()).unwrap(),
            std::fs::read(f2.csv.unwrap()).unwrap()
        );
        for (a, b) in f1.svgs.iter().zip(&f2.svgs) {
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        }
        // JSON differs only in created_unix
        let mut ja: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(f1.json.unwrap()).unwrap()).unwrap();
        let mut jb: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(f2.json.unwrap()).unwrap()).unwrap();
        ja["created_unix"] = 0.into();
        jb["created_unix"] = 0.into();
        assert_eq!(ja, jb);
    }

    #[test]
    fn no_records_still_yields_a_header_and_valid_json() {
        let mut report = synthetic_report(true);
        report.records.clear();
        report.summaries.clear();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report, dir.path(), ReportFormats::default()).unwrap();
        let csv = std::fs::read_to_string(files.csv.unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(files.svgs.is_empty());
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(files.json.unwrap()).unwrap()).unwrap();
        assert_eq!(json["n_records"], 0);
    }
}
