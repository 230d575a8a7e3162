//! Side-by-side comparison of evaluated runs.
//!
//! UCC cells carry `(✓)` when the sign matches the expected one (negative
//! for UCC_g, positive for UCC_mu) and `(×)` otherwise. In the markdown
//! table the best value per column is **bold** and the second best is
//! <u>underlined</u>; columns where several runs share the best value are
//! listed as ties.

use std::path::{Path, PathBuf};

use evsup_core::metrics::mean_abs;
use evsup_core::MetricsReport;

use crate::error::{AppError, AppResult};
use crate::fsutil::{create_dir, write};
use crate::reports::{fmt_opt, read_aggregate, read_deltas};
use crate::run::{DELTAS_FILE, EVAL_DIR, METRICS_FILE};

pub const COMPARE_HEADER: [&str; 14] = [
    "run",
    "dsc",
    "hd95",
    "ueo",
    "ece",
    "ucc_g",
    "ucc_g_sign",
    "ucc_mu",
    "ucc_mu_sign",
    "ur_g",
    "ur_mu",
    "mean_abs_d_dsc",
    "mean_abs_d_ece",
    "best_ties",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub report: MetricsReport,
    pub mean_abs_d_dsc: Option<f64>,
    pub mean_abs_d_ece: Option<f64>,
}

/// Locate the report directory of a run: `<run>/eval` or `<run>` itself.
pub fn resolve_eval_dir(path: &Path) -> AppResult<PathBuf> {
    for candidate in [path.join(EVAL_DIR), path.to_path_buf()] {
        if candidate.join(METRICS_FILE).is_file() {
            return Ok(candidate);
        }
    }
    Err(AppError::Missing(path.join(EVAL_DIR).join(METRICS_FILE)))
}

pub fn load_summary(path: &Path) -> AppResult<RunSummary> {
    let dir = resolve_eval_dir(path)?;
    let report = read_aggregate(&dir.join(METRICS_FILE))?;
    let deltas = read_deltas(&dir.join(DELTAS_FILE))?;
    let (dd, de) = if deltas.is_empty() {
        (None, None)
    } else {
        (Some(mean_abs(deltas.iter().map(|d| d.d_dsc))), Some(mean_abs(deltas.iter().map(|d| d.d_ece))))
    };
    let name = path
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path.display().to_string());
    Ok(RunSummary { name, report, mean_abs_d_dsc: dd, mean_abs_d_ece: de })
}

/// `(✓)` for the expected sign, `(×)` otherwise, empty when undefined.
pub fn sign_mark(value: Option<f64>, expect_positive: bool) -> &'static str {
    match value {
        Some(v) if (v > 0.0) == expect_positive && v != 0.0 => "(✓)",
        Some(_) => "(×)",
        None => "",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Best,
    Second,
    Other,
}

struct Column {
    name: &'static str,
    higher_better: bool,
    get: fn(&RunSummary) -> Option<f64>,
}

const COLUMNS: [Column; 10] = [
    Column { name: "dsc", higher_better: true, get: |r| Some(r.report.dsc) },
    Column { name: "hd95", higher_better: false, get: |r| r.report.hd95 },
    Column { name: "ueo", higher_better: true, get: |r| Some(r.report.ueo) },
    Column { name: "ece", higher_better: false, get: |r| Some(r.report.ece) },
    Column { name: "ucc_g", higher_better: false, get: |r| r.report.ucc_g },
    Column { name: "ucc_mu", higher_better: true, get: |r| r.report.ucc_mu },
    Column { name: "ur_g", higher_better: true, get: |r| r.report.ur_g },
    Column { name: "ur_mu", higher_better: true, get: |r| r.report.ur_mu },
    Column { name: "mean_abs_d_dsc", higher_better: false, get: |r| r.mean_abs_d_dsc },
    Column { name: "mean_abs_d_ece", higher_better: false, get: |r| r.mean_abs_d_ece },
];

/// Rank each run in one column; equal values share a rank. The flag is
/// set when more than one run holds the best value.
pub fn rank_column(values: &[Option<f64>], higher_better: bool) -> (Vec<Rank>, bool) {
    let key = |v: f64| if higher_better { -v } else { v };
    let mut distinct: Vec<f64> = values.iter().flatten().map(|&v| key(v)).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let ranks = values
        .iter()
        .map(|v| match v.map(key) {
            Some(k) if Some(&k) == distinct.first() => Rank::Best,
            Some(k) if Some(&k) == distinct.get(1) => Rank::Second,
            _ => Rank::Other,
        })
        .collect::<Vec<_>>();
    let tie = ranks.iter().filter(|r| **r == Rank::Best).count() > 1;
    (ranks, tie)
}

pub struct Comparison {
    pub markdown: String,
    pub csv: String,
    /// Columns whose best value is shared by several runs.
    pub ties: Vec<&'static str>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

pub fn build_comparison(runs: &[RunSummary]) -> AppResult<Comparison> {
    if runs.len() < 2 {
        return Err(AppError::Usage("compare needs at least two evaluated runs".into()));
    }
    let cols = &COLUMNS;
    let mut ranks = Vec::new();
    let mut ties = Vec::new();
    for c in cols {
        let values: Vec<Option<f64>> = runs.iter().map(c.get).collect();
        let (r, tie) = rank_column(&values, c.higher_better);
        if tie {
            ties.push(c.name);
        }
        ranks.push(r);
    }

    let mut md = String::from(
        "| run | DSC ↑ | HD95 ↓ | UEO ↑ | ECE ↓ | UCC_g | UCC_mu | UR_g ↑ | UR_mu ↑ | mean abs dDSC ↓ | mean abs dECE ↓ |\n",
    );
    md.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
    for (i, run) in runs.iter().enumerate() {
        let mut cells = vec![run.name.clone()];
        for (j, c) in cols.iter().enumerate() {
            let v = (c.get)(run);
            let mut s = cell(v);
            if v.is_some() {
                s = match ranks[j][i] {
                    Rank::Best => format!("**{s}**"),
                    Rank::Second => format!("<u>{s}</u>"),
                    Rank::Other => s,
                };
            }
            match c.name {
                "ucc_g" => s.push_str(sign_mark(v, false)),
                "ucc_mu" => s.push_str(sign_mark(v, true)),
                _ => {}
            }
            cells.push(s);
        }
        md.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    md.push_str("\n(✓) / (×): UCC sign matches / opposes the expected sign (UCC_g < 0, UCC_mu > 0).\n");
    md.push_str("**bold**: best, <u>underline</u>: second best.\n");
    if !ties.is_empty() {
        md.push_str(&format!("Ties for best: {}.\n", ties.join(", ")));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| AppError::Usage(e.to_string());
    w.write_record(COMPARE_HEADER).map_err(to_err)?;
    for run in runs {
        let r = &run.report;
        w.write_record([
            run.name.clone(),
            fmt_opt(Some(r.dsc)),
            fmt_opt(r.hd95),
            fmt_opt(Some(r.ueo)),
            fmt_opt(Some(r.ece)),
            fmt_opt(r.ucc_g),
            sign_mark(r.ucc_g, false).to_string(),
            fmt_opt(r.ucc_mu),
            sign_mark(r.ucc_mu, true).to_string(),
            fmt_opt(r.ur_g),
            fmt_opt(r.ur_mu),
            fmt_opt(run.mean_abs_d_dsc),
            fmt_opt(run.mean_abs_d_ece),
            ties.join(";"),
        ])
        .map_err(to_err)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| AppError::Usage(e.to_string()))?).expect("csv is utf-8");
    Ok(Comparison { markdown: md, csv, ties })
}

/// Compare evaluated runs, writing `comparison.md` and `comparison.csv`.
pub fn compare_runs(runs: &[PathBuf], out: &Path) -> AppResult<Comparison> {
    if runs.len() < 2 {
        return Err(AppError::Usage("compare needs at least two evaluated runs".into()));
    }
    let summaries = runs.iter().map(|p| load_summary(p)).collect::<AppResult<Vec<_>>>()?;
    let cmp = build_comparison(&summaries)?;
    create_dir(out)?;
    write(&out.join("comparison.md"), &cmp.markdown)?;
    write(&out.join("comparison.csv"), &cmp.csv)?;
    Ok(cmp)
}
