//! CSV writers and readers. Floats use Rust's shortest round-trip
//! formatting; undefined values are empty cells.

use std::path::Path;

use evsup_core::metrics::{LevelScore, ScoreDelta};
use evsup_core::train::EpochLosses;
use evsup_core::MetricsReport;

use crate::error::{AppError, AppResult};

pub const EPOCH_LOG_HEADER: [&str; 8] = ["epoch", "L_CE", "L_Dice", "L_KL", "L_gu", "L_nu", "L_total", "val_DSC"];
pub const METRICS_HEADER: [&str; 12] =
    ["image", "dsc", "hd95", "ece", "ueo", "ucc_g", "ucc_mu", "ur_g", "ur_mu", "ur_g_ties", "dsc_per_class", "flags"];
pub const LEVELS_HEADER: [&str; 3] = ["mu", "dsc", "ece"];
pub const DELTAS_HEADER: [&str; 4] = ["mu_hi", "mu_lo", "d_dsc", "d_ece"];
/// Row id of the split-level average in the metrics CSV.
pub const AGGREGATE_ROW: &str = "mean";

pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e))?;
    w.write_record(header).map_err(|e| AppError::format(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| AppError::format(path, e))?;
    }
    w.flush().map_err(AppError::io(path))
}

/// Epoch log row: losses plus the validation DSC after that epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRow {
    pub losses: EpochLosses,
    pub val_dsc: f64,
}

pub fn write_epoch_log(path: &Path, rows: &[EpochRow]) -> AppResult<()> {
    write_rows(
        path,
        &EPOCH_LOG_HEADER,
        rows.iter().map(|r| {
            let l = &r.losses;
            vec![
                l.epoch.to_string(),
                fmt(l.ce),
                fmt(l.dice),
                fmt(l.kl),
                fmt_opt(l.gu),
                fmt_opt(l.nu),
                fmt(l.total),
                fmt(r.val_dsc),
            ]
        }),
    )
}

fn metrics_row(id: &str, r: &MetricsReport) -> Vec<String> {
    vec![
        id.to_string(),
        fmt(r.dsc),
        fmt_opt(r.hd95),
        fmt(r.ece),
        fmt(r.ueo),
        fmt_opt(r.ucc_g),
        fmt_opt(r.ucc_mu),
        fmt_opt(r.ur_g),
        fmt_opt(r.ur_mu),
        fmt_opt(r.ur_g_ties),
        r.dsc_per_class.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(";"),
        r.flags.join("; "),
    ]
}

/// Per-image rows followed by the aggregate row.
pub fn write_metrics(path: &Path, per_image: &[(String, MetricsReport)], aggregate: &MetricsReport) -> AppResult<()> {
    let rows = per_image
        .iter()
        .map(|(id, r)| metrics_row(id, r))
        .chain(std::iter::once(metrics_row(AGGREGATE_ROW, aggregate)));
    write_rows(path, &METRICS_HEADER, rows)
}

pub fn write_levels(path: &Path, levels: &[LevelScore]) -> AppResult<()> {
    write_rows(path, &LEVELS_HEADER, levels.iter().map(|l| vec![fmt(l.mu), fmt(l.dsc), fmt(l.ece)]))
}

pub fn write_deltas(path: &Path, deltas: &[ScoreDelta]) -> AppResult<()> {
    write_rows(
        path,
        &DELTAS_HEADER,
        deltas.iter().map(|d| vec![fmt(d.mu_hi), fmt(d.mu_lo), fmt(d.d_dsc), fmt(d.d_ece)]),
    )
}

/// Header-keyed rows of a CSV file.
pub fn read_table(path: &Path) -> AppResult<(Vec<String>, Vec<Vec<String>>)> {
    if !path.is_file() {
        return Err(AppError::Missing(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| AppError::format(path, e))?;
    let header = r.headers().map_err(|e| AppError::format(path, e))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(|e| AppError::format(path, e)))
        .collect::<AppResult<Vec<Vec<String>>>>()?;
    Ok((header, rows))
}

pub fn parse_cell(path: &Path, cell: &str) -> AppResult<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| AppError::format(path, format!("bad number `{cell}`")))
}

/// Aggregate row of a metrics CSV as a report (flags and per-class kept).
pub fn read_aggregate(path: &Path) -> AppResult<MetricsReport> {
    let (header, rows) = read_table(path)?;
    if header != METRICS_HEADER {
        return Err(AppError::format(path, "unexpected metrics header"));
    }
    let row = rows
        .iter()
        .find(|r| r.first().map(String::as_str) == Some(AGGREGATE_ROW))
        .ok_or_else(|| AppError::format(path, "no aggregate row"))?;
    let num = |i: usize| parse_cell(path, &row[i]);
    let req = |i: usize| num(i)?.ok_or_else(|| AppError::format(path, format!("empty `{}`", METRICS_HEADER[i])));
    Ok(MetricsReport {
        dsc: req(1)?,
        hd95: num(2)?,
        ece: req(3)?,
        ueo: req(4)?,
        ucc_g: num(5)?,
        ucc_mu: num(6)?,
        ur_g: num(7)?,
        ur_mu: num(8)?,
        ur_g_ties: num(9)?,
        dsc_per_class: row[10]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| parse_cell(path, s).map(Option::unwrap_or_default))
            .collect::<AppResult<_>>()?,
        flags: row[11].split("; ").filter(|s| !s.is_empty()).map(String::from).collect(),
    })
}

pub fn read_deltas(path: &Path) -> AppResult<Vec<ScoreDelta>> {
    let (header, rows) = read_table(path)?;
    if header != DELTAS_HEADER {
        return Err(AppError::format(path, "unexpected deltas header"));
    }
    rows.iter()
        .map(|r| {
            let v = |i: usize| parse_cell(path, &r[i]).map(Option::unwrap_or_default);
            Ok(ScoreDelta { mu_hi: v(0)?, mu_lo: v(1)?, d_dsc: v(2)?, d_ece: v(3)? })
        })
        .collect()
}
