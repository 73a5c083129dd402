//! CSV serialization and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::engine::{AccuracyPoint, CycleRecord, MarginComparison, SweepPoint, TemperaturePoint};
use crate::error::{Error, Result};
use crate::variation::{BerMode, BerResult};

pub const TRACE_HEADER: [&str; 11] = [
    "cycle", "time_s", "temp_c", "v_ref", "v_m", "v_s", "flip", "coarse", "pump_cmd", "v_opt",
    "margin_a",
];
pub const SWEEP_HEADER: [&str; 2] = ["v_volts", "margin_a"];
pub const BER_HEADER: [&str; 8] = [
    "mode",
    "v_read",
    "temp_c",
    "sigma_mu_tmr0",
    "sigma_mu_vh",
    "ber",
    "stderr",
    "n_cells",
];

/// Formats a float so it round-trips exactly and carries at least nine
/// significant digits.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let short = format!("{x:e}");
    let digits = short
        .split('e')
        .next()
        .unwrap_or("")
        .chars()
        .filter(char::is_ascii_digit)
        .count();
    if digits >= 9 {
        short
    } else {
        format!("{x:.8e}")
    }
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))
}

pub fn trace_csv(records: &[CycleRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record([
            r.cycle.to_string(),
            fmt_f64(r.time_s),
            fmt_f64(r.temp_c),
            fmt_f64(r.v_ref),
            fmt_f64(r.v_m),
            fmt_f64(r.v_s),
            bit(r.flip).into(),
            bit(r.coarse).into(),
            r.pump_cmd.as_str().into(),
            fmt_f64(r.v_opt),
            fmt_f64(r.margin_a),
        ])?;
    }
    finish(w)
}

pub fn sweep_csv(points: &[SweepPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for p in points {
        w.write_record([fmt_f64(p.v), fmt_f64(p.margin_a)])?;
    }
    finish(w)
}

/// One row of the BER table.
#[derive(Debug, Clone, Copy)]
pub struct BerRow {
    pub sigma_mu_tmr0: f64,
    pub sigma_mu_vh: f64,
    pub result: BerResult,
}

pub fn ber_csv(rows: &[BerRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BER_HEADER)?;
    for row in rows {
        let r = &row.result;
        let v_read = match r.mode {
            BerMode::Fixed(v) => v.volts(),
            BerMode::Dbo => r.mean_v_read,
        };
        w.write_record([
            r.mode.label().to_string(),
            fmt_f64(v_read),
            fmt_f64(r.temperature_c),
            fmt_f64(row.sigma_mu_tmr0),
            fmt_f64(row.sigma_mu_vh),
            fmt_f64(r.ber),
            fmt_f64(r.stderr),
            r.n_cells_evaluated.to_string(),
        ])?;
    }
    finish(w)
}

pub fn accuracy_csv(points: &[AccuracyPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "tmr0",
        "vh",
        "v_opt",
        "v_ref_mean",
        "accuracy",
        "ripple_pp",
        "convergence_cycle",
    ])?;
    for p in points {
        w.write_record([
            fmt_f64(p.tmr0),
            fmt_f64(p.vh),
            fmt_f64(p.v_opt),
            fmt_f64(p.steady_v_ref),
            fmt_f64(p.accuracy),
            fmt_f64(p.ripple_pp),
            p.convergence_cycle.map_or(String::new(), |c| c.to_string()),
        ])?;
    }
    finish(w)
}

pub fn temperature_accuracy_csv(points: &[TemperaturePoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["temp_c", "v_opt", "v_ref_mean", "accuracy"])?;
    for p in points {
        w.write_record([
            fmt_f64(p.temp_c),
            fmt_f64(p.v_opt),
            fmt_f64(p.steady_v_ref),
            fmt_f64(p.accuracy),
        ])?;
    }
    finish(w)
}

pub fn margin_comparison_csv(rows: &[MarginComparison]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "cycle",
        "time_s",
        "temp_c",
        "margin_dbo_a",
        "margin_fixed_a",
    ])?;
    for r in rows {
        w.write_record([
            r.cycle.to_string(),
            fmt_f64(r.time_s),
            fmt_f64(r.temp_c),
            fmt_f64(r.margin_dbo_a),
            fmt_f64(r.margin_fixed_a),
        ])?;
    }
    finish(w)
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
