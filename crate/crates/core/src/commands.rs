//! Scenario commands behind the `mram-dbo` binary.
//!
//! Each command reads a validated [`ScenarioConfig`], writes its CSV files
//! (and the effective configuration) atomically into the output directory,
//! optionally renders SVG plots from those CSVs, and returns a summary.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::config::{ScenarioConfig, SweepFamily};
use crate::device::{optimal_bias, Bias, DeviceParams};
use crate::engine::{
    compare_fixed_bias, grid_argmax, run_transient, sweep_margin, tracking_accuracy_map,
    tracking_over_temperature, Metrics,
};
use crate::error::{Error, Result};
use crate::io::{self, write_atomic, BerRow};
use crate::plot::{chart_from_csv, ChartSpec};
use crate::variation::{estimate_ber, BerMode, VariationSpec};

/// Name of the echoed post-default configuration.
pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

/// Closed-form optimum for the `vopt` command. `tmr0` may be zero.
pub fn vopt(tmr0: f64, vh: f64) -> Result<f64> {
    if !(tmr0.is_finite() && tmr0 >= 0.0) {
        return Err(Error::param("tmr0", format!("must be >= 0, got {tmr0}")));
    }
    if !(vh.is_finite() && vh > 0.0) {
        return Err(Error::param("vh", format!("must be > 0, got {vh}")));
    }
    Ok(optimal_bias(tmr0, vh))
}

/// Fixed-point rendering with `sig` significant digits.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.*}", sig.saturating_sub(1), x);
    }
    let mag = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn out_file(cfg: &ScenarioConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn write_out(cfg: &ScenarioConfig, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let p = out_file(cfg, name);
    write_atomic(&p, bytes)?;
    Ok(p)
}

fn echo_config(cfg: &ScenarioConfig) -> Result<()> {
    let text = cfg.to_toml_string()?;
    write_out(cfg, EFFECTIVE_CONFIG, text.as_bytes()).map(drop)
}

fn svg_for(csv: &Path) -> PathBuf {
    csv.with_extension("svg")
}

#[derive(Debug, Clone)]
pub struct SweepCurve {
    pub label: String,
    pub params: DeviceParams,
    pub v_opt: f64,
    pub v_opt_grid: f64,
    pub margin_max_a: f64,
    pub file: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub curves: Vec<SweepCurve>,
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>8} {:>8} {:>10} {:>10} {:>12}",
            "curve", "tmr0", "vh", "v_opt", "v_grid", "margin_max"
        )?;
        for c in &self.curves {
            writeln!(
                f,
                "{:<16} {:>8.4} {:>8.4} {:>10.5} {:>10.5} {:>9.4} uA",
                c.label,
                c.params.tmr0,
                c.params.vh,
                c.v_opt,
                c.v_opt_grid,
                c.margin_max_a * 1e6
            )?;
        }
        if let (Some(first), Some(last)) = (self.curves.first(), self.curves.last()) {
            if self.curves.len() > 1 {
                writeln!(
                    f,
                    "v_opt shift first->last: {:+.2} % (closed form), {:+.2} % (grid)",
                    100.0 * (last.v_opt / first.v_opt - 1.0),
                    100.0 * (last.v_opt_grid / first.v_opt_grid - 1.0)
                )?;
            }
        }
        Ok(())
    }
}

/// Margin-versus-bias curves for a parameter family.
pub fn sweep(cfg: &ScenarioConfig, plot: bool) -> Result<SweepSummary> {
    let s = &cfg.sweep;
    let at = cfg.device.params_at(s.temp_c)?;
    let curves: Vec<(String, DeviceParams)> = match s.family {
        SweepFamily::None => vec![("nominal".into(), at)],
        SweepFamily::Tmr0 => s
            .values
            .iter()
            .map(|&t| Ok((format!("tmr0_{t}"), DeviceParams::new(t, at.vh, at.rp)?)))
            .collect::<Result<_>>()?,
        SweepFamily::Vh => s
            .values
            .iter()
            .map(|&v| Ok((format!("vh_{v}"), DeviceParams::new(at.tmr0, v, at.rp)?)))
            .collect::<Result<_>>()?,
        SweepFamily::Temperature => s
            .values
            .iter()
            .map(|&t| Ok((format!("temp_{t}"), cfg.device.params_at(t)?)))
            .collect::<Result<_>>()?,
    };

    let mut out = Vec::with_capacity(curves.len());
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record([
        "curve",
        "tmr0",
        "vh",
        "rp",
        "v_opt",
        "v_opt_grid",
        "margin_max_a",
    ])?;
    for (label, p) in curves {
        let pts = sweep_margin(&p, s.v_min, s.v_max, s.points)?;
        let best = grid_argmax(&pts).expect("sweep has >= 2 points");
        let name = if s.family == SweepFamily::None {
            "sweep.csv".to_string()
        } else {
            format!("sweep_{label}.csv")
        };
        let file = write_out(cfg, &name, &io::sweep_csv(&pts)?)?;
        if plot {
            chart_from_csv(
                &file,
                &svg_for(&file),
                &ChartSpec {
                    title: &format!("Sensing margin vs read bias ({label})"),
                    x: "v_volts",
                    y: &["margin_a"],
                    x_label: "V_REF [V]",
                    y_label: "I_M [uA]",
                    y_scale: 1e6,
                },
            )?;
        }
        summary.write_record([
            label.clone(),
            io::fmt_f64(p.tmr0),
            io::fmt_f64(p.vh),
            io::fmt_f64(p.rp),
            io::fmt_f64(p.v_opt()),
            io::fmt_f64(best.v),
            io::fmt_f64(best.margin_a),
        ])?;
        out.push(SweepCurve {
            label,
            params: p,
            v_opt: p.v_opt(),
            v_opt_grid: best.v,
            margin_max_a: best.margin_a,
            file,
        });
    }
    let bytes = summary
        .into_inner()
        .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))?;
    write_out(cfg, "sweep_summary.csv", &bytes)?;
    echo_config(cfg)?;
    Ok(SweepSummary { curves: out })
}

#[derive(Debug, Clone)]
pub struct TransientSummary {
    pub metrics: Metrics,
    pub cycles: usize,
    pub warnings: usize,
    pub file: PathBuf,
}

impl fmt::Display for TransientSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.metrics;
        let opt = |c: Option<u64>| c.map_or("none".to_string(), |c| c.to_string());
        writeln!(f, "cycles={}", self.cycles)?;
        writeln!(f, "convergence_cycle={}", opt(m.convergence_cycle))?;
        writeln!(f, "lock_cycle={}", opt(m.lock_cycle))?;
        writeln!(f, "tracking_accuracy={:.6}", m.tracking_accuracy)?;
        writeln!(f, "ripple_pp_v={:.6}", m.ripple_pp)?;
        writeln!(f, "steady_v_ref={:.6}", m.steady_v_ref)?;
        writeln!(f, "steady_v_opt={:.6}", m.steady_v_opt)?;
        writeln!(f, "steady_margin_a={:.6e}", m.steady_margin_a)?;
        if self.warnings > 0 {
            writeln!(f, "warnings={}", self.warnings)?;
        }
        Ok(())
    }
}

fn plot_trace(file: &Path, title: &str) -> Result<()> {
    chart_from_csv(
        file,
        &svg_for(file),
        &ChartSpec {
            title,
            x: "time_s",
            y: &["v_ref", "v_opt"],
            x_label: "time [s]",
            y_label: "V [V]",
            y_scale: 1.0,
        },
    )
}

/// Power-up transient under `transient.schedule`.
pub fn transient(cfg: &ScenarioConfig, plot: bool) -> Result<TransientSummary> {
    let (trace, metrics) = run_transient(
        &cfg.device,
        &cfg.analog,
        &cfg.dbo,
        &cfg.transient.schedule,
        cfg.seed,
    )?;
    let file = write_out(cfg, "transient.csv", &io::trace_csv(&trace.records)?)?;
    if plot {
        plot_trace(&file, "DBO transient")?;
    }
    echo_config(cfg)?;
    Ok(TransientSummary {
        metrics,
        cycles: trace.records.len(),
        warnings: trace.warnings.len(),
        file,
    })
}

#[derive(Debug, Clone)]
pub struct DriftSummary {
    pub metrics: Metrics,
    pub fixed_bias: f64,
    pub final_temp_c: f64,
    pub dbo_margin_a: f64,
    pub fixed_margin_a: f64,
}

impl DriftSummary {
    /// Relative steady-state margin gain of the DBO over the fixed bias.
    pub fn improvement(&self) -> f64 {
        self.dbo_margin_a / self.fixed_margin_a - 1.0
    }
}

/// Circuit-level margin gain reported for the same drift scenario, which
/// includes amplifier effects this behavioral model leaves out.
pub const REPORTED_CIRCUIT_IMPROVEMENT: f64 = 0.20;

impl fmt::Display for DriftSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.metrics;
        writeln!(f, "final_temp_c={:.3}", self.final_temp_c)?;
        writeln!(f, "fixed_bias_v={:.6}", self.fixed_bias)?;
        writeln!(
            f,
            "steady_v_ref={:.6} (v_opt {:.6})",
            m.steady_v_ref, m.steady_v_opt
        )?;
        writeln!(
            f,
            "worst_tracking_after_lock={}",
            m.worst_tracking_after_lock
                .map_or("n/a".into(), |w| format!("{w:.5}"))
        )?;
        writeln!(f, "margin_dbo_a={:.6e}", self.dbo_margin_a)?;
        writeln!(f, "margin_fixed_a={:.6e}", self.fixed_margin_a)?;
        writeln!(
            f,
            "margin_improvement={:+.2} % (analytic model); reported circuit-level figure {:+.0} % is not reproduced",
            100.0 * self.improvement(),
            100.0 * REPORTED_CIRCUIT_IMPROVEMENT
        )
    }
}

/// Temperature drift with and without the DBO.
pub fn drift(cfg: &ScenarioConfig, plot: bool) -> Result<DriftSummary> {
    let sched = &cfg.drift.schedule;
    let (trace, metrics) = run_transient(&cfg.device, &cfg.analog, &cfg.dbo, sched, cfg.seed)?;
    let fixed_bias = cfg.device.params_at(cfg.drift.fixed_bias_temp_c)?.v_opt();
    let cmp = compare_fixed_bias(&trace, &cfg.device, Bias::new(fixed_bias)?)?;
    let file = write_out(cfg, "drift_trace.csv", &io::trace_csv(&trace.records)?)?;
    let mfile = write_out(cfg, "drift_margin.csv", &io::margin_comparison_csv(&cmp)?)?;
    if plot {
        plot_trace(&file, "DBO under temperature drift")?;
        chart_from_csv(
            &mfile,
            &svg_for(&mfile),
            &ChartSpec {
                title: "Sensing margin with and without DBO",
                x: "time_s",
                y: &["margin_dbo_a", "margin_fixed_a"],
                x_label: "time [s]",
                y_label: "I_M [uA]",
                y_scale: 1e6,
            },
        )?;
    }
    echo_config(cfg)?;
    let final_temp_c = trace.records.last().map_or(f64::NAN, |r| r.temp_c);
    let fixed_margin_a = cfg
        .device
        .params_at(final_temp_c)?
        .margin(Bias::new(fixed_bias)?);
    Ok(DriftSummary {
        dbo_margin_a: metrics.steady_margin_a,
        metrics,
        fixed_bias,
        final_temp_c,
        fixed_margin_a,
    })
}

#[derive(Debug, Clone)]
pub struct AccuracySummary {
    pub points: usize,
    pub min_accuracy: f64,
    pub mean_accuracy: f64,
    pub temperature_min_accuracy: Option<f64>,
}

impl fmt::Display for AccuracySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "grid_points={}", self.points)?;
        writeln!(f, "min_accuracy={:.5}", self.min_accuracy)?;
        writeln!(f, "mean_accuracy={:.5}", self.mean_accuracy)?;
        if let Some(t) = self.temperature_min_accuracy {
            writeln!(f, "temperature_min_accuracy={t:.5}")?;
        }
        Ok(())
    }
}

/// Tracking-accuracy map over the device grid, plus accuracy versus
/// temperature.
pub fn accuracy(cfg: &ScenarioConfig, plot: bool) -> Result<AccuracySummary> {
    let sec = &cfg.accuracy;
    let map = tracking_accuracy_map(&sec.grid, &cfg.analog, &cfg.dbo, cfg.seed)?;
    write_out(cfg, "accuracy_map.csv", &io::accuracy_csv(&map)?)?;
    let temperature_min_accuracy = if sec.temperatures_c.is_empty() {
        None
    } else {
        let pts = tracking_over_temperature(
            &cfg.device,
            &sec.temperatures_c,
            &cfg.analog,
            &cfg.dbo,
            sec.grid.duration_s,
            cfg.seed,
        )?;
        let file = write_out(
            cfg,
            "accuracy_temperature.csv",
            &io::temperature_accuracy_csv(&pts)?,
        )?;
        if plot {
            chart_from_csv(
                &file,
                &svg_for(&file),
                &ChartSpec {
                    title: "Optimal and DBO bias vs temperature",
                    x: "temp_c",
                    y: &["v_opt", "v_ref_mean"],
                    x_label: "T [C]",
                    y_label: "V [V]",
                    y_scale: 1.0,
                },
            )?;
        }
        Some(pts.iter().map(|p| p.accuracy).fold(f64::INFINITY, f64::min))
    };
    echo_config(cfg)?;
    let n = map.len();
    Ok(AccuracySummary {
        points: n,
        min_accuracy: map.iter().map(|p| p.accuracy).fold(f64::INFINITY, f64::min),
        mean_accuracy: map.iter().map(|p| p.accuracy).sum::<f64>() / n as f64,
        temperature_min_accuracy,
    })
}

#[derive(Debug, Clone)]
pub struct BerSummary {
    pub rows: Vec<BerRow>,
    pub fixed_bias: f64,
}

impl fmt::Display for BerSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fixed_bias_v={:.6}", self.fixed_bias)?;
        writeln!(
            f,
            "{:>7} {:>7} {:>12} {:>12} {:>9}",
            "temp_c", "sigma", "ber_dbo", "ber_fixed", "ratio"
        )?;
        for pair in self.rows.chunks(2) {
            if let [d, x] = pair {
                writeln!(
                    f,
                    "{:>7.1} {:>7.3} {:>12.4e} {:>12.4e} {:>9.3}",
                    d.result.temperature_c,
                    d.sigma_mu_tmr0,
                    d.result.ber,
                    x.result.ber,
                    x.result.ber / d.result.ber
                )?;
            }
        }
        Ok(())
    }
}

/// Reshapes the long BER table into one row per σ/μ at `temp_c` with a
/// log10 BER column per mode.
fn pivot_ber_csv(ber_csv: &Path, temp_c: f64) -> Result<Vec<u8>> {
    let mut rdr = csv::Reader::from_path(ber_csv)?;
    let mut rows: Vec<(f64, Option<f64>, Option<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Plot(format!("bad number `{}`: {e}", &rec[i])))
        };
        if num(2)? != temp_c {
            continue;
        }
        let (sigma, lg) = (num(3)?, num(5)?.max(1e-300).log10());
        let idx = match rows.iter().position(|r| r.0 == sigma) {
            Some(i) => i,
            None => {
                rows.push((sigma, None, None));
                rows.len() - 1
            }
        };
        match &rec[0] {
            "DBO" => rows[idx].1 = Some(lg),
            _ => rows[idx].2 = Some(lg),
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sigma_mu", "log10_ber_dbo", "log10_ber_fixed"])?;
    for (sigma, d, x) in rows {
        if let (Some(d), Some(x)) = (d, x) {
            w.write_record([io::fmt_f64(sigma), io::fmt_f64(d), io::fmt_f64(x)])?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Csv(csv::Error::from(e.into_error())))
}

/// BER table over temperatures × σ/μ grid × {DBO, FIXED}.
pub fn ber(cfg: &ScenarioConfig, plot: bool) -> Result<BerSummary> {
    let sec = &cfg.ber;
    let fixed_bias = match sec.fixed_bias_v {
        Some(v) => v,
        None => cfg.device.params_at(sec.fixed_bias_temp_c)?.v_opt(),
    };
    let fixed = BerMode::Fixed(Bias::new(fixed_bias)?);
    let mut rows = Vec::new();
    for &temp in &sec.temperatures_c {
        for &sm in &sec.sigma_mu_grid {
            let spec = VariationSpec {
                sigma_over_mu_tmr0: sm,
                sigma_over_mu_vh: sm,
                temperature_c: temp,
                seed: cfg.seed,
                ..cfg.variation.clone()
            };
            for mode in [BerMode::Dbo, fixed] {
                let result = estimate_ber(&spec, &cfg.device, mode, &cfg.dbo, &cfg.analog)?;
                rows.push(BerRow {
                    sigma_mu_tmr0: sm,
                    sigma_mu_vh: sm,
                    result,
                });
            }
        }
    }
    let file = write_out(cfg, "ber.csv", &io::ber_csv(&rows)?)?;
    if plot {
        for &temp in &sec.temperatures_c {
            let tmp = tempfile::tempdir().map_err(|e| Error::io(&file, e))?;
            let wide = tmp.path().join("ber_wide.csv");
            write_atomic(&wide, &pivot_ber_csv(&file, temp)?)?;
            chart_from_csv(
                &wide,
                &out_file(cfg, &format!("ber_{temp}C.svg")),
                &ChartSpec {
                    title: &format!("Bit error rate at {temp} C"),
                    x: "sigma_mu",
                    y: &["log10_ber_dbo", "log10_ber_fixed"],
                    x_label: "sigma/mu",
                    y_label: "log10(BER)",
                    y_scale: 1.0,
                },
            )?;
        }
    }
    echo_config(cfg)?;
    Ok(BerSummary { rows, fixed_bias })
}
