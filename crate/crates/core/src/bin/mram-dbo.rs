//! Command-line front end for the `mram_dbo` library.
//!
//! Precedence is flag > config file > built-in default.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mram_dbo::commands;
use mram_dbo::config::{SweepFamily, DEFAULT_DRIFT_RATE};
use mram_dbo::engine::ThermalSchedule;
use mram_dbo::{Result, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(
    name = "mram-dbo",
    version,
    about = "MRAM read-path simulator with dynamic bias optimization"
)]
struct Cli {
    /// TOML scenario file; omitted fields take the defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV, SVG and the effective config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also render SVG plots from the CSV output.
    #[arg(long, global = true)]
    plot: bool,
    /// Suppress the printed summary.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print the margin-optimal read bias for one device.
    Vopt {
        #[arg(long, allow_negative_numbers = true, value_parser = non_negative)]
        tmr0: f64,
        #[arg(long, allow_negative_numbers = true, value_parser = positive)]
        vh: f64,
    },
    /// Margin versus read bias, optionally for a family of curves.
    Sweep(SweepArgs),
    /// Power-up settling of the bias loop at constant temperature.
    Transient(TransientArgs),
    /// Temperature ramp with and without the bias loop.
    Drift(DriftArgs),
    /// Tracking accuracy over a device grid and over temperature.
    Accuracy(AccuracyArgs),
    /// Bit error rate over a variation grid, DBO versus a fixed bias.
    Ber(BerArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    None,
    Tmr0,
    Vh,
    Temperature,
}

impl From<Family> for SweepFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::None => SweepFamily::None,
            Family::Tmr0 => SweepFamily::Tmr0,
            Family::Vh => SweepFamily::Vh,
            Family::Temperature => SweepFamily::Temperature,
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    v_min: Option<f64>,
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    temp: Option<f64>,
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Comma-separated family values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct TransientArgs {
    /// Run at this constant temperature instead of the configured schedule.
    #[arg(long, allow_negative_numbers = true)]
    temp: Option<f64>,
    /// Duration of the constant-temperature run, seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args, Debug)]
struct DriftArgs {
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    /// Ramp rate, °C/s.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    fixed_bias_temp: Option<f64>,
}

#[derive(Args, Debug)]
struct AccuracyArgs {
    #[arg(long, allow_negative_numbers = true)]
    temp: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args, Debug)]
struct BerArgs {
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sigma_mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    temps: Option<Vec<f64>>,
    /// Sense-amplifier offset sigma, amperes.
    #[arg(long)]
    sa_sigma: Option<f64>,
    #[arg(long)]
    fixed_bias: Option<f64>,
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        Ok(v) => Err(format!("must be >= 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("must be > 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn apply(cfg: &mut ScenarioConfig, cmd: &Cmd) -> Result<()> {
    match cmd {
        Cmd::Vopt { .. } => {}
        Cmd::Sweep(a) => {
            let s = &mut cfg.sweep;
            s.v_min = a.v_min.unwrap_or(s.v_min);
            s.v_max = a.v_max.unwrap_or(s.v_max);
            s.points = a.points.unwrap_or(s.points);
            s.temp_c = a.temp.unwrap_or(s.temp_c);
            if let Some(f) = a.family {
                s.family = f.into();
            }
            if let Some(v) = &a.values {
                s.values = v.clone();
            }
        }
        Cmd::Transient(a) => {
            if a.temp.is_some() || a.duration.is_some() {
                let cur = &cfg.transient.schedule;
                let temp = a.temp.unwrap_or(cur.temp_at(0.0));
                let dur = a.duration.unwrap_or(cur.total_duration_s());
                cfg.transient.schedule = ThermalSchedule::constant(temp, dur)?;
            }
        }
        Cmd::Drift(a) => {
            if a.from.is_some() || a.to.is_some() || a.rate.is_some() {
                let sched = &cfg.drift.schedule;
                let from = a.from.unwrap_or(sched.temp_at(0.0));
                let to = a.to.unwrap_or(sched.temp_at(sched.total_duration_s()));
                let rate = a.rate.unwrap_or(DEFAULT_DRIFT_RATE);
                let (pre, post) = hold_times(sched);
                cfg.drift.schedule = ThermalSchedule::ramp_between(from, to, rate, pre, post)?;
            }
            if let Some(t) = a.fixed_bias_temp {
                cfg.drift.fixed_bias_temp_c = t;
            }
        }
        Cmd::Accuracy(a) => {
            let g = &mut cfg.accuracy.grid;
            g.temp_c = a.temp.unwrap_or(g.temp_c);
            g.duration_s = a.duration.unwrap_or(g.duration_s);
        }
        Cmd::Ber(a) => {
            if let Some(n) = a.cells {
                cfg.variation.n_cells = n;
            }
            if let Some(s) = a.sa_sigma {
                cfg.variation.sa_offset_sigma = s;
            }
            if let Some(g) = &a.sigma_mu {
                cfg.ber.sigma_mu_grid = g.clone();
            }
            if let Some(t) = &a.temps {
                cfg.ber.temperatures_c = t.clone();
            }
            if a.fixed_bias.is_some() {
                cfg.ber.fixed_bias_v = a.fixed_bias;
            }
        }
    }
    cfg.validate()
}

/// Hold durations before and after the ramp of a two-hold schedule.
fn hold_times(s: &ThermalSchedule) -> (f64, f64) {
    let segs = s.segments();
    let pre = segs.get(1).map_or(0.0, |g| g.start_s);
    let post = segs
        .last()
        .map_or(0.0, |g| s.total_duration_s() - g.start_s);
    (pre, post)
}

fn run(cli: Cli) -> Result<()> {
    if let Cmd::Vopt { tmr0, vh } = cli.cmd {
        println!("{}", commands::format_sig(commands::vopt(tmr0, vh)?, 6));
        return Ok(());
    }
    let mut cfg = load(&cli)?;
    apply(&mut cfg, &cli.cmd)?;
    let summary = match &cli.cmd {
        Cmd::Vopt { .. } => unreachable!(),
        Cmd::Sweep(_) => commands::sweep(&cfg, cli.plot)?.to_string(),
        Cmd::Transient(_) => commands::transient(&cfg, cli.plot)?.to_string(),
        Cmd::Drift(_) => commands::drift(&cfg, cli.plot)?.to_string(),
        Cmd::Accuracy(_) => commands::accuracy(&cfg, cli.plot)?.to_string(),
        Cmd::Ber(_) => commands::ber(&cfg, cli.plot)?.to_string(),
    };
    if !cli.quiet {
        print!("{summary}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
