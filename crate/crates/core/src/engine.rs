//! Transient driver: advances time in sample-period ticks, evaluates the
//! thermal schedule and the margin-extraction chain, and steps the DBO.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analog::AnalogConfig;
use crate::controller::{DboConfig, DboState, PumpCmd};
use crate::device::{Bias, DeviceParams, MarginCurve, ThermalModel};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::stats::NeumaierSum;

/// Relative half-width of the convergence band around V_OPT.
pub const CONVERGENCE_BAND: f64 = 0.02;

/// Fraction of a window treated as steady state.
pub const STEADY_FRACTION: f64 = 0.25;

/// Random stream for run `stream` of a seeded experiment.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start_s: f64,
    pub start_temp_c: f64,
    /// °C per second; zero for a hold.
    #[serde(default)]
    pub ramp_c_per_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalScheduleDef {
    pub segments: Vec<Segment>,
    pub total_duration_s: f64,
}

/// Temperature as a function of time: contiguous linear segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThermalScheduleDef", into = "ThermalScheduleDef")]
pub struct ThermalSchedule {
    segments: Vec<Segment>,
    total_duration_s: f64,
}

impl TryFrom<ThermalScheduleDef> for ThermalSchedule {
    type Error = Error;

    fn try_from(def: ThermalScheduleDef) -> Result<Self> {
        ThermalSchedule::new(def.segments, def.total_duration_s)
    }
}

impl From<ThermalSchedule> for ThermalScheduleDef {
    fn from(s: ThermalSchedule) -> Self {
        ThermalScheduleDef {
            segments: s.segments,
            total_duration_s: s.total_duration_s,
        }
    }
}

impl ThermalSchedule {
    pub fn new(segments: Vec<Segment>, total_duration_s: f64) -> Result<Self> {
        ensure_positive("schedule.total_duration_s", total_duration_s)?;
        let first = segments
            .first()
            .ok_or_else(|| Error::param("schedule.segments", "need at least one segment"))?;
        if first.start_s != 0.0 {
            return Err(Error::param(
                "schedule.segments",
                "first segment must start at 0",
            ));
        }
        for s in &segments {
            ensure_non_negative("segment.start_s", s.start_s)?;
            if !s.start_temp_c.is_finite() || !s.ramp_c_per_s.is_finite() {
                return Err(Error::param("schedule.segments", "values must be finite"));
            }
        }
        for w in segments.windows(2) {
            // Negated so NaN is rejected too.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(w[1].start_s > w[0].start_s) {
                return Err(Error::param(
                    "schedule.segments",
                    "start times must be strictly increasing",
                ));
            }
        }
        if segments.last().unwrap().start_s >= total_duration_s {
            return Err(Error::param(
                "schedule.segments",
                "last segment starts after the end of the run",
            ));
        }
        Ok(ThermalSchedule {
            segments,
            total_duration_s,
        })
    }

    pub fn constant(temp_c: f64, duration_s: f64) -> Result<Self> {
        Self::new(
            vec![Segment {
                start_s: 0.0,
                start_temp_c: temp_c,
                ramp_c_per_s: 0.0,
            }],
            duration_s,
        )
    }

    /// Hold `from_c` for `hold_before_s`, ramp at `rate_c_per_s` to `to_c`,
    /// then hold for `hold_after_s`.
    pub fn ramp_between(
        from_c: f64,
        to_c: f64,
        rate_c_per_s: f64,
        hold_before_s: f64,
        hold_after_s: f64,
    ) -> Result<Self> {
        ensure_positive("ramp rate", rate_c_per_s)?;
        ensure_positive("hold_before_s", hold_before_s)?;
        ensure_positive("hold_after_s", hold_after_s)?;
        let ramp_s = (to_c - from_c).abs() / rate_c_per_s;
        let signed = if to_c >= from_c {
            rate_c_per_s
        } else {
            -rate_c_per_s
        };
        Self::new(
            vec![
                Segment {
                    start_s: 0.0,
                    start_temp_c: from_c,
                    ramp_c_per_s: 0.0,
                },
                Segment {
                    start_s: hold_before_s,
                    start_temp_c: from_c,
                    ramp_c_per_s: signed,
                },
                Segment {
                    start_s: hold_before_s + ramp_s,
                    start_temp_c: to_c,
                    ramp_c_per_s: 0.0,
                },
            ],
            hold_before_s + ramp_s + hold_after_s,
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration_s(&self) -> f64 {
        self.total_duration_s
    }

    fn segment_end(&self, i: usize) -> f64 {
        self.segments
            .get(i + 1)
            .map_or(self.total_duration_s, |s| s.start_s)
    }

    pub fn temp_at(&self, t: f64) -> f64 {
        let i = self
            .segments
            .iter()
            .rposition(|s| s.start_s <= t)
            .unwrap_or(0);
        let s = &self.segments[i];
        s.start_temp_c + s.ramp_c_per_s * (t - s.start_s)
    }

    /// Time span of the last hold segment, if any.
    pub fn last_hold(&self) -> Option<(f64, f64)> {
        (0..self.segments.len())
            .rev()
            .find(|&i| self.segments[i].ramp_c_per_s == 0.0)
            .map(|i| (self.segments[i].start_s, self.segment_end(i)))
    }

    /// Number of whole sample periods in the run.
    pub fn cycles(&self, sample_period: f64) -> u64 {
        let n = self.total_duration_s / sample_period;
        let r = n.round();
        if (n - r).abs() <= 1e-9 * r.max(1.0) {
            r as u64
        } else {
            n.floor() as u64
        }
    }
}

/// One row of a transient trace.
///
/// `v_m`, `v_s` and `flip` are the signals observed during cycle `cycle`;
/// `v_ref` is the bias after that cycle's pump update, and `margin_a` the
/// sensing margin at that bias. Temperature and `v_opt` are evaluated at
/// `time_s = cycle · sample_period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub cycle: u64,
    pub time_s: f64,
    pub temp_c: f64,
    pub v_ref: f64,
    pub v_m: f64,
    pub v_s: f64,
    pub flip: bool,
    pub coarse: bool,
    pub pump_cmd: PumpCmd,
    pub v_opt: f64,
    pub margin_a: f64,
}

impl CycleRecord {
    pub fn in_band(&self) -> bool {
        (self.v_ref - self.v_opt).abs() <= CONVERGENCE_BAND * self.v_opt
    }

    pub fn tracking(&self) -> f64 {
        1.0 - (self.v_ref - self.v_opt).abs() / self.v_opt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceWarning {
    pub cycle: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<CycleRecord>,
    pub warnings: Vec<TraceWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// First cycle from which V_REF stays inside the ±2 % band of the
    /// instantaneous V_OPT until the end of the run.
    pub convergence_cycle: Option<u64>,
    /// First cycle inside the band.
    pub lock_cycle: Option<u64>,
    /// Worst per-cycle `1 − |v_ref − v_opt| / v_opt` from lock onwards.
    pub worst_tracking_after_lock: Option<f64>,
    /// `1 − |mean(v_ref) − v_opt| / v_opt` over the steady window.
    pub tracking_accuracy: f64,
    /// Peak-to-peak V_REF over the steady window.
    pub ripple_pp: f64,
    pub steady_v_ref: f64,
    pub steady_v_opt: f64,
    pub steady_margin_a: f64,
    /// First and last cycle of the steady window.
    pub steady_window: (u64, u64),
}

/// Fully specified transient run.
#[derive(Debug, Clone)]
pub struct TransientRun<'a> {
    pub thermal: &'a ThermalModel,
    pub analog: &'a AnalogConfig,
    pub dbo: &'a DboConfig,
    pub schedule: &'a ThermalSchedule,
    pub seed: u64,
    pub stream: u64,
    /// Starting controller state; `None` means reset.
    pub initial: Option<DboState>,
}

impl TransientRun<'_> {
    pub fn run(&self) -> Result<(Trace, Metrics)> {
        self.analog.validate()?;
        self.dbo.validate()?;
        let period = self.dbo.sample_period;
        let n = self.schedule.cycles(period);
        if n == 0 {
            return Err(Error::param(
                "schedule.total_duration_s",
                "must cover at least one sample period",
            ));
        }
        let mut rng = seeded_rng(self.seed, self.stream);
        let mut state = self.initial.unwrap_or_else(|| DboState::reset(self.dbo));
        let mut trace = Trace {
            records: Vec::with_capacity(n as usize),
            warnings: Vec::new(),
        };
        for k in 1..=n {
            let time_s = k as f64 * period;
            let temp_c = self.schedule.temp_at(time_s);
            let params = self
                .thermal
                .params_at(temp_c)
                .map_err(|e| Error::ScheduleRange {
                    time_s,
                    source: Box::new(e),
                })?;
            let reading = self
                .analog
                .extract_vm(&params, Bias::new(state.v_ref)?, &mut rng)?;
            if reading.bias_floored {
                trace.warnings.push(TraceWarning {
                    cycle: k,
                    message: "effective MTJ bias negative, floored at 0 V".into(),
                });
            }
            let rec = state.step(self.dbo, reading.v_m, &mut rng)?;
            trace.records.push(CycleRecord {
                cycle: rec.cycle,
                time_s,
                temp_c,
                v_ref: rec.v_ref,
                v_m: rec.v_m,
                v_s: rec.v_s,
                flip: rec.flip,
                coarse: rec.coarse,
                pump_cmd: rec.pump_cmd,
                v_opt: params.v_opt(),
                margin_a: params.margin(Bias::new(rec.v_ref)?),
            });
        }
        let metrics = compute_metrics(&trace, self.schedule);
        Ok((trace, metrics))
    }
}

/// Runs a transient from reset.
pub fn run_transient(
    thermal: &ThermalModel,
    analog: &AnalogConfig,
    dbo: &DboConfig,
    schedule: &ThermalSchedule,
    seed: u64,
) -> Result<(Trace, Metrics)> {
    TransientRun {
        thermal,
        analog,
        dbo,
        schedule,
        seed,
        stream: 0,
        initial: None,
    }
    .run()
}

fn steady_slice<'t>(trace: &'t Trace, schedule: &ThermalSchedule) -> &'t [CycleRecord] {
    let recs = &trace.records[..];
    let window = match schedule.last_hold() {
        Some((t0, t1)) => {
            let lo = recs.partition_point(|r| r.time_s <= t0);
            let hi = recs.partition_point(|r| r.time_s <= t1);
            if hi > lo {
                &recs[lo..hi]
            } else {
                recs
            }
        }
        None => recs,
    };
    let take = ((window.len() as f64 * STEADY_FRACTION).ceil() as usize).max(1);
    &window[window.len() - take..]
}

pub fn compute_metrics(trace: &Trace, schedule: &ThermalSchedule) -> Metrics {
    let recs = &trace.records;
    let convergence_cycle = {
        let tail_ok = recs.iter().rev().take_while(|r| r.in_band()).count();
        (tail_ok > 0).then(|| recs[recs.len() - tail_ok].cycle)
    };
    let lock_idx = recs.iter().position(CycleRecord::in_band);
    let worst_tracking_after_lock = lock_idx.map(|i| {
        recs[i..]
            .iter()
            .map(CycleRecord::tracking)
            .fold(f64::INFINITY, f64::min)
    });

    let steady = steady_slice(trace, schedule);
    let mean = |f: fn(&CycleRecord) -> f64| {
        let mut s = NeumaierSum::default();
        steady.iter().for_each(|r| s.add(f(r)));
        s.sum() / steady.len() as f64
    };
    let steady_v_ref = mean(|r| r.v_ref);
    let steady_v_opt = mean(|r| r.v_opt);
    let steady_margin_a = mean(|r| r.margin_a);
    let (lo, hi) = steady
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.v_ref), hi.max(r.v_ref))
        });
    let tracking_accuracy =
        (1.0 - (steady_v_ref - steady_v_opt).abs() / steady_v_opt).clamp(0.0, 1.0);
    Metrics {
        convergence_cycle,
        lock_cycle: lock_idx.map(|i| recs[i].cycle),
        worst_tracking_after_lock,
        tracking_accuracy,
        ripple_pp: hi - lo,
        steady_v_ref,
        steady_v_opt,
        steady_margin_a,
        steady_window: (steady[0].cycle, steady[steady.len() - 1].cycle),
    }
}

/// Per-cycle sensing margin with the DBO bias next to a fixed bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginComparison {
    pub cycle: u64,
    pub time_s: f64,
    pub temp_c: f64,
    pub margin_dbo_a: f64,
    pub margin_fixed_a: f64,
}

pub fn compare_fixed_bias(
    trace: &Trace,
    thermal: &ThermalModel,
    v_fixed: Bias,
) -> Result<Vec<MarginComparison>> {
    trace
        .records
        .iter()
        .map(|r| {
            let p = thermal.params_at(r.temp_c)?;
            Ok(MarginComparison {
                cycle: r.cycle,
                time_s: r.time_s,
                temp_c: r.temp_c,
                margin_dbo_a: r.margin_a,
                margin_fixed_a: p.margin(v_fixed),
            })
        })
        .collect()
}

/// Steady-state outcome of running the DBO against a static margin curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettledBias {
    pub mean_v_ref: f64,
    pub ripple_pp: f64,
    pub flipped: bool,
}

/// Runs the controller from reset for `cycles` cycles against `curve` and
/// averages V_REF over the final quarter.
pub fn settle_on_curve<M, R>(
    curve: &M,
    analog: &AnalogConfig,
    dbo: &DboConfig,
    cycles: u64,
    rng: &mut R,
) -> Result<SettledBias>
where
    M: MarginCurve + ?Sized,
    R: rand::Rng + ?Sized,
{
    if cycles == 0 {
        return Err(Error::param("settle cycles", "must be >= 1"));
    }
    let mut state = DboState::reset(dbo);
    let keep = ((cycles as f64 * STEADY_FRACTION).ceil() as u64).max(1);
    let mut sum = NeumaierSum::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut flipped = false;
    for k in 1..=cycles {
        let v_m = analog.extract_vm(curve, Bias::new(state.v_ref)?, rng)?.v_m;
        let rec = state.step(dbo, v_m, rng)?;
        flipped |= rec.flip;
        if k > cycles - keep {
            sum.add(rec.v_ref);
            lo = lo.min(rec.v_ref);
            hi = hi.max(rec.v_ref);
        }
    }
    Ok(SettledBias {
        mean_v_ref: sum.sum() / keep as f64,
        ripple_pp: hi - lo,
        flipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub v: f64,
    pub margin_a: f64,
}

/// Margin on a uniform bias grid including both endpoints.
pub fn sweep_margin(
    params: &DeviceParams,
    v_min: f64,
    v_max: f64,
    points: usize,
) -> Result<Vec<SweepPoint>> {
    ensure_non_negative("v_min", v_min)?;
    if !(v_max.is_finite() && v_max > v_min) {
        return Err(Error::param("v_max", "must be finite and > v_min"));
    }
    if points < 2 {
        return Err(Error::param("points", "need at least 2"));
    }
    let span = v_max - v_min;
    let last = points - 1;
    (0..points)
        .map(|k| {
            let v = if k == last {
                v_max
            } else {
                v_min + span * k as f64 / last as f64
            };
            Ok(SweepPoint {
                v,
                margin_a: params.margin(Bias::new(v)?),
            })
        })
        .collect()
}

/// Grid point with the largest margin (first one on ties).
pub fn grid_argmax(points: &[SweepPoint]) -> Option<SweepPoint> {
    points
        .iter()
        .copied()
        .reduce(|best, p| if p.margin_a > best.margin_a { p } else { best })
}

/// Grid of device corners for a tracking-accuracy map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyGrid {
    pub tmr0: Vec<f64>,
    pub vh: Vec<f64>,
    pub rp: f64,
    pub temp_c: f64,
    pub duration_s: f64,
}

impl Default for AccuracyGrid {
    fn default() -> Self {
        let lin = |a: f64, b: f64, n: usize| {
            (0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect::<Vec<_>>()
        };
        AccuracyGrid {
            tmr0: lin(0.6, 1.2, 7),
            vh: lin(0.2, 0.35, 7),
            rp: 10e3,
            temp_c: 25.0,
            duration_s: 40e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPoint {
    pub tmr0: f64,
    pub vh: f64,
    pub v_opt: f64,
    pub steady_v_ref: f64,
    pub accuracy: f64,
    pub ripple_pp: f64,
    pub convergence_cycle: Option<u64>,
}

/// Steady-state tracking accuracy over a `tmr0 × vh` grid, one constant-
/// temperature transient per point. Points run in parallel; point `i` uses
/// random stream `i`.
pub fn tracking_accuracy_map(
    grid: &AccuracyGrid,
    analog: &AnalogConfig,
    dbo: &DboConfig,
    seed: u64,
) -> Result<Vec<AccuracyPoint>> {
    let corners: Vec<(f64, f64)> = grid
        .tmr0
        .iter()
        .flat_map(|&t| grid.vh.iter().map(move |&v| (t, v)))
        .collect();
    let schedule = ThermalSchedule::constant(grid.temp_c, grid.duration_s)?;
    corners
        .par_iter()
        .enumerate()
        .map(|(i, &(tmr0, vh))| {
            let p = DeviceParams::new(tmr0, vh, grid.rp)?;
            let thermal = ThermalModel::constant(p)?;
            let (_, m) = TransientRun {
                thermal: &thermal,
                analog,
                dbo,
                schedule: &schedule,
                seed,
                stream: i as u64,
                initial: None,
            }
            .run()?;
            Ok(AccuracyPoint {
                tmr0,
                vh,
                v_opt: p.v_opt(),
                steady_v_ref: m.steady_v_ref,
                accuracy: m.tracking_accuracy,
                ripple_pp: m.ripple_pp,
                convergence_cycle: m.convergence_cycle,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperaturePoint {
    pub temp_c: f64,
    pub v_opt: f64,
    pub steady_v_ref: f64,
    pub accuracy: f64,
}

/// Steady-state tracking accuracy at each of `temps_c` (constant-temperature
/// runs against the thermal model).
pub fn tracking_over_temperature(
    thermal: &ThermalModel,
    temps_c: &[f64],
    analog: &AnalogConfig,
    dbo: &DboConfig,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<TemperaturePoint>> {
    temps_c
        .par_iter()
        .enumerate()
        .map(|(i, &temp_c)| {
            let schedule = ThermalSchedule::constant(temp_c, duration_s)?;
            let (_, m) = TransientRun {
                thermal,
                analog,
                dbo,
                schedule: &schedule,
                seed,
                stream: i as u64,
                initial: None,
            }
            .run()?;
            Ok(TemperaturePoint {
                temp_c,
                v_opt: m.steady_v_opt,
                steady_v_ref: m.steady_v_ref,
                accuracy: m.tracking_accuracy,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Direction;
    use approx::assert_relative_eq;

    fn nominal() -> (ThermalModel, AnalogConfig, DboConfig) {
        (
            ThermalModel::default(),
            AnalogConfig::default(),
            DboConfig::default(),
        )
    }

    #[test]
    fn nominal_transient() {
        let (tm, an, dbo) = nominal();
        let sched = ThermalSchedule::constant(25.0, 20e-6).unwrap();
        let (trace, m) = run_transient(&tm, &an, &dbo, &sched, 1).unwrap();
        assert_eq!(trace.records.len(), 100);
        assert_eq!(m.convergence_cycle, Some(18));
        assert_eq!(m.lock_cycle, Some(18));
        assert!(m.ripple_pp <= 0.016);
        assert!(m.tracking_accuracy >= 0.99);
        assert_eq!(m.steady_window, (76, 100));
        assert!(trace.warnings.is_empty());
    }

    #[test]
    fn time_stamps_are_exact_multiples() {
        let (tm, an, dbo) = nominal();
        let sched = ThermalSchedule::constant(25.0, 3e-6).unwrap();
        let (trace, _) = run_transient(&tm, &an, &dbo, &sched, 0).unwrap();
        assert_eq!(trace.records.len(), 15);
        for (k, r) in trace.records.iter().enumerate() {
            assert_eq!(r.cycle, k as u64 + 1);
            assert_eq!(r.time_s, (k + 1) as f64 * dbo.sample_period);
        }
    }

    #[test]
    fn starting_at_optimum() {
        let (tm, an, _) = nominal();
        let v_opt = DeviceParams::NOMINAL_RT.v_opt();
        let dbo = DboConfig {
            v_ref_init: v_opt,
            ..Default::default()
        };
        let mut init = DboState::reset(&dbo);
        init.coarse = false;
        init.direction = Direction::Down;
        let sched = ThermalSchedule::constant(25.0, 4e-6).unwrap();
        let (trace, m) = TransientRun {
            thermal: &tm,
            analog: &an,
            dbo: &dbo,
            schedule: &sched,
            seed: 0,
            stream: 0,
            initial: Some(init),
        }
        .run()
        .unwrap();
        assert!(m.tracking_accuracy >= 0.99);
        assert!(trace
            .records
            .iter()
            .all(|r| r.pump_cmd != PumpCmd::UpCoarse));
        assert_eq!(m.lock_cycle, Some(1));
    }

    #[test]
    fn schedule_out_of_range_names_time() {
        let (tm, an, dbo) = nominal();
        let sched = ThermalSchedule::ramp_between(100.0, 150.0, 1e6, 1e-6, 1e-6).unwrap();
        match run_transient(&tm, &an, &dbo, &sched, 0) {
            Err(Error::ScheduleRange { time_s, .. }) => {
                assert!(time_s > 2.5e-5 && time_s < 2.7e-5);
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn schedule_shape() {
        let s = ThermalSchedule::ramp_between(25.0, 125.0, 98e3, 20e-6, 100e-6).unwrap();
        assert_eq!(s.temp_at(0.0), 25.0);
        assert_eq!(s.temp_at(20e-6), 25.0);
        assert_relative_eq!(s.temp_at(20e-6 + 0.5e-3), 25.0 + 49.0, max_relative = 1e-9);
        assert_eq!(s.temp_at(s.total_duration_s()), 125.0);
        let (t0, t1) = s.last_hold().unwrap();
        assert_relative_eq!(t1 - t0, 100e-6, max_relative = 1e-9);
        assert!(ThermalSchedule::new(vec![], 1.0).is_err());
        assert!(ThermalSchedule::constant(25.0, 0.0).is_err());
    }

    #[test]
    fn too_short_run_rejected() {
        let (tm, an, dbo) = nominal();
        let sched = ThermalSchedule::constant(25.0, 100e-9).unwrap();
        assert!(run_transient(&tm, &an, &dbo, &sched, 0).is_err());
    }

    #[test]
    fn sweep_grid() {
        let p = DeviceParams::NOMINAL_RT;
        let pts = sweep_margin(&p, 0.0, 0.8, 801).unwrap();
        assert_eq!(pts.len(), 801);
        assert!(pts.windows(2).all(|w| w[1].v > w[0].v));
        let best = grid_argmax(&pts).unwrap();
        assert!((best.v - p.v_opt()).abs() <= 1e-3);
        let two = sweep_margin(&p, 0.1, 0.7, 2).unwrap();
        assert_eq!((two[0].v, two[1].v), (0.1, 0.7));
        assert!(sweep_margin(&p, 0.5, 0.5, 10).is_err());
        assert!(sweep_margin(&p, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn tmr0_sweep_shift_follows_closed_form() {
        let shift = |tmr0: f64| {
            let p = DeviceParams::new(tmr0, 0.3, 10e3).unwrap();
            grid_argmax(&sweep_margin(&p, 0.0, 1.0, 10_001).unwrap())
                .unwrap()
                .v
        };
        let ratio = shift(1.4) / shift(0.6);
        assert_relative_eq!(ratio, (2.4f64 / 1.6).sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn single_point_map_matches_transient() {
        let (_, an, dbo) = nominal();
        let grid = AccuracyGrid {
            tmr0: vec![1.0],
            vh: vec![0.3],
            ..Default::default()
        };
        let map = tracking_accuracy_map(&grid, &an, &dbo, 5).unwrap();
        assert_eq!(map.len(), 1);
        let tm = ThermalModel::constant(DeviceParams::NOMINAL_RT).unwrap();
        let sched = ThermalSchedule::constant(25.0, grid.duration_s).unwrap();
        let (_, m) = run_transient(&tm, &an, &dbo, &sched, 5).unwrap();
        assert_eq!(map[0].accuracy, m.tracking_accuracy);
        assert!(map[0].accuracy >= 0.98);
    }

    #[test]
    fn settle_matches_transient_steady_bias() {
        let (_, an, dbo) = nominal();
        let mut rng = seeded_rng(0, 0);
        let s = settle_on_curve(&DeviceParams::NOMINAL_RT, &an, &dbo, 100, &mut rng).unwrap();
        assert!(s.flipped);
        assert!((s.mean_v_ref - DeviceParams::NOMINAL_RT.v_opt()).abs() < 2e-3);
        assert!(s.ripple_pp <= 0.016);
    }
}
