//! Cycle-level model of the DBO control logic and charge pump.
//!
//! Each sample period executes, in order: compare the fresh margin voltage
//! against the held sample, toggle direction on a decrease (FLIP), hold the
//! fresh sample, then apply one charge-pump step. The first FLIP after reset
//! clears the COARSE flag for good (unless re-arm is enabled).

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DboConfig {
    /// Fine pump step, volts per cycle.
    pub fine_step: f64,
    /// Coarse step as a multiple of the fine step.
    pub coarse_ratio: u32,
    /// Sample period, seconds.
    pub sample_period: f64,
    pub v_ref_max: f64,
    pub v_ref_init: f64,
    pub comparator_hysteresis: f64,
    /// Per-cycle Gaussian comparator offset, volts.
    pub comparator_offset_sigma: f64,
    /// Re-enable COARSE after this many cycles without a FLIP.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rearm_coarse_after: Option<u64>,
}

impl Default for DboConfig {
    fn default() -> Self {
        DboConfig {
            fine_step: 4e-3,
            coarse_ratio: 20,
            sample_period: 200e-9,
            v_ref_max: 1.0,
            v_ref_init: 0.0,
            comparator_hysteresis: 0.0,
            comparator_offset_sigma: 0.0,
            rearm_coarse_after: None,
        }
    }
}

impl DboConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("dbo.fine_step", self.fine_step)?;
        if self.coarse_ratio < 1 {
            return Err(Error::param("dbo.coarse_ratio", "must be >= 1"));
        }
        ensure_positive("dbo.sample_period", self.sample_period)?;
        ensure_positive("dbo.v_ref_max", self.v_ref_max)?;
        ensure_non_negative("dbo.v_ref_init", self.v_ref_init)?;
        if self.v_ref_init > self.v_ref_max {
            return Err(Error::param("dbo.v_ref_init", "must not exceed v_ref_max"));
        }
        ensure_non_negative("dbo.comparator_hysteresis", self.comparator_hysteresis)?;
        ensure_non_negative("dbo.comparator_offset_sigma", self.comparator_offset_sigma)?;
        Ok(())
    }

    pub fn coarse_step(&self) -> f64 {
        self.coarse_ratio as f64 * self.fine_step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    fn toggled(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// Charge-pump command issued in a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpCmd {
    UpCoarse,
    UpFine,
    Down,
}

impl PumpCmd {
    pub fn as_str(self) -> &'static str {
        match self {
            PumpCmd::UpCoarse => "UP_C",
            PumpCmd::UpFine => "UP_F",
            PumpCmd::Down => "DN",
        }
    }
}

impl fmt::Display for PumpCmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DboState {
    pub v_ref: f64,
    /// Held sample.
    pub v_s: f64,
    pub direction: Direction,
    pub coarse: bool,
    /// Completed cycles since reset.
    pub cycle: u64,
    pub last_flip_cycle: u64,
    pub pump_cmd: Option<PumpCmd>,
}

/// Signals of one completed cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based index of the cycle.
    pub cycle: u64,
    /// Margin voltage sampled this cycle.
    pub v_m: f64,
    /// Held sample the comparator saw.
    pub v_s: f64,
    pub flip: bool,
    /// COARSE as seen by the pump this cycle.
    pub coarse: bool,
    pub direction: Direction,
    pub pump_cmd: PumpCmd,
    /// V_REF after the pump update.
    pub v_ref: f64,
}

impl DboState {
    pub fn reset(cfg: &DboConfig) -> Self {
        DboState {
            v_ref: cfg.v_ref_init,
            v_s: 0.0,
            direction: Direction::Up,
            coarse: true,
            cycle: 0,
            last_flip_cycle: 0,
            pump_cmd: None,
        }
    }

    /// Runs one sample cycle. `v_m` must be the margin voltage measured at
    /// the current `v_ref`.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        cfg: &DboConfig,
        v_m: f64,
        rng: &mut R,
    ) -> Result<StepRecord> {
        if !v_m.is_finite() {
            return Err(Error::NonFinite {
                cycle: self.cycle + 1,
                value: v_m,
            });
        }
        let held = self.v_s;

        let mut threshold = cfg.comparator_hysteresis;
        if cfg.comparator_offset_sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            threshold += cfg.comparator_offset_sigma * z;
        }
        // No valid held sample on the first cycle after reset.
        let flip = self.cycle > 0 && v_m < held - threshold;
        if flip {
            self.direction = self.direction.toggled();
            self.coarse = false;
            self.last_flip_cycle = self.cycle;
        }

        self.v_s = v_m;

        let (cmd, delta) = match (self.direction, self.coarse) {
            (Direction::Up, true) => (PumpCmd::UpCoarse, cfg.coarse_step()),
            (Direction::Up, false) => (PumpCmd::UpFine, cfg.fine_step),
            (Direction::Down, _) => (PumpCmd::Down, -cfg.fine_step),
        };
        self.v_ref = (self.v_ref + delta).clamp(0.0, cfg.v_ref_max);
        self.pump_cmd = Some(cmd);
        let coarse_used = self.coarse;

        if let Some(n) = cfg.rearm_coarse_after {
            if !self.coarse && self.cycle - self.last_flip_cycle > n {
                self.coarse = true;
            }
        }

        self.cycle += 1;
        Ok(StepRecord {
            cycle: self.cycle,
            v_m,
            v_s: held,
            flip,
            coarse: coarse_used,
            direction: self.direction,
            pump_cmd: cmd,
            v_ref: self.v_ref,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{Bias, DeviceParams};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vm_nominal(v: f64) -> f64 {
        1e5 * DeviceParams::NOMINAL_RT.margin(Bias::new(v).unwrap())
    }

    #[test]
    fn reset_state() {
        let cfg = DboConfig::default();
        let s = DboState::reset(&cfg);
        assert_eq!(s.v_ref, 0.0);
        assert!(s.coarse);
        assert_eq!(s.direction, Direction::Up);
        assert_eq!(s.cycle, 0);
        assert_eq!(s, DboState::reset(&cfg));

        let cfg = DboConfig {
            v_ref_init: 0.2,
            ..Default::default()
        };
        let s = DboState::reset(&cfg);
        assert_eq!(s.v_ref, 0.2);
        assert_eq!(s.v_s, 0.0);
    }

    #[test]
    fn nominal_hand_trace() {
        let cfg = DboConfig::default();
        let mut s = DboState::reset(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut recs = Vec::new();
        for _ in 0..40 {
            let v_m = vm_nominal(s.v_ref);
            recs.push(s.step(&cfg, v_m, &mut rng).unwrap());
        }
        let coarse: Vec<f64> = recs[..6].iter().map(|r| r.v_ref).collect();
        for (k, v) in coarse.iter().enumerate() {
            assert_abs_diff_eq!(*v, 0.08 * (k + 1) as f64, epsilon = 1e-12);
            assert_eq!(recs[k].pump_cmd, PumpCmd::UpCoarse);
            assert!(!recs[k].flip);
        }
        // cycle 7 evaluates V_M at 0.48 V and flips
        let r7 = recs[6];
        assert_eq!(r7.cycle, 7);
        assert!(r7.flip);
        assert!(!r7.coarse);
        assert_eq!(r7.direction, Direction::Down);
        assert_abs_diff_eq!(r7.v_s, vm_nominal(0.40), epsilon = 1e-15);
        assert_abs_diff_eq!(r7.v_m, vm_nominal(0.48), epsilon = 1e-15);
        assert_abs_diff_eq!(r7.v_ref, 0.476, epsilon = 1e-12);
        // fine descent
        for r in &recs[7..17] {
            assert_eq!(r.pump_cmd, PumpCmd::Down);
            assert!(!r.flip);
        }
        assert_abs_diff_eq!(recs[17].v_ref, 0.432, epsilon = 1e-12);
        // fine-sized steps from here on
        for w in recs[6..].windows(2) {
            assert_abs_diff_eq!((w[1].v_ref - w[0].v_ref).abs(), 0.004, epsilon = 1e-12);
        }
        // limit cycle 0.420 / 0.424 / 0.428
        let tail: Vec<f64> = recs[24..].iter().map(|r| r.v_ref).collect();
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(lo, 0.420, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 0.428, epsilon = 1e-9);
    }

    #[test]
    fn constant_input_never_flips_and_clamps() {
        let cfg = DboConfig::default();
        let mut s = DboState::reset(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..30 {
            let r = s.step(&cfg, 0.25, &mut rng).unwrap();
            assert!(!r.flip);
            assert!(r.v_ref <= cfg.v_ref_max);
        }
        assert_eq!(s.v_ref, cfg.v_ref_max);
        assert!(s.coarse);
    }

    #[test]
    fn first_cycle_comparison_suppressed() {
        let cfg = DboConfig::default();
        let mut s = DboState::reset(&cfg);
        s.v_s = 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(!s.step(&cfg, 0.0, &mut rng).unwrap().flip);
    }

    #[test]
    fn hysteresis_masks_small_decreases() {
        let cfg = DboConfig {
            comparator_hysteresis: 0.01,
            ..Default::default()
        };
        let mut s = DboState::reset(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        s.step(&cfg, 0.5, &mut rng).unwrap();
        assert!(!s.step(&cfg, 0.495, &mut rng).unwrap().flip);
        assert!(s.step(&cfg, 0.48, &mut rng).unwrap().flip);
    }

    #[test]
    fn down_clamps_at_zero() {
        let cfg = DboConfig::default();
        let mut s = DboState::reset(&cfg);
        s.direction = Direction::Down;
        s.coarse = false;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = s.step(&cfg, 0.1, &mut rng).unwrap();
        assert_eq!(r.pump_cmd, PumpCmd::Down);
        assert_eq!(r.v_ref, 0.0);
    }

    #[test]
    fn coarse_rearm() {
        let cfg = DboConfig {
            rearm_coarse_after: Some(5),
            ..Default::default()
        };
        let mut s = DboState::reset(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        s.step(&cfg, 1.0, &mut rng).unwrap();
        let r = s.step(&cfg, 0.5, &mut rng).unwrap();
        assert!(r.flip);
        assert!(!s.coarse);
        // rising input keeps direction; re-arm fires once the gap exceeds 5
        let mut v = 0.5;
        let mut rearmed_at = None;
        for _ in 0..10 {
            v += 0.01;
            s.step(&cfg, v, &mut rng).unwrap();
            if s.coarse && rearmed_at.is_none() {
                rearmed_at = Some(s.cycle);
            }
        }
        assert_eq!(rearmed_at, Some(8));
    }

    #[test]
    fn rejects_non_finite() {
        let cfg = DboConfig::default();
        let mut s = DboState::reset(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            s.step(&cfg, f64::NAN, &mut rng),
            Err(Error::NonFinite { cycle: 1, .. })
        ));
        assert_eq!(s.cycle, 0);
    }

    #[test]
    fn config_validation() {
        assert!(DboConfig::default().validate().is_ok());
        let bad = DboConfig {
            v_ref_init: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DboConfig {
            coarse_ratio: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
