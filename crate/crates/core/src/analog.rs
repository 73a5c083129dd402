//! Margin-extraction chain: clamped reference cells, subtracting mirror,
//! trans-impedance amplifier and source follower.
//!
//! Evaluation is quasi-static, once per controller cycle. The follower is an
//! ideal unity buffer; any level shift belongs in `vm_offset`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::device::{Bias, MarginCurve};
use crate::error::{ensure_non_negative, ensure_positive, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalogConfig {
    /// TIA feedback resistor, ohms.
    pub r_ref: f64,
    /// Output mirror ratio W4/W3.
    pub mirror_gain: f64,
    /// Systematic output offset, volts.
    pub vm_offset: f64,
    /// Per-evaluation Gaussian output noise, volts.
    pub vm_noise_sigma: f64,
    /// Deviation of the regulated MTJ bias from V_REF, volts.
    pub clamp_error: f64,
}

impl Default for AnalogConfig {
    fn default() -> Self {
        AnalogConfig {
            r_ref: 100e3,
            mirror_gain: 1.0,
            vm_offset: 0.0,
            vm_noise_sigma: 0.0,
            clamp_error: 0.0,
        }
    }
}

/// One margin-voltage evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmReading {
    pub v_m: f64,
    /// Set when `v_ref + clamp_error` went negative and the effective bias
    /// was floored at zero.
    pub bias_floored: bool,
}

impl AnalogConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("analog.r_ref", self.r_ref)?;
        ensure_positive("analog.mirror_gain", self.mirror_gain)?;
        ensure_non_negative("analog.vm_noise_sigma", self.vm_noise_sigma)?;
        if !self.vm_offset.is_finite() || !self.clamp_error.is_finite() {
            return Err(crate::Error::param(
                "analog",
                "vm_offset and clamp_error must be finite",
            ));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.vm_offset == 0.0 && self.vm_noise_sigma == 0.0 && self.clamp_error == 0.0
    }

    /// Transimpedance from sensing margin to V_M, ohms.
    pub fn gain(&self) -> f64 {
        self.r_ref * self.mirror_gain
    }

    /// Margin voltage seen by the controller at bias `v_ref`.
    ///
    /// The noise draw is taken from `rng` only when `vm_noise_sigma > 0`.
    pub fn extract_vm<M, R>(&self, curve: &M, v_ref: Bias, rng: &mut R) -> Result<VmReading>
    where
        M: MarginCurve + ?Sized,
        R: Rng + ?Sized,
    {
        let (bias, bias_floored) = Bias::floored(v_ref.volts() + self.clamp_error)?;
        let i_m = curve.margin_at(bias);
        let mut v_m = self.gain() * i_m + self.vm_offset;
        if self.vm_noise_sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            v_m += self.vm_noise_sigma * z;
        }
        Ok(VmReading { v_m, bias_floored })
    }
}
