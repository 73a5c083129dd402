//! Process-variation Monte Carlo and semi-analytic bit-error-rate estimate.
//!
//! Every block owns one P/AP reference pair, shared by its sense amplifiers
//! and by its DBO. Data cells vary independently around the block. A read
//! fails when the sense amplifier's Gaussian input-referred offset exceeds
//! the cell-to-reference current difference, so each cell contributes
//!
//! ```text
//! ½·Φ(−(I_P,cell − I_REF)/σ) + ½·Φ(−(I_REF − I_AP,cell)/σ)
//! ```
//!
//! and the BER is the mean over all sampled cells.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analog::AnalogConfig;
use crate::controller::DboConfig;
use crate::device::{Bias, DeviceParams, ReferencePair, ThermalModel};
use crate::engine::{seeded_rng, settle_on_curve};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::stats::{normal_cdf, Moments};

/// Draws beyond this many standard deviations are rejected and redrawn.
pub const TRUNCATION_SIGMAS: f64 = 4.0;

/// Parameters are never drawn below this fraction of their mean.
pub const FLOOR_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationSpec {
    pub sigma_over_mu_tmr0: f64,
    pub sigma_over_mu_vh: f64,
    pub sigma_over_mu_rp: f64,
    /// Correlation between the tmr0 and vh draws of one device.
    pub corr_tmr0_vh: f64,
    /// Sense-amplifier input-referred offset σ, amperes.
    pub sa_offset_sigma: f64,
    pub n_cells: usize,
    pub n_blocks: usize,
    pub rows: usize,
    pub data_bl: usize,
    pub ref_bl: usize,
    pub temperature_c: f64,
    /// Taken from the scenario seed, never from the variation section.
    #[serde(skip)]
    pub seed: u64,
    /// DBO cycles run per block before its bias is read off.
    pub dbo_settle_cycles: u64,
}

impl Default for VariationSpec {
    fn default() -> Self {
        VariationSpec {
            sigma_over_mu_tmr0: 0.05,
            sigma_over_mu_vh: 0.05,
            sigma_over_mu_rp: 0.0,
            corr_tmr0_vh: 0.0,
            sa_offset_sigma: 1e-6,
            n_cells: 64 * 512 * 32,
            n_blocks: 64,
            rows: 512,
            data_bl: 32,
            ref_bl: 2,
            temperature_c: 25.0,
            seed: 0,
            dbo_settle_cycles: 200,
        }
    }
}

impl VariationSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("variation.sigma_over_mu_tmr0", self.sigma_over_mu_tmr0)?;
        ensure_non_negative("variation.sigma_over_mu_vh", self.sigma_over_mu_vh)?;
        ensure_non_negative("variation.sigma_over_mu_rp", self.sigma_over_mu_rp)?;
        if !(self.corr_tmr0_vh >= -1.0 && self.corr_tmr0_vh <= 1.0) {
            return Err(Error::param(
                "variation.corr_tmr0_vh",
                "must lie in [-1, 1]",
            ));
        }
        ensure_positive("variation.sa_offset_sigma", self.sa_offset_sigma)?;
        if self.n_cells == 0 {
            return Err(Error::param("variation.n_cells", "must be >= 1"));
        }
        if self.n_blocks == 0 || self.rows == 0 || self.data_bl == 0 {
            return Err(Error::param(
                "variation",
                "n_blocks, rows and data_bl must be >= 1",
            ));
        }
        if self.ref_bl != 2 {
            return Err(Error::param(
                "variation.ref_bl",
                "reference generation needs exactly one P and one AP column",
            ));
        }
        if self.n_cells > self.capacity() {
            return Err(Error::param(
                "variation.n_cells",
                format!("exceeds macro capacity of {} data cells", self.capacity()),
            ));
        }
        if self.dbo_settle_cycles == 0 {
            return Err(Error::param("variation.dbo_settle_cycles", "must be >= 1"));
        }
        Ok(())
    }

    /// Data cells in the full macro.
    pub fn capacity(&self) -> usize {
        self.n_blocks * self.rows * self.data_bl
    }

    /// Data cells sampled in block `b`; the remainder of `n_cells / n_blocks`
    /// goes to the lowest-numbered blocks.
    pub fn cells_in_block(&self, b: usize) -> usize {
        self.n_cells / self.n_blocks + usize::from(b < self.n_cells % self.n_blocks)
    }
}

/// Sampled devices of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSample {
    pub refs: ReferencePair,
    pub cells: Vec<DeviceParams>,
}

fn truncated_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= TRUNCATION_SIGMAS {
            return z;
        }
    }
}

fn scaled(mean: f64, sigma_over_mu: f64, z: f64) -> f64 {
    (mean * (1.0 + sigma_over_mu * z)).max(FLOOR_FRACTION * mean)
}

fn draw_device<R: Rng + ?Sized>(
    spec: &VariationSpec,
    base: &DeviceParams,
    rng: &mut R,
) -> DeviceParams {
    // Draw count is independent of the σ values so populations at different
    // σ share their random numbers.
    let z_t = truncated_normal(rng);
    let z_v = loop {
        let z_indep = truncated_normal(rng);
        let rho = spec.corr_tmr0_vh;
        let z = rho * z_t + (1.0 - rho * rho).sqrt() * z_indep;
        if z.abs() <= TRUNCATION_SIGMAS {
            break z;
        }
    };
    let z_r = truncated_normal(rng);
    DeviceParams {
        tmr0: scaled(base.tmr0, spec.sigma_over_mu_tmr0, z_t),
        vh: scaled(base.vh, spec.sigma_over_mu_vh, z_v),
        rp: scaled(base.rp, spec.sigma_over_mu_rp, z_r),
    }
}

/// Draws the reference pair and `n_cells` data cells of one block.
pub fn sample_block<R: Rng + ?Sized>(
    spec: &VariationSpec,
    base: &DeviceParams,
    n_cells: usize,
    rng: &mut R,
) -> BlockSample {
    let ref_p = draw_device(spec, base, rng);
    let ref_ap = draw_device(spec, base, rng);
    let cells = (0..n_cells).map(|_| draw_device(spec, base, rng)).collect();
    BlockSample {
        refs: ReferencePair { ref_p, ref_ap },
        cells,
    }
}

/// Read-error probability of one cell, averaged over stored 0 and 1.
pub fn cell_error_prob(
    cell: &DeviceParams,
    refs: &ReferencePair,
    v_read: Bias,
    sa_sigma: f64,
) -> Result<f64> {
    ensure_positive("sa_sigma", sa_sigma)?;
    let i_ref = refs.reference_current(v_read);
    let c = cell.cell_currents(v_read);
    let (m1, m0) = (c.i_p - i_ref, i_ref - c.i_ap);
    if !(m1.is_finite() && m0.is_finite()) {
        return Err(Error::param("cell", "non-finite cell or reference current"));
    }
    Ok(0.5 * normal_cdf(-m1 / sa_sigma) + 0.5 * normal_cdf(-m0 / sa_sigma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BerMode {
    /// Per-block bias from a settled DBO.
    Dbo,
    /// One constant read bias for every block.
    Fixed(Bias),
}

impl BerMode {
    pub fn label(&self) -> &'static str {
        match self {
            BerMode::Dbo => "DBO",
            BerMode::Fixed(_) => "FIXED",
        }
    }
}

impl fmt::Display for BerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BerMode::Dbo => f.write_str("DBO"),
            BerMode::Fixed(v) => write!(f, "FIXED({:.5} V)", v.volts()),
        }
    }
}

/// A sampled block with the read bias its mode assigns to it.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedBlock {
    pub sample: BlockSample,
    pub v_read: Bias,
}

/// Samples block `b` from its own random stream and resolves its read bias.
/// The population does not depend on `mode`.
pub fn realize_block(
    spec: &VariationSpec,
    base: &DeviceParams,
    b: usize,
    mode: BerMode,
    dbo: &DboConfig,
    analog: &AnalogConfig,
) -> Result<RealizedBlock> {
    let mut rng = seeded_rng(spec.seed, b as u64);
    let sample = sample_block(spec, base, spec.cells_in_block(b), &mut rng);
    let v_read = match mode {
        BerMode::Fixed(v) => v,
        BerMode::Dbo => {
            let settled =
                settle_on_curve(&sample.refs, analog, dbo, spec.dbo_settle_cycles, &mut rng)?;
            Bias::new(settled.mean_v_ref)?
        }
    };
    Ok(RealizedBlock { sample, v_read })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerResult {
    pub mode: BerMode,
    pub ber: f64,
    /// Standard error of the mean over per-cell probabilities.
    pub stderr: f64,
    pub n_cells_evaluated: u64,
    /// Read bias averaged over blocks.
    pub mean_v_read: f64,
    pub temperature_c: f64,
}

/// Mean read-error probability over the sampled macro.
pub fn estimate_ber(
    spec: &VariationSpec,
    thermal: &ThermalModel,
    mode: BerMode,
    dbo: &DboConfig,
    analog: &AnalogConfig,
) -> Result<BerResult> {
    spec.validate()?;
    dbo.validate()?;
    analog.validate()?;
    let base = thermal.params_at(spec.temperature_c)?;

    let per_block: Vec<(Moments, f64)> = (0..spec.n_blocks)
        .into_par_iter()
        .map(|b| {
            let blk = realize_block(spec, &base, b, mode, dbo, analog)?;
            let mut m = Moments::default();
            for cell in &blk.sample.cells {
                m.push(cell_error_prob(
                    cell,
                    &blk.sample.refs,
                    blk.v_read,
                    spec.sa_offset_sigma,
                )?);
            }
            Ok((m, blk.v_read.volts()))
        })
        .collect::<Result<_>>()?;

    // Reduce in block order so the result does not depend on scheduling.
    let mut total = Moments::default();
    let mut v_sum = crate::stats::NeumaierSum::default();
    for (m, v) in &per_block {
        total.merge(m);
        v_sum.add(*v);
    }
    Ok(BerResult {
        mode,
        ber: total.mean().clamp(0.0, 1.0),
        stderr: total.std_error(),
        n_cells_evaluated: total.n,
        mean_v_read: v_sum.sum() / spec.n_blocks as f64,
        temperature_c: spec.temperature_c,
    })
}
