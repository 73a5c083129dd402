//! Analytic MTJ read model.
//!
//! The TMR ratio rolls off with read bias as
//!
//! ```text
//! TMR(V) = TMR(0) / (1 + V² / Vh²)
//! ```
//!
//! and with a mid-point reference `(I_P + I_AP) / 2` the read-1 and read-0
//! margins coincide:
//!
//! ```text
//! I_M = TMR(0) / (2 R_P) · 1 / ((1 + TMR(0)) / V + V / Vh²)
//! ```
//!
//! which peaks at `V_OPT = Vh · √(1 + TMR(0))`.
//!
//! Temperature enters only through [`ThermalModel`], which interpolates
//! `TMR(0)`, `Vh` (and optionally `R_P`) between anchor points.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// A non-negative read bias in volts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Bias(f64);

impl Bias {
    pub const ZERO: Bias = Bias(0.0);

    pub fn new(volts: f64) -> Result<Self> {
        ensure_non_negative("bias", volts)?;
        Ok(Bias(volts))
    }

    /// Floors negative values at zero. Returns the bias and whether the
    /// floor was applied. Non-finite input is rejected.
    pub fn floored(volts: f64) -> Result<(Self, bool)> {
        if !volts.is_finite() {
            return Err(Error::param("bias", format!("must be finite, got {volts}")));
        }
        if volts < 0.0 {
            Ok((Bias::ZERO, true))
        } else {
            Ok((Bias(volts), false))
        }
    }

    #[inline]
    pub fn volts(self) -> f64 {
        self.0
    }
}

/// Electrical parameters of an MTJ at one operating temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Zero-bias TMR ratio (1.0 = 100 %).
    pub tmr0: f64,
    /// Half-TMR voltage in volts.
    pub vh: f64,
    /// Parallel-state resistance in ohms.
    pub rp: f64,
}

/// Parallel and anti-parallel cell currents at one bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCurrents {
    pub i_p: f64,
    pub i_ap: f64,
}

impl DeviceParams {
    /// Nominal room-temperature device: 100 % TMR, 0.3 V half-TMR voltage, 10 kΩ.
    pub const NOMINAL_RT: DeviceParams = DeviceParams {
        tmr0: 1.0,
        vh: 0.3,
        rp: 10e3,
    };

    pub fn new(tmr0: f64, vh: f64, rp: f64) -> Result<Self> {
        let p = DeviceParams { tmr0, vh, rp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("tmr0", self.tmr0)?;
        ensure_positive("vh", self.vh)?;
        ensure_positive("rp", self.rp)
    }

    /// Bias-dependent TMR ratio.
    pub fn tmr_at(&self, v: Bias) -> f64 {
        let x = v.volts() / self.vh;
        self.tmr0 / (1.0 + x * x)
    }

    /// Anti-parallel resistance at the given bias.
    pub fn r_ap(&self, v: Bias) -> f64 {
        self.rp * (1.0 + self.tmr_at(v))
    }

    pub fn cell_currents(&self, v: Bias) -> CellCurrents {
        let v_ = v.volts();
        CellCurrents {
            i_p: v_ / self.rp,
            i_ap: v_ / self.r_ap(v),
        }
    }

    /// Mid-point reference current produced by a matched P/AP pair and a
    /// 2:1 mirror.
    pub fn reference_current(&self, v: Bias) -> f64 {
        let c = self.cell_currents(v);
        (c.i_p + c.i_ap) / 2.0
    }

    /// Sensing margin in amperes, closed form. Zero at zero bias.
    pub fn margin(&self, v: Bias) -> f64 {
        let v_ = v.volts();
        if v_ == 0.0 {
            return 0.0;
        }
        self.tmr0 / (2.0 * self.rp) / ((1.0 + self.tmr0) / v_ + v_ / (self.vh * self.vh))
    }

    /// Bias that maximizes [`DeviceParams::margin`].
    pub fn v_opt(&self) -> f64 {
        optimal_bias(self.tmr0, self.vh)
    }
}

/// `vh · √(1 + tmr0)`. Accepts `tmr0 = 0` (degenerate device), where the
/// optimum collapses to `vh`.
pub fn optimal_bias(tmr0: f64, vh: f64) -> f64 {
    vh * (1.0 + tmr0).sqrt()
}

/// Anything that yields a sensing margin as a function of read bias.
pub trait MarginCurve {
    fn margin_at(&self, v: Bias) -> f64;
}

impl MarginCurve for DeviceParams {
    fn margin_at(&self, v: Bias) -> f64 {
        self.margin(v)
    }
}

/// The two reference cells of a block: one held in P, one held in AP.
///
/// With mismatched cells the reference current is
/// `(I_P(ref_p) + I_AP(ref_ap)) / 2` and the margin the DBO observes is
/// half their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePair {
    pub ref_p: DeviceParams,
    pub ref_ap: DeviceParams,
}

impl ReferencePair {
    pub fn matched(p: DeviceParams) -> Self {
        ReferencePair {
            ref_p: p,
            ref_ap: p,
        }
    }

    pub fn reference_current(&self, v: Bias) -> f64 {
        let i_p = self.ref_p.cell_currents(v).i_p;
        let i_ap = self.ref_ap.cell_currents(v).i_ap;
        (i_p + i_ap) / 2.0
    }
}

impl MarginCurve for ReferencePair {
    fn margin_at(&self, v: Bias) -> f64 {
        let i_p = self.ref_p.cell_currents(v).i_p;
        let i_ap = self.ref_ap.cell_currents(v).i_ap;
        (i_p - i_ap) / 2.0
    }
}

/// One tabulated point of the temperature dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub temp_c: f64,
    pub tmr0: f64,
    pub vh: f64,
    /// Per-anchor override of the parallel resistance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rp: Option<f64>,
}

impl Anchor {
    pub fn new(temp_c: f64, tmr0: f64, vh: f64) -> Self {
        Anchor {
            temp_c,
            tmr0,
            vh,
            rp: None,
        }
    }
}

/// Raw serde form of [`ThermalModel`]; converted with validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalModelDef {
    pub anchors: Vec<Anchor>,
    pub rp_ref: f64,
    #[serde(default = "default_range")]
    pub range_c: [f64; 2],
}

fn default_range() -> [f64; 2] {
    [-40.0, 125.0]
}

/// Piecewise-linear temperature dependence of the device parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThermalModelDef", into = "ThermalModelDef")]
pub struct ThermalModel {
    anchors: Vec<Anchor>,
    rp_ref: f64,
    range_c: [f64; 2],
}

impl TryFrom<ThermalModelDef> for ThermalModel {
    type Error = Error;

    fn try_from(def: ThermalModelDef) -> Result<Self> {
        ThermalModel::with_range(def.anchors, def.rp_ref, def.range_c)
    }
}

impl From<ThermalModel> for ThermalModelDef {
    fn from(tm: ThermalModel) -> Self {
        ThermalModelDef {
            anchors: tm.anchors,
            rp_ref: tm.rp_ref,
            range_c: tm.range_c,
        }
    }
}

impl Default for ThermalModel {
    /// Nominal corners: 100 % / 0.3 V at 25 °C, 70 % / 0.22 V at 125 °C, R_P = 10 kΩ.
    fn default() -> Self {
        ThermalModel::new(
            vec![Anchor::new(25.0, 1.0, 0.3), Anchor::new(125.0, 0.7, 0.22)],
            10e3,
        )
        .expect("built-in anchors are valid")
    }
}

impl ThermalModel {
    /// Builds a model over the default −40 °C … 125 °C simulation range.
    pub fn new(anchors: Vec<Anchor>, rp_ref: f64) -> Result<Self> {
        Self::with_range(anchors, rp_ref, default_range())
    }

    pub fn with_range(anchors: Vec<Anchor>, rp_ref: f64, range_c: [f64; 2]) -> Result<Self> {
        if anchors.len() < 2 {
            return Err(Error::param("anchors", "need at least two anchors"));
        }
        for w in anchors.windows(2) {
            // Negated so NaN is rejected too.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(w[1].temp_c > w[0].temp_c) {
                return Err(Error::param(
                    "anchors",
                    format!(
                        "temperatures must be strictly increasing ({} then {})",
                        w[0].temp_c, w[1].temp_c
                    ),
                ));
            }
        }
        for a in &anchors {
            if !a.temp_c.is_finite() {
                return Err(Error::param("anchors", "temperature must be finite"));
            }
            ensure_positive("anchor.tmr0", a.tmr0)?;
            ensure_positive("anchor.vh", a.vh)?;
            if let Some(rp) = a.rp {
                ensure_positive("anchor.rp", rp)?;
            }
        }
        ensure_positive("rp_ref", rp_ref)?;
        if !(range_c[0].is_finite() && range_c[1].is_finite() && range_c[0] < range_c[1]) {
            return Err(Error::param(
                "range_c",
                format!("need finite min < max, got {range_c:?}"),
            ));
        }
        let tm = ThermalModel {
            anchors,
            rp_ref,
            range_c,
        };
        // Extrapolation must stay physical over the whole range.
        for t in range_c {
            tm.params_at(t)?.validate().map_err(|e| {
                Error::param(
                    "anchors",
                    format!("extrapolation to {t} °C is non-physical: {e}"),
                )
            })?;
        }
        Ok(tm)
    }

    /// A temperature-independent model that always yields `p`.
    pub fn constant(p: DeviceParams) -> Result<Self> {
        p.validate()?;
        let [lo, hi] = default_range();
        ThermalModel::new(
            vec![Anchor::new(lo, p.tmr0, p.vh), Anchor::new(hi, p.tmr0, p.vh)],
            p.rp,
        )
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn rp_ref(&self) -> f64 {
        self.rp_ref
    }

    pub fn range_c(&self) -> [f64; 2] {
        self.range_c
    }

    fn anchor_rp(&self, a: &Anchor) -> f64 {
        a.rp.unwrap_or(self.rp_ref)
    }

    /// Device parameters at `temp_c`, interpolated linearly between anchors
    /// and extrapolated from the nearest segment outside the anchor span.
    pub fn params_at(&self, temp_c: f64) -> Result<DeviceParams> {
        let [min_c, max_c] = self.range_c;
        if !(temp_c >= min_c && temp_c <= max_c) {
            return Err(Error::TemperatureRange {
                temp_c,
                min_c,
                max_c,
            });
        }
        if let Some(a) = self.anchors.iter().find(|a| a.temp_c == temp_c) {
            return Ok(DeviceParams {
                tmr0: a.tmr0,
                vh: a.vh,
                rp: self.anchor_rp(a),
            });
        }
        let n = self.anchors.len();
        // Index of the segment [i, i + 1] to use.
        let i = match self.anchors.iter().position(|a| a.temp_c > temp_c) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => n - 2,
        };
        let (a, b) = (&self.anchors[i], &self.anchors[i + 1]);
        let f = (temp_c - a.temp_c) / (b.temp_c - a.temp_c);
        let lerp = |x: f64, y: f64| x + (y - x) * f;
        Ok(DeviceParams {
            tmr0: lerp(a.tmr0, b.tmr0),
            vh: lerp(a.vh, b.vh),
            rp: lerp(self.anchor_rp(a), self.anchor_rp(b)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn b(v: f64) -> Bias {
        Bias::new(v).unwrap()
    }

    #[test]
    fn tmr_rolloff() {
        let rt = DeviceParams::NOMINAL_RT;
        assert_eq!(rt.tmr_at(Bias::ZERO), 1.0);
        assert_eq!(rt.tmr_at(b(0.3)), 0.5);
        let hot = DeviceParams::new(0.7, 0.22, 10e3).unwrap();
        assert_relative_eq!(hot.tmr_at(b(0.44)), 0.14, max_relative = 1e-12);
    }

    #[test]
    fn negative_bias_rejected() {
        assert!(Bias::new(-1e-3).is_err());
        assert!(Bias::new(f64::NAN).is_err());
        assert_eq!(Bias::floored(-0.2).unwrap(), (Bias::ZERO, true));
    }

    #[test]
    fn currents_and_reference() {
        let rt = DeviceParams::NOMINAL_RT;
        let c = rt.cell_currents(b(0.3));
        assert_relative_eq!(c.i_p, 30e-6, max_relative = 1e-12);
        assert_relative_eq!(c.i_ap, 20e-6, max_relative = 1e-12);
        assert_relative_eq!(rt.reference_current(b(0.3)), 25e-6, max_relative = 1e-12);
        assert_eq!(
            rt.cell_currents(Bias::ZERO),
            CellCurrents {
                i_p: 0.0,
                i_ap: 0.0
            }
        );
        assert_eq!(rt.reference_current(Bias::ZERO), 0.0);
        // mean of 42.43 µA and 42.43 µA / (1 + 1/3) at 0.4243 V
        let v = 0.4243;
        let i_p = v / 10e3;
        let i_ap = v / (10e3 * (1.0 + 1.0 / (1.0 + v * v / 0.09)));
        assert_relative_eq!(
            rt.reference_current(b(v)),
            (i_p + i_ap) / 2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(rt.reference_current(b(v)), 37.127e-6, max_relative = 1e-4);
    }

    #[test]
    fn margin_values() {
        let rt = DeviceParams::NOMINAL_RT;
        assert_relative_eq!(rt.margin(b(0.3)), 5.0e-6, max_relative = 1e-12);
        assert_relative_eq!(rt.margin(b(0.4243)), 5.303e-6, max_relative = 1e-4);
        assert_eq!(rt.margin(Bias::ZERO), 0.0);
    }

    #[test]
    fn optimum() {
        assert_relative_eq!(DeviceParams::NOMINAL_RT.v_opt(), 0.42426, epsilon = 1e-5);
        assert_relative_eq!(
            DeviceParams::new(0.7, 0.22, 10e3).unwrap().v_opt(),
            0.28684,
            epsilon = 1e-5
        );
        assert_eq!(optimal_bias(0.0, 0.25), 0.25);
        // 1 mV grid cross-check
        let rt = DeviceParams::NOMINAL_RT;
        let best = (1..=1000)
            .map(|k| k as f64 * 1e-3)
            .max_by(|x, y| rt.margin(b(*x)).total_cmp(&rt.margin(b(*y))))
            .unwrap();
        assert!((best - rt.v_opt()).abs() <= 1e-3);
    }

    #[test]
    fn matched_pair_equals_closed_form() {
        let p = DeviceParams::new(1.3, 0.27, 12e3).unwrap();
        let pair = ReferencePair::matched(p);
        for k in 1..50 {
            let v = b(k as f64 * 0.02);
            assert_relative_eq!(pair.margin_at(v), p.margin(v), max_relative = 1e-12);
            assert_relative_eq!(
                pair.reference_current(v),
                p.reference_current(v),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn table_one_anchors() {
        let tm = ThermalModel::default();
        let rt = tm.params_at(25.0).unwrap();
        assert_eq!((rt.tmr0, rt.vh, rt.rp), (1.0, 0.3, 10e3));
        let hot = tm.params_at(125.0).unwrap();
        assert_eq!((hot.tmr0, hot.vh, hot.rp), (0.7, 0.22, 10e3));
        let mid = tm.params_at(75.0).unwrap();
        assert_relative_eq!(mid.tmr0, 0.85, max_relative = 1e-12);
        assert_relative_eq!(mid.vh, 0.26, max_relative = 1e-12);
    }

    #[test]
    fn extrapolates_and_rejects_out_of_range() {
        let tm = ThermalModel::default();
        let cold = tm.params_at(-40.0).unwrap();
        assert_relative_eq!(cold.tmr0, 1.0 + 0.3 * 0.65, max_relative = 1e-12);
        assert_relative_eq!(cold.vh, 0.3 + 0.08 * 0.65, max_relative = 1e-12);
        assert!(matches!(
            tm.params_at(126.0),
            Err(Error::TemperatureRange { .. })
        ));
        assert!(tm.params_at(-41.0).is_err());
        assert!(tm.params_at(f64::NAN).is_err());
    }

    #[test]
    fn anchor_validation() {
        assert!(ThermalModel::new(vec![Anchor::new(25.0, 1.0, 0.3)], 10e3).is_err());
        assert!(ThermalModel::new(
            vec![Anchor::new(25.0, 1.0, 0.3), Anchor::new(25.0, 0.7, 0.22)],
            10e3
        )
        .is_err());
        assert!(ThermalModel::new(
            vec![Anchor::new(25.0, 1.0, 0.3), Anchor::new(125.0, -0.1, 0.22)],
            10e3
        )
        .is_err());
        // steep slope extrapolates negative below the range
        assert!(ThermalModel::new(
            vec![Anchor::new(25.0, 0.1, 0.3), Anchor::new(30.0, 0.9, 0.3)],
            10e3
        )
        .is_err());
    }

    #[test]
    fn rp_override_interpolates() {
        let mut hot = Anchor::new(125.0, 0.7, 0.22);
        hot.rp = Some(12e3);
        let tm = ThermalModel::new(vec![Anchor::new(25.0, 1.0, 0.3), hot], 10e3).unwrap();
        assert_eq!(tm.params_at(25.0).unwrap().rp, 10e3);
        assert_eq!(tm.params_at(125.0).unwrap().rp, 12e3);
        assert_relative_eq!(tm.params_at(75.0).unwrap().rp, 11e3, max_relative = 1e-12);
    }

    #[test]
    fn constant_model() {
        let p = DeviceParams::new(0.9, 0.25, 8e3).unwrap();
        let tm = ThermalModel::constant(p).unwrap();
        for t in [-40.0, 0.0, 25.0, 99.5, 125.0] {
            assert_eq!(tm.params_at(t).unwrap(), p);
        }
    }
}
