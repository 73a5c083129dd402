//! Scenario configuration files (TOML).
//!
//! Every field is optional and falls back to the library defaults. Unknown
//! keys are rejected and reported with their full path, e.g.
//! `dbo.fine_stepp`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analog::AnalogConfig;
use crate::controller::DboConfig;
use crate::device::ThermalModel;
use crate::engine::{AccuracyGrid, ThermalSchedule};
use crate::error::{Error, Result};
use crate::variation::VariationSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub device: ThermalModel,
    pub analog: AnalogConfig,
    pub dbo: DboConfig,
    pub sweep: SweepSection,
    pub transient: TransientSection,
    pub drift: DriftSection,
    pub accuracy: AccuracySection,
    pub variation: VariationSpec,
    pub ber: BerSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            output_dir: PathBuf::from("out"),
            device: ThermalModel::default(),
            analog: AnalogConfig::default(),
            dbo: DboConfig::default(),
            sweep: SweepSection::default(),
            transient: TransientSection::default(),
            drift: DriftSection::default(),
            accuracy: AccuracySection::default(),
            variation: VariationSpec {
                n_cells: 100_000,
                ..Default::default()
            },
            ber: BerSection::default(),
        }
    }
}

/// Which parameter a margin sweep varies between curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    /// A single curve at `temp_c`.
    None,
    /// One curve per `values` entry of tmr0, vh taken at `temp_c`.
    Tmr0,
    /// One curve per `values` entry of vh, tmr0 taken at `temp_c`.
    Vh,
    /// One curve per `values` entry of temperature.
    Temperature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub v_min: f64,
    pub v_max: f64,
    pub points: usize,
    pub temp_c: f64,
    pub family: SweepFamily,
    pub values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            v_min: 0.0,
            v_max: 0.8,
            points: 801,
            temp_c: 25.0,
            family: SweepFamily::None,
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransientSection {
    pub schedule: ThermalSchedule,
}

impl Default for TransientSection {
    fn default() -> Self {
        TransientSection {
            schedule: ThermalSchedule::constant(25.0, 20e-6).expect("valid default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSection {
    pub schedule: ThermalSchedule,
    /// The no-DBO baseline reads at the optimum for this temperature.
    pub fixed_bias_temp_c: f64,
}

/// Ramp rate of the default drift scenario, °C/s.
pub const DEFAULT_DRIFT_RATE: f64 = 98e3;

impl Default for DriftSection {
    fn default() -> Self {
        DriftSection {
            schedule: ThermalSchedule::ramp_between(25.0, 125.0, DEFAULT_DRIFT_RATE, 20e-6, 200e-6)
                .expect("valid default"),
            fixed_bias_temp_c: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracySection {
    pub grid: AccuracyGrid,
    /// Temperatures for the accuracy-versus-temperature table; empty skips it.
    pub temperatures_c: Vec<f64>,
}

impl Default for AccuracySection {
    fn default() -> Self {
        AccuracySection {
            grid: AccuracyGrid::default(),
            temperatures_c: (0..=11).map(|k| -40.0 + 15.0 * k as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerSection {
    /// σ/μ values applied to both tmr0 and vh.
    pub sigma_mu_grid: Vec<f64>,
    pub temperatures_c: Vec<f64>,
    /// FIXED mode reads at the optimum for this temperature ...
    pub fixed_bias_temp_c: f64,
    /// ... unless an explicit bias is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_bias_v: Option<f64>,
}

impl Default for BerSection {
    fn default() -> Self {
        BerSection {
            sigma_mu_grid: (1..=8).map(|k| k as f64 / 100.0).collect(),
            temperatures_c: vec![25.0, 125.0],
            fixed_bias_temp_c: 25.0,
            fixed_bias_v: None,
        }
    }
}

fn section<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config {
        path: path.to_string(),
        message: e.to_string(),
    })
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
            path: "<root>".into(),
            message: e.to_string(),
        })?;
        let cfg: ScenarioConfig =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
                path: e.path().to_string(),
                message: e.into_inner().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            path: "<root>".into(),
            message: e.to_string(),
        })
    }

    /// Checks everything serde cannot: ranges, cross-field constraints and
    /// schedule temperatures against the device range.
    pub fn validate(&self) -> Result<()> {
        section("analog", self.analog.validate())?;
        section("dbo", self.dbo.validate())?;
        section("variation", self.variation.validate())?;

        let s = &self.sweep;
        if !(s.v_min >= 0.0 && s.v_max > s.v_min && s.points >= 2) {
            return Err(Error::Config {
                path: "sweep".into(),
                message: "need 0 <= v_min < v_max and points >= 2".into(),
            });
        }
        if s.family != SweepFamily::None && s.values.is_empty() {
            return Err(Error::Config {
                path: "sweep.values".into(),
                message: "a sweep family needs at least one value".into(),
            });
        }
        section("sweep.temp_c", self.device.params_at(s.temp_c).map(drop))?;

        for (name, sched) in [
            ("transient.schedule", &self.transient.schedule),
            ("drift.schedule", &self.drift.schedule),
        ] {
            self.check_schedule(name, sched)?;
        }
        section(
            "drift.fixed_bias_temp_c",
            self.device
                .params_at(self.drift.fixed_bias_temp_c)
                .map(drop),
        )?;

        let g = &self.accuracy.grid;
        if g.tmr0.is_empty() || g.vh.is_empty() {
            return Err(Error::Config {
                path: "accuracy.grid".into(),
                message: "tmr0 and vh lists must be non-empty".into(),
            });
        }
        for &t in &g.tmr0 {
            for &v in &g.vh {
                section(
                    "accuracy.grid",
                    crate::device::DeviceParams::new(t, v, g.rp).map(drop),
                )?;
            }
        }
        section(
            "accuracy.grid.duration_s",
            ThermalSchedule::constant(g.temp_c, g.duration_s).map(drop),
        )?;
        for &t in &self.accuracy.temperatures_c {
            section(
                "accuracy.temperatures_c",
                self.device.params_at(t).map(drop),
            )?;
        }

        let b = &self.ber;
        for &x in &b.sigma_mu_grid {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::Config {
                    path: "ber.sigma_mu_grid".into(),
                    message: format!("σ/μ must be >= 0, got {x}"),
                });
            }
        }
        for &t in &b.temperatures_c {
            section("ber.temperatures_c", self.device.params_at(t).map(drop))?;
        }
        section(
            "ber.fixed_bias_temp_c",
            self.device.params_at(b.fixed_bias_temp_c).map(drop),
        )?;
        if let Some(v) = b.fixed_bias_v {
            section("ber.fixed_bias_v", crate::device::Bias::new(v).map(drop))?;
        }
        Ok(())
    }

    fn check_schedule(&self, name: &str, sched: &ThermalSchedule) -> Result<()> {
        let segs = sched.segments();
        for (i, seg) in segs.iter().enumerate() {
            let end = segs
                .get(i + 1)
                .map_or(sched.total_duration_s(), |n| n.start_s);
            // Temperature is linear inside a segment: the endpoints bound it.
            for t in [seg.start_s, end - f64::EPSILON * end] {
                let temp = seg.start_temp_c + seg.ramp_c_per_s * (t - seg.start_s);
                if self.device.params_at(temp).is_err() {
                    return Err(Error::Config {
                        path: format!("{name}.segments[{i}]"),
                        message: format!(
                            "temperature {temp:.3} °C at t = {t:e} s is outside the device range"
                        ),
                    });
                }
            }
        }
        if sched.cycles(self.dbo.sample_period) == 0 {
            return Err(Error::Config {
                path: format!("{name}.total_duration_s"),
                message: "shorter than one sample period".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn partial_override() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            seed = 9
            [dbo]
            fine_step = 0.002
            [variation]
            sigma_over_mu_tmr0 = 0.03
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.dbo.fine_step, 0.002);
        assert_eq!(cfg.dbo.coarse_ratio, 20);
        assert_eq!(cfg.variation.sigma_over_mu_tmr0, 0.03);
        assert_eq!(cfg.variation.sigma_over_mu_vh, 0.05);
    }

    #[test]
    fn unknown_key_reports_path() {
        let err = ScenarioConfig::from_toml_str("[dbo]\nfine_stepp = 0.01\n").unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert_eq!(path, "dbo.fine_stepp");
                assert!(message.contains("fine_stepp"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let err = ScenarioConfig::from_toml_str(
            "[device]\nrp_ref = 1e4\n[[device.anchors]]\ntemp_c = 25\ntmr0 = 1\nvh = 0.3\nbogus = 1\n",
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Config { ref path, .. } if path.starts_with("device.anchors"))
        );
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ScenarioConfig::from_toml_str("[dbo]\nfine_step = -1.0\n").is_err());
        let err = ScenarioConfig::from_toml_str(
            "[transient.schedule]\ntotal_duration_s = 1e-5\nsegments = [{start_s = 0.0, start_temp_c = 150.0}]\n",
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Config { ref path, .. } if path == "transient.schedule.segments[0]")
        );
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ScenarioConfig {
            seed: 77,
            ..Default::default()
        };
        cfg.ber.fixed_bias_v = Some(0.35);
        cfg.dbo.rearm_coarse_after = Some(50);
        let text = cfg.to_toml_string().unwrap();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
