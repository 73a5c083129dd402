//! Semi-analytic bit error rate of a sampled array, per-block DBO versus one
//! fixed bias.
//!
//! cargo run --release --example ber_monte_carlo

use mram_dbo::device::Bias;
use mram_dbo::{estimate_ber, AnalogConfig, BerMode, DboConfig, ThermalModel, VariationSpec};

fn main() -> mram_dbo::Result<()> {
    let thermal = ThermalModel::default();
    let fixed = BerMode::Fixed(Bias::new(thermal.params_at(25.0)?.v_opt())?);
    println!("temp   sigma/mu  mode   v_read   BER          stderr");
    for temp in [25.0, 125.0] {
        for sm in [0.02, 0.05, 0.08] {
            let spec = VariationSpec {
                sigma_over_mu_tmr0: sm,
                sigma_over_mu_vh: sm,
                n_cells: 200_000,
                temperature_c: temp,
                seed: 42,
                ..Default::default()
            };
            for mode in [BerMode::Dbo, fixed] {
                let r = estimate_ber(
                    &spec,
                    &thermal,
                    mode,
                    &DboConfig::default(),
                    &AnalogConfig::default(),
                )?;
                println!(
                    "{temp:5.0}  {sm:8.2}  {:<5}  {:.4}  {:.4e}  {:.1e}",
                    mode.label(),
                    r.mean_v_read,
                    r.ber,
                    r.stderr
                );
            }
        }
    }
    Ok(())
}
