//! Margin-versus-bias curves for temperature, tmr0 and vh families.
//!
//! cargo run --example margin_sweeps

use mram_dbo::device::{DeviceParams, ThermalModel};
use mram_dbo::engine::{grid_argmax, sweep_margin};

fn report(label: &str, p: &DeviceParams) -> mram_dbo::Result<()> {
    let pts = sweep_margin(p, 0.0, 1.0, 2001)?;
    let best = grid_argmax(&pts).expect("non-empty sweep");
    println!(
        "{label:<14} v_opt={:.4} V  grid argmax={:.4} V  max I_M={:.3} uA",
        p.v_opt(),
        best.v,
        best.margin_a * 1e6
    );
    Ok(())
}

fn main() -> mram_dbo::Result<()> {
    let thermal = ThermalModel::default();
    for t in [-40.0, 25.0, 85.0, 125.0] {
        report(&format!("T={t} C"), &thermal.params_at(t)?)?;
    }
    let rt = DeviceParams::NOMINAL_RT;
    for tmr0 in [0.6, 1.0, 1.4] {
        report(&format!("tmr0={tmr0}"), &DeviceParams { tmr0, ..rt })?;
    }
    for vh in [0.2, 0.3, 0.4] {
        report(&format!("vh={vh}"), &DeviceParams { vh, ..rt })?;
    }
    Ok(())
}
