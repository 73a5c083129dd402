//! 25 C to 125 C ramp: the loop follows v_opt while a fixed room-temperature
//! bias loses margin.
//!
//! cargo run --example thermal_drift

use mram_dbo::device::Bias;
use mram_dbo::engine::{compare_fixed_bias, run_transient};
use mram_dbo::ScenarioConfig;

fn main() -> mram_dbo::Result<()> {
    let cfg = ScenarioConfig::default();
    let (trace, m) = run_transient(
        &cfg.device,
        &cfg.analog,
        &cfg.dbo,
        &cfg.drift.schedule,
        cfg.seed,
    )?;
    let fixed = Bias::new(cfg.device.params_at(25.0)?.v_opt())?;
    let cmp = compare_fixed_bias(&trace, &cfg.device, fixed)?;

    for (r, c) in trace.records.iter().zip(&cmp).step_by(100) {
        println!(
            "t={:6.2} us  T={:6.1} C  v_ref={:.4}  v_opt={:.4}  I_M dbo={:.3} fixed={:.3} uA",
            r.time_s * 1e6,
            r.temp_c,
            r.v_ref,
            r.v_opt,
            c.margin_dbo_a * 1e6,
            c.margin_fixed_a * 1e6
        );
    }
    let last = cmp.last().expect("non-empty trace");
    println!(
        "worst tracking after lock {:.4}; final margin gain {:+.2} %",
        m.worst_tracking_after_lock.unwrap_or(f64::NAN),
        100.0 * (m.steady_margin_a / last.margin_fixed_a - 1.0)
    );
    Ok(())
}
