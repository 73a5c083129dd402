//! Power-up of the bias loop: coarse climb, first flip, fine descent and the
//! steady limit cycle.
//!
//! cargo run --example transient_settling

use mram_dbo::engine::{run_transient, ThermalSchedule};
use mram_dbo::{AnalogConfig, DboConfig, ThermalModel};

fn main() -> mram_dbo::Result<()> {
    let schedule = ThermalSchedule::constant(25.0, 8e-6)?;
    let (trace, m) = run_transient(
        &ThermalModel::default(),
        &AnalogConfig::default(),
        &DboConfig::default(),
        &schedule,
        1,
    )?;
    println!("cycle  v_ref    v_m      flip  cmd");
    for r in &trace.records {
        println!(
            "{:5}  {:.4}  {:.5}  {}     {}",
            r.cycle,
            r.v_ref,
            r.v_m,
            if r.flip { "x" } else { " " },
            r.pump_cmd
        );
    }
    println!(
        "converged at cycle {:?}, ripple {:.1} mV, accuracy {:.4}",
        m.convergence_cycle,
        m.ripple_pp * 1e3,
        m.tracking_accuracy
    );
    Ok(())
}
