//! Closed-form optimal read bias and the margin around it.
//!
//! cargo run --example optimal_bias

use mram_dbo::device::{optimal_bias, Bias, DeviceParams};

fn main() -> mram_dbo::Result<()> {
    let p = DeviceParams::NOMINAL_RT;
    let v_opt = p.v_opt();
    println!("tmr0={} vh={} V rp={} ohm", p.tmr0, p.vh, p.rp);
    println!(
        "v_opt = {v_opt:.6} V, margin there = {:.4} uA",
        p.margin(Bias::new(v_opt)?) * 1e6
    );

    for v in [0.1, 0.2, 0.3, v_opt, 0.6, 0.8] {
        let b = Bias::new(v)?;
        let c = p.cell_currents(b);
        println!(
            "V={v:.4}  TMR={:5.1} %  I_P={:7.3} uA  I_AP={:7.3} uA  I_ref={:7.3} uA  I_M={:.4} uA",
            100.0 * p.tmr_at(b),
            c.i_p * 1e6,
            c.i_ap * 1e6,
            p.reference_current(b) * 1e6,
            p.margin(b) * 1e6
        );
    }

    // tmr0 = 0 degenerates to v_opt = vh.
    println!("optimal_bias(0, 0.25) = {}", optimal_bias(0.0, 0.25));
    Ok(())
}
