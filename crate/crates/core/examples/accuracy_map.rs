//! Steady-state tracking accuracy over a tmr0 x vh grid, then with a noisy
//! analog front end.
//!
//! cargo run --release --example accuracy_map

use mram_dbo::engine::{tracking_accuracy_map, AccuracyGrid};
use mram_dbo::{AnalogConfig, DboConfig};

fn print_map(title: &str, analog: &AnalogConfig) -> mram_dbo::Result<()> {
    let grid = AccuracyGrid::default();
    let pts = tracking_accuracy_map(&grid, analog, &DboConfig::default(), 1)?;
    println!("{title}");
    print!("tmr0\\vh ");
    for vh in &grid.vh {
        print!("{vh:>7.3}");
    }
    println!();
    for row in pts.chunks(grid.vh.len()) {
        print!("{:>7.2} ", row[0].tmr0);
        for p in row {
            print!("{:>7.2}", 100.0 * p.accuracy);
        }
        println!();
    }
    Ok(())
}

fn main() -> mram_dbo::Result<()> {
    print_map("ideal analog, accuracy %", &AnalogConfig::default())?;
    let noisy = AnalogConfig {
        vm_noise_sigma: 2e-4,
        vm_offset: 5e-3,
        ..Default::default()
    };
    print_map("0.2 mV V_M noise + 5 mV offset, accuracy %", &noisy)
}
