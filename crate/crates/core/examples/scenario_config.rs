//! Loading a partial TOML scenario, running two commands and echoing the
//! effective configuration.
//!
//! cargo run --example scenario_config

use mram_dbo::commands;
use mram_dbo::ScenarioConfig;

const SCENARIO: &str = r#"
seed = 3

[dbo]
fine_step = 0.002
coarse_ratio = 40

[analog]
vm_noise_sigma = 1e-4

[transient.schedule]
total_duration_s = 3e-5
segments = [{ start_s = 0.0, start_temp_c = 85.0, ramp_c_per_s = 0.0 }]
"#;

fn main() -> mram_dbo::Result<()> {
    let out = tempfile::tempdir().expect("temp dir");
    let mut cfg = ScenarioConfig::from_toml_str(SCENARIO)?;
    cfg.output_dir = out.path().to_path_buf();

    print!("{}", commands::transient(&cfg, false)?);
    print!("{}", commands::sweep(&cfg, false)?);

    let echoed =
        std::fs::read_to_string(out.path().join(commands::EFFECTIVE_CONFIG)).expect("echo");
    println!("--- effective config (first lines) ---");
    for line in echoed.lines().take(12) {
        println!("{line}");
    }

    match ScenarioConfig::from_toml_str("[dbo]\nfine_stepp = 1e-3\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("unknown keys are rejected"),
    }
    Ok(())
}
