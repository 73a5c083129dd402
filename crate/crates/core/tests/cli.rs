use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mram-dbo"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn mram-dbo")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn vopt_prints_six_significant_digits() {
    let o = run(&["vopt", "--tmr0", "1.0", "--vh", "0.3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.424264");

    let o = run(&["vopt", "--tmr0", "0", "--vh", "0.25"]);
    assert_eq!(stdout(&o).trim(), "0.250000");
}

#[test]
fn vopt_rejects_bad_input() {
    for args in [
        ["vopt", "--tmr0", "-1", "--vh", "0.3"],
        ["vopt", "--tmr0", "1", "--vh", "0"],
        ["vopt", "--tmr0", "x", "--vh", "0.3"],
    ] {
        let o = run(&args);
        assert!(!o.status.success(), "{args:?}");
        assert_eq!(o.status.code(), Some(2));
    }
}

#[test]
fn transient_reports_convergence_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["transient", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "convergence_cycle=18"));
    assert!(dir.path().join("transient.csv").exists());
    assert!(dir.path().join("effective_config.toml").exists());

    let q = run(&[
        "transient",
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(q.status.success() && q.stdout.is_empty());
}

#[test]
fn ber_table_has_32_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "ber",
        "--cells",
        "4096",
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("ber.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mode,v_read,temp_c,sigma_mu_tmr0,sigma_mu_vh,ber,stderr,n_cells"
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 32);
    assert_eq!(rows.iter().filter(|r| r.starts_with("DBO,")).count(), 16);
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_and_config_echo_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let cmds: [&[&str]; 4] = [
        &["sweep", "--family", "temperature", "--values", "-40,25,125"],
        &["transient", "--temp", "85"],
        &["drift"],
        &["ber", "--cells", "8192", "--sigma-mu", "0.03,0.06"],
    ];
    for cmd in cmds {
        for d in [&a, &b] {
            let mut args = vec![
                "--seed",
                "11",
                "--quiet",
                "--out",
                d.path().to_str().unwrap(),
            ];
            args.extend_from_slice(cmd);
            let o = run(&args);
            assert!(
                o.status.success(),
                "{cmd:?}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
        }
        // Replaying the echoed effective config reproduces the run.
        let echo = a.path().join("effective_config.toml");
        let o = run(&[
            "--config",
            echo.to_str().unwrap(),
            "--quiet",
            "--out",
            c.path().to_str().unwrap(),
            cmd[0],
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ca = csvs(a.path());
    assert!(ca.len() >= 8);
    assert_eq!(ca, csvs(b.path()));
    assert_eq!(ca, csvs(c.path()));
}

#[test]
fn plots_do_not_change_csvs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, plot) in [(&a, true), (&b, false)] {
        let mut args = vec!["--quiet", "--out", d.path().to_str().unwrap(), "drift"];
        if plot {
            args.push("--plot");
        }
        assert!(run(&args).status.success());
    }
    assert!(a.path().join("drift_margin.svg").exists());
    assert!(!b.path().join("drift_margin.svg").exists());
    assert_eq!(csvs(a.path()), csvs(b.path()));
}

#[test]
fn unknown_config_key_is_rejected_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[dbo]\nfine_stepp = 0.004\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "transient"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dbo.fine_stepp"), "{err}");
}

#[test]
fn flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 5\n[sweep]\ntemp_c = 125.0\npoints = 11\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
        "sweep",
        "--points",
        "21",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = std::fs::read_to_string(out.join("effective_config.toml")).unwrap();
    assert!(echo.contains("points = 21"));
    assert!(echo.contains("temp_c = 125.0"));
    assert!(echo.contains("seed = 5"));
    let rows = std::fs::read_to_string(out.join("sweep.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 22);
}
