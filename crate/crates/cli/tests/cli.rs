use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn conslaw(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conslaw"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn burgers_step_against_monotone_target_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = conslaw(
        dir.path(),
        &["verify", "--set", "data.kind=step", "--set", "data.at=0.3", "--set", "far_field.u_minus=1", "--set", "far_field.u_plus=-1"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("status=pass"));
    for name in ["report.csv", "summary.txt", "field.csv", "manifest.toml"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("kind = \"step\""));
}

#[test]
fn injected_increase_in_a_report_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    fs::write(&report, "t,d2_monotone,l1\n0.0,1.0,5.0\n0.1,0.9,5.0\n0.2,0.95,5.0\n0.3,0.8,5.0\n").unwrap();
    let o = conslaw(dir.path(), &["verify", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("series=d2_monotone k=1"), "{text}");
    assert!(text.contains("status=fail"));
}

#[test]
fn malformed_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "grid = 3\n").unwrap();
    let o = conslaw(dir.path(), &["--config", cfg.to_str().unwrap(), "evolve"]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(&cfg, "[grid\nn = 10\n").unwrap();
    assert_eq!(conslaw(dir.path(), &["--config", cfg.to_str().unwrap(), "evolve"]).status.code(), Some(2));
    assert_eq!(conslaw(dir.path(), &["evolve", "--set", "cfl_ratio=0.5"]).status.code(), Some(2));
}

#[test]
fn non_finite_input_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.csv");
    fs::write(&input, "x_center,u\n0.5,1.0\n1.5,NaN\n").unwrap();
    let o = conslaw(dir.path(), &["project", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn cubic_fan_samples_the_shock_speed() {
    let dir = tempfile::tempdir().unwrap();
    let o = conslaw(dir.path(), &["riemann", "--set", "flux=[0, 0, 0, 1]", "--set", "riemann.samples=7"]);
    assert_eq!(o.status.code(), Some(0));
    let fan = fs::read_to_string(dir.path().join("fan.csv")).unwrap();
    assert!(fan.lines().any(|l| l.starts_with("7.5000000000000000e-1,")), "{fan}");
    let waves = fs::read_to_string(dir.path().join("waves.csv")).unwrap();
    assert!(waves.lines().nth(1).unwrap().starts_with("shock,7.5000000000000000e-1"));
}

#[test]
fn projecting_monotone_data_is_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.csv");
    fs::write(&input, "x_center,u\n0.5,-1.0\n1.5,-0.25\n2.5,0.5\n3.5,0.5\n4.5,1.0\n").unwrap();
    let o = conslaw(dir.path(), &["project", "--input", input.to_str().unwrap(), "--target", "monotone"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("distance_l2=0.0000000000000000e0"));
    let projected = fs::read_to_string(dir.path().join("projected.csv")).unwrap();
    let values: Vec<f64> =
        projected.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values, vec![-1.0, -0.25, 0.5, 0.5, 1.0]);
}

#[test]
fn rarefaction_converges_at_least_at_half_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = conslaw(dir.path(), &["convergence", "--set", "convergence.mesh_sizes=[0.04, 0.02, 0.01, 0.005]"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let slope: f64 = text.trim().rsplit("slope=").next().unwrap().parse().unwrap();
    assert!(slope >= 0.5, "{text}");
    assert_eq!(fs::read_to_string(dir.path().join("rate.csv")).unwrap().lines().count(), 5);
}

#[test]
fn runs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["evolve", "--set", "data.kind=random_bv", "--set", "data.seed=11", "--set", "grid.n=120", "--set", "t_end=0.5"];
    assert_eq!(conslaw(a.path(), &args).status.code(), Some(0));
    assert_eq!(conslaw(b.path(), &args).status.code(), Some(0));
    for name in ["report.csv", "field.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn parallel_sweep_writes_one_directory_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = conslaw(
        dir.path(),
        &["verify", "--sweep", "3", "--set", "data.kind=random_bv", "--set", "grid.n=100", "--set", "scheme=lax_friedrichs"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for seed in 0..3 {
        assert!(dir.path().join(format!("seed_{seed}/summary.txt")).exists());
    }
    assert_eq!(fs::read_to_string(dir.path().join("sweep.csv")).unwrap().lines().count(), 4);
}

#[test]
fn shipped_configurations_verify() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["cubic_monotone.toml", "burgers_ball_2d.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = configs.join(name);
        let o = conslaw(dir.path(), &["--config", cfg.to_str().unwrap(), "verify", "--set", "grid.n=60", "--set", "t_end=0.5"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    }
}
