use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command as Process;

use droplet_fall::sweep::Axis;
use droplet_fall::{parse_config, run_command, run_preset, run_sweep, Command, RunConfig};
use serde_json::Value;

fn config(dir: &Path, overrides: &[&str]) -> RunConfig {
    let mut all: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    all.push(format!("output_dir={}", Value::from(dir.to_string_lossy().to_string())));
    parse_config("", &all).unwrap()
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                files.insert(p.strip_prefix(dir).unwrap().to_string_lossy().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn first_lines(path: &Path, n: usize) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .take(n)
        .map(|l| if l.starts_with('#') { l.split(',').next().unwrap() } else { l })
        .collect::<Vec<_>>()
        .join(" | ")
}

const SHORT_EVOLVE: &[&str] = &[
    "potential.variant=constant",
    "potential.a=9.8",
    "evolution.dt=1e-3",
    "evolution.n_steps=200",
    "evolution.record_every=50",
    "evolution.snapshots=true",
    "diagnostics.probes=[1.0, 2.0]",
];

#[test]
fn csv_headers_match_golden_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();

    let dir = tmp.path().join("evolve");
    run_command(Command::Evolve, &config(&dir, SHORT_EVOLVE), false).unwrap();
    for f in ["timeseries.csv", "trajectory.csv", "probes.csv", "snapshot_final.csv", "snapshots/record_000000.csv"] {
        seen.push(format!("evolve/{f}: {}", first_lines(&dir.join(f), 1)));
    }
    let dir = tmp.path().join("wigner");
    run_command(Command::Wigner, &config(&dir, &["potential.variant=constant", "potential.a=9.8"]), false).unwrap();
    seen.push(format!("wigner/wigner_t1.csv: {}", first_lines(&dir.join("wigner_t1.csv"), 2)));
    let dir = tmp.path().join("entropy");
    run_command(Command::Entropy, &config(&dir, &["diagnostics.series.t_end=1"]), false).unwrap();
    seen.push(format!("entropy/entropy.csv: {}", first_lines(&dir.join("entropy.csv"), 1)));
    let dir = tmp.path().join("analytic");
    run_command(Command::Analytic, &config(&dir, &["diagnostics.series.t_end=1", "diagnostics.probes=[0]"]), false).unwrap();
    for f in ["analytic_timeseries.csv", "snapshot_t0.csv", "snapshot_t1.csv", "probes.csv"] {
        seen.push(format!("analytic/{f}: {}", first_lines(&dir.join(f), 1)));
    }
    let dir = tmp.path().join("stability");
    let stab = [
        "potential.variant=constant",
        "potential.a=0.98",
        "evolution.dt=1e-3",
        "evolution.n_steps=100",
        "evolution.record_every=50",
        "noise.n_realizations=2",
    ];
    run_command(Command::Stability, &config(&dir, &stab), false).unwrap();
    for f in ["stability.csv", "clean_timeseries.csv", "noisy_timeseries.csv"] {
        seen.push(format!("stability/{f}: {}", first_lines(&dir.join(f), 1)));
    }
    let golden = include_str!("golden/headers.txt");
    let seen = seen.join("\n") + "\n";
    assert_eq!(seen, golden, "actual headers:\n{seen}");
}

#[test]
fn row_counts_and_manifest_inventory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let manifest = run_command(Command::Evolve, &config(&dir, SHORT_EVOLVE), false).unwrap();
    let series = fs::read_to_string(dir.join("timeseries.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 5);
    for line in series.lines().skip(1) {
        assert_eq!(line.split(',').count(), 5);
        for field in line.split(',') {
            let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17, "{field}");
        }
    }
    let snap = fs::read_to_string(dir.join("snapshot_final.csv")).unwrap();
    assert_eq!(snap.lines().count(), 1 + 4096);
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let files = on_disk["files"].as_array().unwrap();
    assert_eq!(files.len(), 4 + 5);
    for f in files {
        let bytes = fs::read(dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
    assert_eq!(on_disk["convention"], "half_laplacian");
    assert_eq!(manifest["summary"], on_disk["summary"]);
    let x = on_disk["summary"]["final_center_of_mass"].as_f64().unwrap();
    assert!((x - 0.5 * 9.8 * 0.04).abs() < 0.0488);
}

#[test]
fn free_space_run_is_stationary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("free");
    run_command(Command::Evolve, &config(&dir, &["evolution.n_steps=1000"]), false).unwrap();
    let text = fs::read_to_string(dir.join("timeseries.csv")).unwrap();
    for line in text.lines().skip(1) {
        let x: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(x.abs() < 1e-10, "{x}");
    }
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    run_command(Command::Evolve, &config(&first, SHORT_EVOLVE), false).unwrap();
    let manifest = fs::read_to_string(first.join("manifest.json")).unwrap();
    let second = tmp.path().join("second");
    let again = parse_config(&manifest, &[format!("output_dir={}", Value::from(second.to_string_lossy().to_string()))]).unwrap();
    run_command(Command::Evolve, &again, false).unwrap();
    assert_eq!(data_files(&first), data_files(&second));
}

#[test]
fn presets_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["fig1", "fig7"] {
        let a = tmp.path().join(format!("{name}_a"));
        let b = tmp.path().join(format!("{name}_b"));
        run_preset(name, &config(&a, &[])).unwrap();
        run_preset(name, &config(&b, &[])).unwrap();
        let (fa, fb) = (data_files(&a), data_files(&b));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{name}");
    }
}

#[test]
fn sweep_writes_isolated_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let axes = vec![Axis::parse("potential.a=[0.098, 0.98]").unwrap(), Axis::parse("droplet.norm=[1, 3]").unwrap()];
    let overrides = vec!["potential.variant=constant".to_string(), "diagnostics.series.t_end=1".to_string()];
    let index = run_sweep(Command::Analytic, "", &overrides, &axes, &out).unwrap();
    assert_eq!(index["runs"].as_array().unwrap().len(), 4);
    for i in 0..4 {
        let m: Value = serde_json::from_str(&fs::read_to_string(out.join(format!("run_{i:03}/manifest.json"))).unwrap()).unwrap();
        let a = m["resolved_config"]["potential"]["a"].as_f64().unwrap();
        let n = m["resolved_config"]["droplet"]["norm"].as_f64().unwrap();
        assert_eq!((a, n), ([0.098, 0.098, 0.98, 0.98][i], [1.0, 3.0, 1.0, 3.0][i]));
    }
    assert!(out.join("sweep.json").exists());
}

fn binary(args: &[&str], dir: &Path) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_droplet-fall"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("DROPLET_FALL_THREADS", "2")
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(binary(&["analytic", "--set", "diagnostics.series.t_end=0.1"], &d.join("ok")), 0);
    assert!(d.join("ok/manifest.json").exists());
    assert_eq!(binary(&["analytic", "--set", "potential.alpha=0.3"], &d.join("cfg")), 2);
    assert!(!d.join("cfg/manifest.json").exists());
    assert_eq!(binary(&["preset", "fig0"], &d.join("preset")), 2);
    let blow = ["evolve", "--set", "evolution.dt=1e308", "--set", "evolution.n_steps=2"];
    assert_eq!(binary(&blow, &d.join("blow")), 3);
    let exit = [
        "evolve",
        "--set",
        "potential.variant=constant",
        "--set",
        "potential.a=9.8",
        "--set",
        "evolution.dt=1e-3",
        "--set",
        "evolution.n_steps=6000",
    ];
    assert_eq!(binary(&exit, &d.join("exit")), 4);
    let noisy = [
        "stability",
        "--enforce",
        "--set",
        "noise.fraction=0.9",
        "--set",
        "noise.n_realizations=2",
        "--set",
        "evolution.dt=1e-3",
        "--set",
        "evolution.n_steps=100",
    ];
    assert_eq!(binary(&noisy, &d.join("noisy")), 5);
    assert!(d.join("noisy/manifest.json").exists());
    let calm = ["stability", "--enforce", "--set", "noise.n_realizations=2", "--set", "evolution.dt=1e-3", "--set", "evolution.n_steps=100"];
    assert_eq!(binary(&calm, &d.join("calm")), 0);
}
