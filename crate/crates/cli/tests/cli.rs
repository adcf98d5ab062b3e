use std::process::{Command, Output};

use serde_json::Value;

fn cqpolar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqpolar")).args(args).env_remove("CQPOLAR_BUDGET").output().unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = cqpolar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json_of(args: &[&str]) -> Value {
    serde_json::from_str(&stdout_of(args)).unwrap()
}

/// Bhattacharyya parameters of the BEC split channels, index order.
fn z_recursion(eps: f64, levels: u32) -> Vec<f64> {
    let mut z = vec![eps];
    for _ in 0..levels {
        z = z.iter().flat_map(|&x| [2.0 * x - x * x, x * x]).collect();
    }
    z
}

fn summary(csv: &str, delta: &str) -> (f64, f64) {
    let line = csv.lines().find(|l| l.starts_with(&format!("# delta={delta} "))).unwrap();
    let field = |key: &str| -> f64 {
        line.split_whitespace().find_map(|t| t.strip_prefix(key)).unwrap().parse().unwrap()
    };
    (field("good_fraction="), field("bad_fraction="))
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn bec_good_fraction_at_n10() {
    let z = z_recursion(0.5, 10);
    let n = z.len() as f64;
    let exact_good = z.iter().filter(|&&x| 1.0 - x > 0.99).count() as f64 / n;
    // Counted from the certified lower bound log₂(2/(1+Z)) on I.
    let certified_good = z.iter().filter(|&&x| (2.0 / (1.0 + x)).log2() > 0.99).count() as f64 / n;
    assert!((0.30..=0.50).contains(&exact_good));

    let csv = stdout_of(&["polarize", "--channel", "bec:0.5", "--n", "10", "--backend", "bounds"]);
    assert!(csv.starts_with("# schema=cqpolar.polarize.v1\n"));
    let (good, _) = summary(&csv, "0.01");
    assert!((0.30..=0.50).contains(&good), "{good}");
    assert_eq!(good, certified_good);
    assert!(good <= exact_good);
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1024);
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[1023][0], "1024");
    for (row, zi) in rows.iter().zip(&z) {
        let f_hi: f64 = row[2].parse().unwrap();
        assert!((f_hi - zi).abs() < 1e-12);
    }
}

#[test]
fn perfect_and_useless_channels_polarize_trivially() {
    for backend in ["exact", "bounds", "hybrid"] {
        let csv = stdout_of(&["polarize", "--channel", "pure_overlap:0", "--n", "3", "--backend", backend]);
        for delta in ["0.1", "0.01"] {
            assert_eq!(summary(&csv, delta), (1.0, 0.0), "{backend}");
        }
        let csv = stdout_of(&["polarize", "--channel", "pure_overlap:1", "--n", "3", "--backend", backend]);
        for delta in ["0.1", "0.01"] {
            assert_eq!(summary(&csv, delta), (0.0, 1.0), "{backend}");
        }
    }
}

#[test]
fn construct_small_bec() {
    let v = json_of(&["construct", "--channel", "bec:0.5", "--n", "2", "--K", "2", "--backend", "exact"]);
    assert_eq!(v["schema"], "cqpolar.construction.v1");
    assert_eq!(v["code"]["info_set"], serde_json::json!([3, 4]));
    assert_eq!(v["code"]["frozen_bits"], serde_json::json!({"1": 0, "2": 0}));
    assert!((v["error_bound"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["channel"], "bec(0.5)");

    let v = json_of(&["construct", "--channel", "bec:0.5", "--n", "2", "--K", "0"]);
    assert_eq!(v["code"]["info_set"], serde_json::json!([]));
    assert_eq!(v["error_bound"].as_f64().unwrap(), 0.0);
}

#[test]
fn construct_bec_n16_quarter_rate() {
    let mut z = z_recursion(0.5, 16);
    z.sort_by(f64::total_cmp);
    let k = 1usize << 14;
    let expected = 2.0 * (0.5 * z[..k].iter().sum::<f64>()).sqrt();
    assert!(expected < 0.1);

    let v = json_of(&["construct", "--channel", "bec:0.5", "--n", "16", "--rate", "0.25", "--backend", "bounds"]);
    assert_eq!(v["code"]["K"], k);
    let bound = v["error_bound"].as_f64().unwrap();
    assert!(bound < 0.1);
    assert!((bound - expected).abs() <= 1e-9 * expected.max(1e-300), "{bound} vs {expected}");
}

#[test]
fn decode_orthogonal_outputs_never_fail() {
    let v = json_of(&["decode", "--channel", "pure_overlap:0", "--n", "2", "--K", "3", "--trials", "500", "--seed", "1"]);
    assert_eq!(v["schema"], "cqpolar.error_report.v1");
    assert!(v["exact_block_error"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["monte_carlo"]["errors"], 0);
    assert_eq!(v["monte_carlo"]["sen_checks_failed"], 0);
}

#[test]
fn decode_identical_outputs() {
    let v = json_of(&["decode", "--channel", "pure_overlap:1", "--n", "1", "--K", "2", "--trials", "4000", "--seed", "5"]);
    let exact = v["exact_block_error"].as_f64().unwrap();
    assert!((exact - 0.75).abs() < 1e-12);
    let est = v["monte_carlo"]["estimate"].as_f64().unwrap();
    let se = v["monte_carlo"]["stderr"].as_f64().unwrap();
    assert!((est - exact).abs() <= 4.0 * se);
}

#[test]
fn decode_bec_matches_exact() {
    let v = json_of(&["decode", "--channel", "bec:0.5", "--n", "2", "--K", "2", "--trials", "10000", "--seed", "11"]);
    assert_eq!(v["code"]["info_set"], serde_json::json!([3, 4]));
    let exact = v["exact_block_error"].as_f64().unwrap();
    let est = v["monte_carlo"]["estimate"].as_f64().unwrap();
    let se = v["monte_carlo"]["stderr"].as_f64().unwrap();
    assert!((est - exact).abs() <= 3.0 * se, "{est} ± {se} vs {exact}");
    assert!(exact <= v["prop2_bound"].as_f64().unwrap() + 1e-8);
    let avg = v["exact_block_error_frozen_average"].as_f64().unwrap();
    assert!(avg <= v["prop2_bound"].as_f64().unwrap() + 1e-8);
}

#[test]
fn decode_reads_code_file_and_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("code.json");
    let report = dir.path().join("construct.json");
    let traj = dir.path().join("traj.csv");
    stdout_of(&["construct", "--channel", "bec:0.3", "--n", "2", "--K", "1", "--out", report.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    std::fs::write(&code, serde_json::to_string(&v["code"]).unwrap()).unwrap();
    let d = json_of(&[
        "decode",
        "--channel",
        "bec:0.3",
        "--n",
        "2",
        "--code",
        code.to_str().unwrap(),
        "--trials",
        "5",
        "--trajectories",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(d["code"], v["code"]);
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("# schema=cqpolar.trajectory.v1\n"));
    assert_eq!(csv.lines().count(), 2 + 5 * 4);
}

#[test]
fn outputs_are_deterministic() {
    let runs: [&[&str]; 3] = [
        &["polarize", "--channel", "bsc:0.11", "--n", "3", "--backend", "exact"],
        &["construct", "--channel", "bpsk:0.5", "--n", "6", "--rate", "0.5", "--frozen", "random", "--seed", "9"],
        &["decode", "--channel", "pure_overlap:0.5", "--n", "2", "--K", "2", "--trials", "300", "--seed", "4"],
    ];
    for args in runs {
        assert_eq!(stdout_of(args), stdout_of(args), "{args:?}");
    }
}

#[test]
fn verify_passes_and_mutation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("verify.json");
    let args = ["verify", "--suite", "synthesis", "--suite", "bounds", "--n", "2", "--random", "1"];
    let ok = cqpolar(&[&args[..], &["--out", json.to_str().unwrap()]].concat());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["schema"], "cqpolar.verify.v1");
    assert_eq!(v["passed"], true);

    let bad = cqpolar(&[&args[..], &["--mutate-fidelity"]].concat());
    assert_eq!(bad.status.code(), Some(1));
    let table = String::from_utf8(bad.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("FAIL") && l.contains("prop5_plus_identity")));
}

#[test]
fn bounds_contain_exact_values() {
    let csv = stdout_of(&["bounds-vs-exact", "--channel", "pure_overlap:0.5", "--n", "3"]);
    assert!(csv.starts_with("# schema=cqpolar.bounds_vs_exact.v1\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn channel_from_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch.json");
    let z = [0.0, 0.0];
    let doc = serde_json::json!({"dim": 2, "rho0": [[1.0, 0.0], z, z, z], "rho1": [z, z, z, [1.0, 0.0]]});
    std::fs::write(&path, doc.to_string()).unwrap();
    let csv = stdout_of(&["polarize", "--channel", path.to_str().unwrap(), "--n", "2", "--backend", "exact"]);
    assert_eq!(summary(&csv, "0.01"), (1.0, 0.0));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"dim": 2, "rho0": [[1,0],[0,0],[0,0],[1,0]], "rho1": [[1,0],[0,0],[0,0],[0,0]]}"#).unwrap();
    let out = cqpolar(&["polarize", "--channel", broken.to_str().unwrap(), "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho0"));
}

#[test]
fn budget_env_var_is_honoured() {
    let run = |budget: &str| {
        Command::new(env!("CARGO_BIN_EXE_cqpolar"))
            .args(["polarize", "--channel", "pure_overlap:0.5", "--n", "3", "--backend", "exact"])
            .env("CQPOLAR_BUDGET", budget)
            .output()
            .unwrap()
    };
    let out = run("elements=16,branches=4096");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("budget"));
    assert!(run("elements=65536,branches=4096").status.success());
    assert!(!run("nonsense").status.success());
}
