use std::path::{Path, PathBuf};
use std::process::Command;

use aoi_core::cli::ConfigFile;
use aoi_core::table::parse_vec;
use aoi_core::SamplingPolicy;

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

fn aoi(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_aoi")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn run_ok(command: &str, config: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let (code, err) = aoi(&args);
    assert_eq!(code, 0, "{err}");
    std::fs::read_to_string(out).unwrap()
}

/// Rows below the metadata line and header, keyed by column name.
fn rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("no column {key}"))
        .1
}

fn num(row: &[(String, String)], key: &str) -> f64 {
    field(row, key).parse().unwrap()
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut ConfigFile)) -> PathBuf {
    let mut c = ConfigFile::load(&default_config()).unwrap();
    edit(&mut c);
    let path = dir.join("config.toml");
    std::fs::write(&path, c.to_toml()).unwrap();
    path
}

#[test]
fn config_round_trips() {
    let parsed = ConfigFile::load(&default_config()).unwrap();
    assert_eq!(parsed, ConfigFile::reference());
    let again = ConfigFile::parse(&parsed.to_toml()).unwrap();
    assert_eq!(parsed, again);
    assert_eq!(parsed.to_toml(), again.to_toml());
}

#[test]
fn solve_at_zero_uses_small_theta_branch() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_ok("solve", &default_config(), &dir.path().join("s.csv"), &[]);
    assert!(text.starts_with("# command=solve,config_hash="));
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(field(&r[0], "branch"), "small-theta");
}

#[test]
fn sweep_rows_revalidate_and_flatten() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_ok(
        "sweep",
        &default_config(),
        &dir.path().join("w.csv"),
        &["--theta-grid", "1,1e6,7"],
    );
    let file = ConfigFile::reference();
    let (ch, cfg) = (file.channel().unwrap(), file.system().unwrap());
    let r = rows(&text);
    assert_eq!(r.len(), 7);
    for row in &r {
        let policy = SamplingPolicy {
            slots: parse_vec(field(row, "slots")).unwrap(),
            powers: parse_vec(field(row, "powers")).unwrap(),
        };
        policy.validate(&ch, &cfg).unwrap();
        assert!(policy.is_integer());
    }
    let first = parse_vec(field(&r[0], "continuous_slots")).unwrap();
    assert!(first.windows(2).all(|w| w[0] > w[1]), "{first:?}");
    let last = parse_vec(field(&r[6], "continuous_slots")).unwrap();
    let spread = last.iter().cloned().fold(f64::MIN, f64::max) - last.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 1e-3 * cfg.n_max(), "{last:?}");
}

#[test]
fn compare_orders_the_four_curves() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_ok("compare", &default_config(), &dir.path().join("c.csv"), &[]);
    let r = rows(&text);
    assert_eq!(r.len(), 20);
    for row in &r {
        let ours = num(row, "proposed_norm");
        assert!(num(row, "oracle_norm") <= ours);
        assert!(ours <= num(row, "avg_baseline_norm"));
        assert!(ours <= num(row, "max_baseline_norm"));
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = default_config();
    let (a, b, c) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("c.csv"),
    );
    assert_eq!(
        run_ok("sweep", &cfg, &a, &[]),
        run_ok("sweep", &cfg, &b, &["--sequential"])
    );
    let sim = ["--seed", "3", "--packets", "20000", "--theta", "100"];
    let ta = dir.path().join("ta.csv");
    let tb = dir.path().join("tb.csv");
    let mut with_a = sim.to_vec();
    with_a.extend(["--trace", ta.to_str().unwrap()]);
    let mut with_b = sim.to_vec();
    with_b.extend(["--trace", tb.to_str().unwrap()]);
    assert_eq!(
        run_ok("simulate", &cfg, &a, &with_a),
        run_ok("simulate", &cfg, &c, &with_b)
    );
    let trace = std::fs::read_to_string(&ta).unwrap();
    assert_eq!(trace, std::fs::read_to_string(&tb).unwrap());
    assert!(trace.starts_with("# seed=3,packets=20000,rng=ChaCha8,config_hash="));
    assert_eq!(trace.lines().count(), 20_002);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();

    let (code, _) = aoi(&["bogus", "--config", default_config().to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2);

    let missing = dir.path().join("missing.toml");
    let (code, err) = aoi(&["solve", "--config", missing.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2, "{err}");

    let bad = write_config(dir.path(), |c| c.channel.probs[0] = 0.5);
    let (code, err) = aoi(&["solve", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2);
    assert!(err.contains("probabilities sum"), "{err}");

    let poor = write_config(dir.path(), |c| c.system.avg_power_w = 0.01);
    let (code, err) = aoi(&["solve", "--config", poor.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 3);
    assert!(err.contains("average power"), "{err}");

    let wide = write_config(dir.path(), |c| {
        c.channel.snr = (1..=11).map(f64::from).collect();
        c.channel.probs = vec![0.09; 10];
        c.channel.probs.push(0.1);
    });
    let (code, err) = aoi(&["oracle", "--config", wide.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 4, "{err}");

    let (code, _) = aoi(&[
        "sweep",
        "--config",
        default_config().to_str().unwrap(),
        "--out",
        out,
        "--theta",
        "0",
    ]);
    assert_eq!(code, 2);
    assert!(!Path::new(out).exists());
}
