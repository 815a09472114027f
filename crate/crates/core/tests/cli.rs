use std::path::Path;
use std::process::Command;

use d2d_csd::cli::CSV_HEADER;
use d2d_csd::config::ConfigFile;

const BIN: &str = env!("CARGO_BIN_EXE_csd-sim");

const SMALL: &str = r#"
[sim]
area_side_m = 500
num_cues = 4
num_pairs = 6
max_pair_dist_m = 200
carrier_ghz = 2
bandwidth_mhz = 20
rb_total = 80
overhead_fraction = 0.25
n_s = 30
n_d = 30
pt_cue_dbm = 10
pt_due_dedicated_dbm = 10
tau_due = 10
tau_n_db = 0
gamma_min_db = -9.478
noise_psd_dbm_hz = -174
drops = 3
rng_seed = 7

[campaign]
pair_counts = [0, 3, 6]
pt_dbm_values = [10, 20]
tau_n_values_db = [-10, -4, 0]
schemes = ["csd", "max_sd"]
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env("CSD_SIM_THREADS", "1")
        .output()
        .unwrap()
}

#[test]
fn campaign_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("out");
    let o = run(&["campaign", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let fig3 = std::fs::read_to_string(out.join("fig3.csv")).unwrap();
    let mut lines = fig3.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    // 2 schemes x 3 pair counts x 2 powers at the base τ_N
    assert_eq!(rows.len(), 12);
    assert!(!fig3.contains('\r'));
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 7);
        assert!(f[0] == "csd" || f[0] == "max_sd");
        assert!(f[2].ends_with(".00") && f[3] == "0.00", "{row}");
        f[4].parse::<u64>().unwrap();
        f[5].parse::<u64>().unwrap();
        assert_eq!(f[6], "3");
    }
    assert!(rows.iter().any(|r| r.starts_with("csd,0,") && r.contains(",0,0,3")));

    let fig4 = std::fs::read_to_string(out.join("fig4.csv")).unwrap();
    assert_eq!(fig4.lines().count(), 1 + 2 * 3 * 2 * 3);
    assert!(fig4.contains(",-10.00,") && fig4.contains(",-4.00,"));

    let tau = std::fs::read_to_string(out.join("tau_opt.csv")).unwrap();
    assert_eq!(tau.lines().next(), Some("scheme,num_pairs,pt_dbm,tau_opt_db,mean_csum_bits"));
    assert_eq!(tau.lines().count(), 1 + 12);

    let manifest = ConfigFile::load(&out.join("manifest.toml")).unwrap();
    let m = manifest.manifest.as_ref().unwrap();
    assert_eq!(m.outputs, vec!["fig3.csv", "fig4.csv", "tau_opt.csv"]);
    let original = ConfigFile::load(&cfg).unwrap().campaign_spec(&cfg).unwrap();
    assert_eq!(manifest.campaign_spec(&cfg).unwrap(), original);
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["campaign", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    let manifest = a.join("manifest.toml");
    assert!(run(&["campaign", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]).status.success());
    for name in ["fig3.csv", "fig4.csv", "tau_opt.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn overrides_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = cfg.to_str().unwrap();
    assert!(run(&["campaign", c, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["campaign", c, "--out", b.to_str().unwrap(), "--seed", "8", "--drops", "2"]).status.success());
    let fa = std::fs::read_to_string(a.join("fig3.csv")).unwrap();
    let fb = std::fs::read_to_string(b.join("fig3.csv")).unwrap();
    assert_ne!(fa, fb);
    assert!(fb.lines().skip(1).all(|l| l.ends_with(",2")));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &SMALL.replace("n_d = 30", "n_d = 31"));
    let out = dir.path().join("out");
    let o = run(&["campaign", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml") && err.contains("n_s"), "{err}");

    let o = run(&["inspect", bad.to_str().unwrap(), "--drop", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let garbage = write(dir.path(), "g.toml", "[sim\n");
    let o = run(&["inspect", garbage.to_str().unwrap(), "--drop", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_exits_3() {
    let o = run(&["inspect", "/nonexistent/c.toml", "--drop", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn inspect_fixture_prints_cliques() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let o = run(&["inspect", cfg.to_str().unwrap(), "--drop", "0", "--fixture", "fig1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("G^s,1: vertices {1,4}  cliques [{1} {4}]"), "{text}");
    assert!(text.contains("G^d,2: vertices {2,3,4}  cliques [{2} {3,4}]"), "{text}");
    assert!(text.contains("plan invariants: ok"));
}

#[test]
fn inspect_random_drop_and_empty_drop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    for scheme in ["csd", "max_sd"] {
        let o = run(&["inspect", cfg.to_str().unwrap(), "--drop", "2", "--scheme", scheme]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("per-pair capacity") && text.contains("plan invariants: ok"));
        assert!(text.contains("dBm"));
    }

    let empty = write(dir.path(), "e.toml", &SMALL.replace("num_pairs = 6", "num_pairs = 0"));
    let o = run(&["inspect", empty.to_str().unwrap(), "--drop", "0"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("CUE 1: RBs 0..8"));
    assert!(!text.contains("DUE adjacency"));
}
