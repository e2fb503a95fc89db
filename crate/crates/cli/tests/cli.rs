use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_walsh-noise"));
    c.env_remove("WALSH_NOISE_OUT_DIR");
    c
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned()
}

const CONFIG: &str = r#"
scheme = "both"
n = [3, 4]
total_time = 16.0

[chi]
method = "mc"
reps = 64
oversample = 4
seed = 11

[[noise.ou]]
b2 = 0.01
tau_c = 4.0
shift_mhz = 0.2
"#;

fn run_config(dir: &Path, config: &str, out: &Path) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn run_is_deterministic() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(run_config(dir.path(), CONFIG, &a));
    ok(run_config(dir.path(), CONFIG, &b));
    for f in ["chis.csv", "g.csv", "s.csv", "metrics.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        first_line(&a.join("chis.csv")),
        "scheme,n,index,chi,sigma_chi,valid"
    );
    assert_eq!(
        first_line(&a.join("g.csv")),
        "scheme,n,index,time,g,sigma_g,valid"
    );
    assert_eq!(
        first_line(&a.join("s.csv")),
        "scheme,n,index,omega,s,sigma_s,valid"
    );
    assert_eq!(
        first_line(&a.join("metrics.csv")),
        "scheme,n,quantity,index,coordinate,estimate,truth,pointwise_error,epsilon,defined"
    );
}

#[test]
fn manifest_checksums_match_files() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("out");
    ok(run_config(dir.path(), CONFIG, &out));
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 4);
    for o in outputs {
        let file = o["file"].as_str().unwrap();
        let bytes = fs::read(out.join(Path::new(file).file_name().unwrap())).unwrap();
        let digest = sha256_hex(&bytes);
        assert_eq!(o["sha256"].as_str().unwrap(), digest);
    }
    let stages: Vec<&str> = m["timings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["chi", "reconstruct", "compare"]);
    let conv = &m["units"]["applied"][0];
    let mhz = conv["mhz"].as_f64().unwrap();
    let rad = conv["rad_per_us"].as_f64().unwrap();
    assert!((rad - 2.0 * std::f64::consts::PI * mhz).abs() < 1e-15);
}

fn sha256_hex(bytes: &[u8]) -> String {
    walsh_noise_cli::output::sha256_hex(bytes)
}

#[test]
fn csv_floats_carry_seventeen_digits() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("out");
    ok(run_config(dir.path(), CONFIG, &out));
    let text = fs::read_to_string(out.join("chis.csv")).unwrap();
    let chi = text.lines().nth(1).unwrap().split(',').nth(3).unwrap();
    let mantissa = chi.split('e').next().unwrap();
    assert_eq!(
        mantissa.chars().filter(char::is_ascii_digit).count(),
        17,
        "{chi}"
    );
}

#[test]
fn failed_run_leaves_nothing_behind() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("fresh");
    // limit larger than the set fails in the reconstruct stage, after chis.csv exists
    let bad = CONFIG.replace("seed = 11", "seed = 11\ncpmg_limit = 1000");
    let o = run_config(dir.path(), &bad, &out);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stage reconstruct failed"), "{err}");
    assert!(!out.exists());

    let existing = dir.path().join("existing");
    fs::create_dir(&existing).unwrap();
    fs::write(existing.join("keep.txt"), "x").unwrap();
    assert!(!run_config(dir.path(), &bad, &existing).status.success());
    let left: Vec<_> = fs::read_dir(&existing)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(left, ["keep.txt"]);
}

#[test]
fn bad_config_reports_config_stage() {
    let dir = tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "scheme = \"walsh\"\nn = 3\ntotal_time = 0.0\n",
        &dir.path().join("o"),
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("total_time"));
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempdir().unwrap();
    ok(bin()
        .env("WALSH_NOISE_OUT_DIR", dir.path())
        .args([
            "chi", "--scheme", "walsh", "-n", "3", "-t", "8", "--ou", "1,4",
        ])
        .output()
        .unwrap());
    assert_eq!(
        first_line(&dir.path().join("chis.csv")),
        "scheme,n,index,chi,sigma_chi,valid"
    );
}

#[test]
fn zero_noise_is_flagged_not_fatal() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = "scheme = \"walsh\"\nn = 3\ntotal_time = 8.0\n[[noise.ou]]\nb2 = 0.0\ntau_c = 4.0\n";
    ok(run_config(dir.path(), cfg, &out));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(
        metrics.lines().skip(1).all(|l| l.ends_with(",NaN,false")),
        "{metrics}"
    );
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert!(m["epsilons"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["epsilon"].is_null()));
}

#[test]
fn chi_reconstruct_compare_chain() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    ok(bin()
        .args([
            "chi",
            "--scheme",
            "walsh",
            "-n",
            "6",
            "-t",
            "32",
            "--ou",
            "0.003125,4,0.3",
            "--out",
        ])
        .arg(p.join("chis.csv"))
        .output()
        .unwrap());
    ok(bin()
        .args(["reconstruct", "-t", "32", "--chis"])
        .arg(p.join("chis.csv"))
        .arg("--out-g")
        .arg(p.join("g.csv"))
        .arg("--out-s")
        .arg(p.join("s.csv"))
        .output()
        .unwrap());
    ok(bin()
        .args(["compare", "--ou", "0.003125,4,0.3", "--g"])
        .arg(p.join("g.csv"))
        .arg("--s")
        .arg(p.join("s.csv"))
        .arg("--out")
        .arg(p.join("metrics.csv"))
        .output()
        .unwrap());
    let metrics = fs::read_to_string(p.join("metrics.csv")).unwrap();
    let eps_g: f64 = metrics
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(8)
        .unwrap()
        .parse()
        .unwrap();
    assert!(eps_g > 0.0 && eps_g < 0.05, "{eps_g}");
}

#[test]
fn ingest_then_error_budget() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    let mut raw = String::from("index,p_plus,p_minus,sigma_plus,sigma_minus\n");
    for i in 0..8 {
        let p_plus = 0.9 - 0.03 * i as f64;
        raw.push_str(&format!("{i},{p_plus},{},0.01,0.01\n", 1.0 - p_plus));
    }
    raw.push_str("8,0.4,0.6,0.01,0.01\n");
    fs::write(p.join("raw.csv"), &raw).unwrap();
    ok(bin()
        .args(["ingest", "--contrast", "1", "--raw"])
        .arg(p.join("raw.csv"))
        .arg("--out")
        .arg(p.join("ingested.csv"))
        .output()
        .unwrap());
    let text = fs::read_to_string(p.join("ingested.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,chi,sigma_chi,valid");
    assert_eq!(lines.len(), 10);
    assert!(lines[9].ends_with(",false"));
    // chi = -ln(2P - 1)
    let chi0: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((chi0 + (0.8f64).ln()).abs() < 1e-14);

    // keep the eight valid rows as a Walsh n=3 set
    let walsh: String = lines[..9].join("\n") + "\n";
    fs::write(p.join("walsh.csv"), walsh).unwrap();
    let o = ok(bin()
        .args([
            "error-budget",
            "--scheme",
            "walsh",
            "-t",
            "8",
            "--mc-draws",
            "2000",
            "--seed",
            "5",
            "--out",
            "-",
            "--chis",
        ])
        .arg(p.join("walsh.csv"))
        .output()
        .unwrap());
    let budget = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = budget.lines().collect();
    assert_eq!(rows[0], "scheme,n,quantity,index,coordinate,sigma,sigma_mc");
    assert_eq!(rows.len(), 9);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        let a: f64 = f[5].parse().unwrap();
        let m: f64 = f[6].parse().unwrap();
        assert!(a > 0.0 && (m / a - 1.0).abs() < 0.1, "{r}");
    }
}

#[test]
fn walsh_matrix_to_stdout() {
    let o = ok(bin()
        .args(["walsh-matrix", "-n", "3", "--out", "-"])
        .output()
        .unwrap());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 64);
    let row1: Vec<i32> = text
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("1,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(row1, [1, 1, 1, 1, -1, -1, -1, -1]);
}
