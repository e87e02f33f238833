use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilwalk")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn point_mass_walk_has_rho_one() {
    let o = run(&["rho", "--walk", &data("delta.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "rho = 1"), "{}", stdout(&o));
}

#[test]
fn sign_walk_profile_matches_central_binomials() {
    let o = run(&["rho", "--walk", &data("sign.json"), "--profile", "--csv", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut rows = text.lines().skip(1);
    // rho after k fair +-1 steps is C(k, floor(k/2)) / 2^k.
    let mut binom = vec![1u64];
    for k in 1..=10u32 {
        binom =
            (0..=binom.len()).map(|i| if i == 0 || i == binom.len() { 1 } else { binom[i - 1] + binom[i] }).collect();
        let num = binom[k as usize / 2];
        let den = 1u64 << k;
        let g = gcd(num, den);
        let expect = format!("{}/{}", num / g, den / g);
        let row = rows.next().expect("one row per prefix");
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], k.to_string());
        assert_eq!(fields[1], expect, "k = {k}");
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn zero_step_is_a_domain_error_naming_the_step() {
    let o = run(&["bounds", "elo", "--walk", &data("zero_step.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("step 2"), "{}", stderr(&o));
}

#[test]
fn elo_values_pass() {
    let o = run(&["bounds", "elo", "--values", "1,-2,3,4,5,6", "--csv", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "elo");
    assert_eq!(row[3], "5/16");
    assert_eq!(row[5], "true");
}

#[test]
fn free_walk_reports_no_structure() {
    let o = run(&["detect", "--walk", &data("free_walk.json")]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["rho"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["rho", "--walk", &data("sign.json"), "--range", "3"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_is_reported() {
    let o = run(&["rho", "--walk", "/nonexistent/walk.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/walk.json"));
}

#[test]
fn capped_convolution_is_a_resource_error() {
    let o = run(&["rho", "--walk", &data("free_walk.json"), "--cap", "100"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn detect_report_replays_byte_identically() {
    let (a, b) = (tmp("detect_a.json"), tmp("detect_b.json"));
    let args = |out: &PathBuf| {
        vec![
            "detect".to_string(),
            "--walk".into(),
            data("heis_walk.json"),
            "--c".into(),
            "1/16".into(),
            "--eps".into(),
            "3/4".into(),
            "--tau".into(),
            "1/10".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let first = args(&a);
    let o = run(&first.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (ja, jb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    // Only the output path differs between the two runs.
    assert_eq!(ja.replace("detect_a", "detect_b"), jb);

    let v: serde_json::Value = serde_json::from_str(&ja).unwrap();
    let m = &v["manifest"];
    assert_eq!(m["subcommand"], "detect");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let r = &v["report"];
    assert_eq!(r["conclusion"]["ok"], true);
    assert_eq!(r["max_lambda"]["exact"], "1/2");
    assert!(r["rho"]["approx"].as_f64().unwrap() > 0.0);
}

#[test]
fn monte_carlo_is_seeded() {
    let args = ["rho", "--walk", &data("sign.json"), "--mc", "--trials", "5000", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn nilprog_verbs() {
    let prog = data("heis_prog.json");
    let o = run(&["nilprog", "verify-normal-form", "--prog", &prog]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("normal form: valid"));

    let o = run(&["nilprog", "norm", "--prog", &prog, "--elem", "[2,1,3]"]);
    assert!(stdout(&o).contains("= 2/3"), "{}", stdout(&o));

    let o = run(&["nilprog", "collect", "--prog", &prog, "--word", "2,1,-2,-1"]);
    assert!(stdout(&o).contains("exponents [0, 0, -1]"), "{}", stdout(&o));

    // Far outside every dilate up to lambda_max.
    let o = run(&["nilprog", "norm", "--prog", &prog, "--elem", "[100,0,0]"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn energy_of_an_interval() {
    let o = run(&["energy", "--sets", &data("sets.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // Sum over s of r(s)^2 for {0,1,2,3} + {0,1,2,3}.
    assert!(stdout(&o).contains("E(B1, B2) = 44"), "{}", stdout(&o));
}

#[test]
fn anderson_matches_the_exact_profile() {
    let o = run(&["anderson", "--n", "8", "--csv", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row8 = text.lines().find(|l| l.starts_with("8,")).unwrap();
    assert_eq!(row8.split(',').nth(1), Some("13/256"));
}

#[test]
fn validate_accepts_and_rejects() {
    let o = run(&["validate", "--walk", &data("sign.json"), "--prog", &data("heis_prog.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["validate", "--walk", &data("delta.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bad = tmp("bad_p0.json");
    std::fs::write(
        &bad,
        r#"{"group": "cyclic(5)", "p0": "1/2", "steps": [{"atoms": [{"elem": 1, "w": "1/2"}, {"elem": 2, "w": "1/2"}]}]}"#,
    )
    .unwrap();
    let o = run(&["validate", "--walk", &bad.display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
}
