use std::process::{Command, Output};

fn subexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subexp"))
        .args(args)
        .env_remove("HT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn pareto_s2loc_converges() {
    let o = subexp(&["diagnose", "--law", "pareto:alpha=3", "--class", "s2loc", "--x", "log:10,1000,24"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 25);
    assert!(out.lines().skip(1).all(|l| l.ends_with(",converged")));
    let last = *column(&out, "observed").last().unwrap();
    assert!((last - 0.0060945139284).abs() < 1e-8);
}

#[test]
fn exponential_lloc_fails() {
    let o = subexp(&["diagnose", "--law", "exp:rate=1", "--class", "lloc"]);
    assert_eq!(code(&o), 1);
    for r in column(&stdout(&o), "observed") {
        assert!((r - (-1f64).exp()).abs() < 1e-10);
    }
}

#[test]
fn infinite_mean_is_a_precondition_error() {
    let o = subexp(&["diagnose", "--law", "pareto:alpha=0.5", "--class", "s2loc"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infinite mean"));
}

#[test]
fn first_power_has_no_correction() {
    let o = subexp(&["predict", "--relation", "power", "--law", "pareto:alpha=3", "--t", "1", "--x", "10,20,40,80"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(column(&out, "correction").iter().all(|c| *c == 0.0));
    assert_eq!(column(&out, "leading"), column(&out, "prediction"));
}

#[test]
fn unit_index_regime_uses_the_mean() {
    let o = subexp(&[
        "predict", "--relation", "regular-variation", "--alpha", "1", "--l", "logpow:-2", "--mean", "3", "--x",
        "10,100,1000,10000", "--format", "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["regime"], "unit-index-finite-mean");
    assert_eq!(v["coefficient"], -3.0);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);

    // l = 1 makes the integrated tail diverge, so a finite mean contradicts it
    let o = subexp(&["predict", "--relation", "regular-variation", "--alpha", "1", "--mean", "2", "--x", "10,100,1000,10000"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn inversion_needs_small_delta() {
    let o = subexp(&["invert", "--jump", "point:at=2", "--delta", "0.7"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn point_mass_inversion_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let measure = dir.path().join("measure.json");
    let o = subexp(&["invert", "--jump", "point:at=2", "--delta", "0.5", "--measure", measure.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(column(&out, "t"), vec![0.1, 0.3, 1.0, 3.0, 10.0]);
    assert!(column(&out, "gap").iter().all(|g| *g <= 1e-12));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(measure).unwrap()).unwrap();
    assert!(m.is_object());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out.csv");
    std::fs::write(&cfg, r#"{"law":"pareto:alpha=2","class":"sloc","x":"log:10,100,6","c":5}"#).unwrap();
    let o = subexp(&["--config", cfg.to_str().unwrap(), "diagnose", "--c", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let merged = std::fs::read_to_string(&out).unwrap();
    let direct = subexp(&["diagnose", "--law", "pareto:alpha=2", "--class", "sloc", "--x", "log:10,100,6", "--c", "1"]);
    assert_eq!(merged, stdout(&direct));
    let file_c = subexp(&["--config", cfg.to_str().unwrap(), "diagnose"]);
    assert_ne!(merged, stdout(&file_c));

    std::fs::write(&cfg, r#"{"law":"pareto:alpha=2","clas":"sloc"}"#).unwrap();
    let o = subexp(&["--config", cfg.to_str().unwrap(), "diagnose"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn output_is_deterministic_with_full_precision() {
    let args = ["convolve", "--law", "pareto:alpha=2", "--n", "3", "--x", "10,20,40,80"];
    let a = stdout(&subexp(&args));
    let b = Command::new(env!("CARGO_BIN_EXE_subexp")).args(args).env("HT_THREADS", "1").output().unwrap();
    assert_eq!(a, stdout(&b));
    let first = a.lines().nth(1).unwrap();
    let mantissa = first.split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 17);
}

#[test]
fn bad_inputs_exit_two() {
    let o = subexp(&["diagnose", "--law", "pareto:alpha=3", "--class", "s2loc", "--x", "1,3,2,4"]);
    assert_eq!(code(&o), 2);
    let o = subexp(&["diagnose", "--law", "nosuch", "--class", "lloc"]);
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_subexp")).args(["validate"]).env("HT_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn two_law_convolution_tail() {
    let o = subexp(&["convolve", "--law", "pareto:alpha=2", "--with", "weibull:beta=0.5", "--x", "10,20,40,80"]);
    assert_eq!(code(&o), 0);
    let tails = column(&stdout(&o), "tail");
    assert!(tails.windows(2).all(|w| w[1] < w[0]));
    // the sum's tail dominates each summand's tail
    for (x, t) in [10.0f64, 20.0, 40.0, 80.0].iter().zip(&tails) {
        assert!(*t > (1.0 + x).powi(-2) + (-x.sqrt()).exp());
    }
}

#[test]
fn validate_single_example() {
    let o = subexp(&["validate", "--example", "pareto:3", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["group"] == "pareto:3"));
}
