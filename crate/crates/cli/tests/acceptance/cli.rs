use proptest::prelude::*;
use virtlev::config::{keys_for, parse_angle, parse_config, ExperimentConfig, COMMANDS};
use virtlev::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("virtlev").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn error_json(err: &str) -> serde_json::Value {
    serde_json::from_str(err.trim()).unwrap_or_else(|e| panic!("{e}: {err}"))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("virtlev-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, 0);
    for (name, _) in COMMANDS {
        assert!(out.contains(name), "{name}");
    }
    let (code, out, _) = invoke(&["sweep", "--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("[default: free1d]"));
    let (code, out, _) = invoke(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("virtlev "));
}

#[test]
fn usage_errors_exit_two_with_json() {
    for args in [&["sweep", "--bogus", "1"][..], &["frobnicate"], &["--threads", "x", "nullity"]] {
        let (code, out, err) = invoke(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(out.is_empty());
        let json = error_json(&err);
        assert_eq!(json["error"], "usage");
        assert_eq!(json["exit_code"], 2);
    }
    let (code, _, err) = invoke(&[]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
}

#[test]
fn config_errors_exit_two() {
    let (code, _, err) = invoke(&["sweep", "--op", "free7d"]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"], "config");
    let (code, _, err) = invoke(&["jost", "--potential", "spline:q=1"]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"], "parse");
    let path = scratch("bad.cfg");
    std::fs::write(&path, "dim = 1\ncolour = blue\n").unwrap();
    let (code, _, err) = invoke(&["--config", path.to_str().unwrap(), "kernel"]);
    assert_eq!(code, 2);
    assert!(error_json(&err)["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn runtime_errors_exit_one() {
    let (code, _, err) = invoke(&["jost", "--potential", "box:amp=1,a=9"]);
    assert_eq!(code, 1);
    assert_eq!(error_json(&err)["error"], "invalid_input");
    let (code, _, err) = invoke(&["--config", "/nonexistent/virtlev.cfg", "kernel"]);
    assert_eq!(code, 1);
    assert_eq!(error_json(&err)["error"], "io");
}

#[test]
fn kernel_csv_echoes_config_and_values() {
    let (code, out, _) = invoke(&["kernel", "--z", "-1", "--rmin", "1", "--rmax", "1", "--count", "1"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "# command = kernel");
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r,kernel_re,kernel_im");
    let re: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((re - 0.5 * (-1.0f64).exp()).abs() < 1e-14);
    assert!(rows[2].starts_with("kernel d=1"));
}

#[test]
fn flags_override_config_file() {
    let path = scratch("nullity.cfg");
    std::fs::write(&path, "# planted\nmatrix = 0,0;0,0\nseed = 3\n").unwrap();
    let (code, out, _) = invoke(&["--config", path.to_str().unwrap(), "nullity"]);
    assert_eq!(code, 0);
    assert!(out.contains("# seed = 3") && out.ends_with("nullity 2\n"), "{out}");
    let (_, out, _) = invoke(&["--config", path.to_str().unwrap(), "nullity", "--matrix", "1,0;0,0"]);
    assert!(out.contains("# seed = 3") && out.ends_with("nullity 1\n"), "{out}");
}

#[test]
fn sweep_writes_csv_and_report_files() {
    let csv = scratch("sweep.csv");
    let report = scratch("sweep.json");
    let (code, out, _) = invoke(&[
        "--threads",
        "2",
        "sweep",
        "--output",
        csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("Virtual (alpha≈0.5"), "{out}");
    assert_eq!(out.lines().count(), 1);
    let table = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "radius,norm,z_re,z_im");
    assert_eq!(rows.len(), 1 + 9);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["config"]["command"], "sweep");
    assert_eq!(json["config"]["op"], "free1d");
    assert_eq!(json["classification"], "Virtual");
    assert_eq!(json["rank"], 1);
    assert_eq!(json["points"].as_array().unwrap().len(), 9);
}

#[test]
fn sweep_output_is_reproducible_across_thread_counts() {
    let args = |t: &'static str| ["--threads", t, "sweep", "--op", "schrodinger1d", "--potential", "bump:amp=0.5+0.5i,a=1"];
    let (c1, a, _) = invoke(&args("1"));
    let (c2, b, _) = invoke(&args("4"));
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

#[test]
fn free_operators_reject_potentials() {
    let (code, _, err) = invoke(&["sweep", "--potential", "well:g=1"]);
    assert_eq!(code, 2);
    assert!(err.contains("takes no potential"));
}

#[test]
fn suite_subset_reports_pass_lines() {
    let (code, out, _) = invoke(&["suite", "--only", "3,9"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("PASS criterion  3"));
    assert!(lines[1].starts_with("PASS criterion  9"));
    assert_eq!(lines[2], "suite: 2 of 2 criteria passed");
    let (code, _, err) = invoke(&["suite", "--only", "11"]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"], "config");
}

#[test]
fn angles() {
    let pi = std::f64::consts::PI;
    for (text, v) in [("pi", pi), ("3pi/2", 1.5 * pi), ("0.5*pi", 0.5 * pi), ("pi/4", 0.25 * pi), ("-pi", -pi), ("1.25", 1.25)] {
        assert!((parse_angle(text).unwrap() - v).abs() < 1e-15, "{text}");
    }
    for bad in ["", "pie", "pi/", "x*pi", "pi/0", "inf"] {
        assert!(parse_angle(bad).is_err(), "{bad}");
    }
}

#[test]
fn config_parser_rejects_malformed_lines() {
    assert!(parse_config("a = 1\na = 2").is_err());
    assert!(parse_config("no equals sign").is_err());
    assert!(parse_config(" = 1").is_err());
    assert!(parse_config("two words = 1").is_err());
    assert_eq!(parse_config("# c\n\n a=b=c \n").unwrap(), vec![("a".into(), "b=c".into())]);
}

fn command_and_values() -> impl Strategy<Value = (String, Vec<(usize, String)>)> {
    prop::sample::select(COMMANDS.iter().map(|(c, _)| c.to_string()).collect::<Vec<_>>())
        .prop_flat_map(|c| {
            let n = keys_for(&c).count();
            (Just(c), prop::collection::vec((0..n, "[ -~]{0,20}"), 0..6))
        })
}

proptest! {
    #[test]
    fn config_round_trips((command, edits) in command_and_values()) {
        let mut cfg = ExperimentConfig::defaults(&command).unwrap();
        let keys: Vec<&str> = keys_for(&command).map(|k| k.1).collect();
        for (i, value) in &edits {
            cfg.set(keys[*i], value).unwrap();
        }
        let back = ExperimentConfig::from_text(&command, &cfg.render()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
    }
}
