use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use schwarzlab::fields::{generate, write_field, FieldGeneratorSpec, FieldKind, GridSpec};
use schwarzlab::profiles::RadialProfile;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schwarzlab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

#[test]
fn tso_square_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "verify",
            "tso",
            "--body",
            "square",
            "--profile",
            "s2m1",
            "--output",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    for f in ["report.jsonl", "report.csv", "manifest.toml", "profile.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(csv.starts_with("experiment,quantity,value,tolerance,verdict"));
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "verify", "santalo", "--count", "5", "--seed", "3", "--output", "a",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let manifest = dir.path().join("a/manifest.toml");
    let o = run(
        &[
            "run",
            "--config",
            manifest.to_str().unwrap(),
            "--output",
            "b",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let read = |p: &str| {
        let line = fs::read_to_string(dir.path().join(p)).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        v["runtime_s"] = 0.into();
        v["inputs"]["output"] = 0.into();
        v
    };
    assert_eq!(read("a/report.jsonl"), read("b/report.jsonl"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "experiment = \"tso\"\nresolutoin = 64\n",
    )
    .unwrap();
    let o = run(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("resolutoin"), "{}", text(&o));

    fs::write(
        dir.path().join("bad2.toml"),
        "experiment = \"tso\"\n[tolerance]\nrell = 1\n",
    )
    .unwrap();
    let o = run(&["run", "--config", "bad2.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("rell"));
}

#[test]
fn report_aggregates_and_fails_on_any_failure() {
    let dir = tempfile::tempdir().unwrap();
    for (exp, out) in [("tso", "r1"), ("santalo", "r2")] {
        let o = run(&["verify", exp, "--output", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    }
    let o = run(&["report", "r*/report.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).contains("2/2 pass"), "{}", text(&o));

    // flip one verdict
    let p = dir.path().join("r2/report.jsonl");
    let s = fs::read_to_string(&p)
        .unwrap()
        .replace("],\"verdict\":\"pass\"", "],\"verdict\":\"fail\"");
    fs::create_dir_all(dir.path().join("r3")).unwrap();
    fs::write(dir.path().join("r3/report.jsonl"), s).unwrap();
    let o = run(&["report", "r*/report.jsonl"], dir.path());
    assert_ne!(o.status.code(), Some(0));
    assert!(text(&o).contains("2/3 pass"), "{}", text(&o));
}

#[test]
fn report_rejects_empty_globs_and_mixed_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report", "nothing-here/*.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("no report files match"));

    let o = run(&["verify", "tso", "--output", "x"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = fs::read_to_string(dir.path().join("x/report.jsonl")).unwrap();
    fs::create_dir_all(dir.path().join("y")).unwrap();
    fs::write(
        dir.path().join("y/report.jsonl"),
        s.replace("\"schema\":1", "\"schema\":2"),
    )
    .unwrap();
    let o = run(&["report", "*/report.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        text(&o).contains("mixed schema versions: 1, 2"),
        "{}",
        text(&o)
    );
}

#[test]
fn symmetrize_recovers_a_radial_profile() {
    let dir = tempfile::tempdir().unwrap();
    let f = RadialProfile::max_linear(1.0, -1.0).unwrap();
    let grid = GridSpec::ball(FieldKind::Complex, 2, 256).unwrap();
    let field = generate(&FieldGeneratorSpec::Radial { profile: f.clone() }, &grid).unwrap();
    write_field(
        &field,
        fs::File::create(dir.path().join("field.dat")).unwrap(),
    )
    .unwrap();

    let o = run(
        &["symmetrize", "--input", "field.dat", "--output", "sym"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(dir.path().join("sym/sigma.csv").exists());
    let csv = fs::read_to_string(dir.path().join("sym/profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,f"));
    let mut worst = 0.0f64;
    for l in lines {
        let (t, v) = l.split_once(',').unwrap();
        let (t, v): (f64, f64) = (t.parse().unwrap(), v.parse().unwrap());
        if t > -0.9 {
            worst = worst.max((v - f.eval(t)).abs());
        }
    }
    assert!(worst < 0.05, "worst deviation {worst}");
}

#[test]
fn bad_input_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("junk.dat"), "not a field\n").unwrap();
    let o = run(&["energy", "--input", "junk.dat"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["mahler", "--body", "dodecahedron"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("unknown body preset"));
}

#[test]
fn geodesic_writes_an_energy_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "geodesic", "--from", "kink1", "--to", "kink2", "--n", "2", "--output", "g",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let csv = fs::read_to_string(dir.path().join("g/energy_curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 33);
}
