use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str], out: &Path) -> (i32, String, String) {
    let o =
        Command::new(env!("CARGO_BIN_EXE_meanfield")).args(args).arg("--out").arg(out).output().expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    assert!(first.starts_with("# generated-at-unix: "));
    rest.to_string()
}

#[test]
fn missing_spec_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = run(&["robin", "--spec", "/definitely/not/here.toml"], &out);
    assert_eq!(code, 1);
    assert!(err.contains("here.toml"), "{err}");
    assert!(!out.exists());
}

#[test]
fn invalid_input_is_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["energy", "--builtin", "disk", "--schedule", "4pi,2pi"], &out).0, 1);
    assert_eq!(run(&["energy", "--builtin", "disk", "--schedule", "8pi"], &out).0, 1);
    assert_eq!(run(&["energy", "--builtin", "nowhere"], &out).0, 1);
    assert_eq!(run(&["robin"], &out).0, 1);
    assert_eq!(run(&["no-such-command"], &out).0, 1);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "kind = \"disk\"\nparams = [1.0]\nradius = 2\n").unwrap();
    assert_eq!(run(&["robin", "--spec", bad.to_str().unwrap()], &out).0, 1);
    assert!(!out.exists());
}

#[test]
fn strip_check_on_thin_rectangle() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("thin.toml");
    fs::write(&spec, "kind = \"rectangle\"\nparams = [3.9269908169872414, 0.8]\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, err) = run(&["strip-check", "--spec", spec.to_str().unwrap()], &out);
    assert_eq!(code, 0, "{err}");
    let path = out.join("strip-check-thin.txt");
    assert!(stdout.contains("strip-check-thin.txt"));
    let b = body(&path);
    assert!(b.contains("verdict: criterion satisfied: 0.8000"), "{b}");
    assert!(b.contains("classification: bounded"), "{b}");
    assert!(b.contains("config_hash: "));
    assert!(b.contains("seed: 20260101"));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["energy", "--builtin", "square", "--schedule", "2pi,4pi,6pi", "--h", "0.08"];
    assert_eq!(run(&args, &a).0, 0);
    assert_eq!(run(&args, &b).0, 0);
    let (ba, bb) = (body(&a.join("energy-square.txt")), body(&b.join("energy-square.txt")));
    assert_eq!(ba, bb);
    assert!(ba.contains("[trace]"));
}

#[test]
fn config_hash_tracks_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let hash = |seed: &str, out: &Path| {
        assert_eq!(run(&["robin", "--builtin", "disk", "--seed", seed], out).0, 0);
        body(&out.join("robin-disk.txt")).lines().find(|l| l.starts_with("config_hash:")).unwrap().to_string()
    };
    let h1 = hash("1", &dir.path().join("1"));
    let h1b = hash("1", &dir.path().join("1b"));
    let h2 = hash("2", &dir.path().join("2"));
    assert_eq!(h1, h1b);
    assert_ne!(h1, h2);
}

#[test]
fn verify_theorem1_on_three_domains() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let args = ["verify-theorem1", "--builtin", "disk", "--builtin", "square", "--builtin", "ellipse-2:1"];
    let (code, _, err) = run(&args, &out);
    assert_eq!(code, 0, "{err}");
    let b = body(&out.join("verify-theorem1.txt"));
    let table = b.split("[estimates]\n").nth(1).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let estimate: f64 = r[2].parse().unwrap();
        assert!(estimate >= -1.0 - 1e-2, "{r:?}");
        if r[0] == "disk" {
            assert!((estimate + 1.0).abs() <= 1e-2);
        }
        assert_eq!(*r.last().unwrap(), "ok");
    }
}
