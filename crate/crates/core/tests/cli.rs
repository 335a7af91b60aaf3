use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sato-tate"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn compare_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "--mode",
        "compare",
        "--curve",
        "y^2=x^3+x+1",
        "--bound",
        "3000",
        "--n",
        "2000",
        "--seed",
        "9",
    ];
    for d in [&a, &b] {
        let o = run(&args, d.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "ap_cache.txt",
        "verdict.txt",
        "moments.txt",
        "histogram.csv",
    ] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
    let verdict = String::from_utf8(read(a.path(), "verdict.txt")).unwrap();
    assert!(verdict.contains("best=SU2"), "{verdict}");
    let hist = String::from_utf8(read(a.path(), "histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 51);
}

#[test]
fn resumed_count_matches_single_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let curve = ["--mode", "count", "--curve", "y^2=x^5+x+1"];
    for bound in ["200", "700"] {
        let o = run(&[&curve[..], &["--bound", bound]].concat(), a.path());
        assert!(o.status.success());
    }
    assert!(run(&[&curve[..], &["--bound", "700"]].concat(), b.path())
        .status
        .success());
    assert_eq!(
        read(a.path(), "ap_cache.txt"),
        read(b.path(), "ap_cache.txt")
    );

    // a third run over the same range changes nothing
    let o = run(
        &[&curve[..], &["--bound", "700", "--seed", "77"]].concat(),
        a.path(),
    );
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 counted"));
    assert_eq!(
        read(a.path(), "ap_cache.txt"),
        read(b.path(), "ap_cache.txt")
    );
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &["--mode", "count", "--curve", "y^2=x^3+x", "--bound", "2"],
        d.path(),
    );
    assert!(o.status.success());
    let cache = String::from_utf8(read(d.path(), "ap_cache.txt")).unwrap();
    assert_eq!(cache.lines().count(), 1);

    let e = tempfile::tempdir().unwrap();
    let o = run(
        &["--mode", "count", "--curve", "y^2=x^3", "--bound", "100"],
        e.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let o = run(
        &[
            "--mode",
            "compare",
            "--curve",
            "y^2=x^3+x",
            "--bound",
            "50",
            "--n",
            "1000",
        ],
        e.path(),
    );
    assert_eq!(o.status.code(), Some(3));

    let o = run(
        &[
            "--mode",
            "compare",
            "--curve",
            "y^2=x^3+x",
            "--bound",
            "5000",
            "--n",
            "10",
        ],
        e.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let o = bin()
        .args(["--mode", "sample", "--group", "G2"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_cache_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(
        &["--mode", "count", "--curve", "y^2=x^3+x+1", "--bound", "40"],
        d.path()
    )
    .status
    .success());
    let path = d.path().join("ap_cache.txt");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    for l in lines.iter_mut().skip(1) {
        let p = l.split(',').next().unwrap().to_string();
        *l = format!("{p},99,{p}");
    }
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = run(
        &["--mode", "count", "--curve", "y^2=x^3+x+1", "--bound", "40"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_and_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "mode=sample\ngroup=SU2\nn=5000\nseed=3\n").unwrap();
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = read(d.path(), "sample_moments.txt");
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.contains("samples=5000"), "{text}");

    // the flag overrides the file
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["--n", "4000"])
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(read(d.path(), "sample_moments.txt"))
        .unwrap()
        .contains("samples=4000"));
}

#[test]
fn identify_shipped_files() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/endo");
    let o = bin()
        .args(["--mode", "identify", "--endo"])
        .arg(dir.join("cm_q.endo"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("U1, dim 1, pi0 2, theorem CM"), "{text}");
    assert!(text.contains("model N(U1)"), "{text}");

    let o = bin()
        .args(["--mode", "identify", "--endo"])
        .arg(dir.join("usp6_generic.endo"))
        .output()
        .unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("USp6, dim 21"), "{text}");
}
