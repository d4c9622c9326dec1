use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_attractorlab"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

const FREE: &str = "\
model.family = nlkg
model.kg_mass = 0
potential.kind = zero
grid.x_min = -30
grid.x_max = 30
grid.dx = 0.05
stepper.dt = 0.025
stepper.t_max = 4
stepper.snapshot_every = 40
stepper.series_every = 4
init.kind = gaussian
init.amplitude = 1
init.width = 2
output.dir = unused
";

const ORBIT: &str = "\
model.family = kg_point_oscillator
model.kg_mass = 1
potential.kind = gl
grid.x_min = -30
grid.x_max = 30
grid.dx = 0.05
stepper.dt = 0.025
stepper.t_max = 20
stepper.snapshot_every = 400
stepper.series_every = 2
init.kind = orbit
init.omega = 0.9
output.dir = unused
diagnostics.write_snapshots = false
";

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "exit {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn summary(dir: &Path) -> String {
    fs::read_to_string(dir.join("summary.txt")).unwrap()
}

#[test]
fn run_writes_files_listed_in_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "free.cfg", FREE);
    let out = tmp.path().join("out");
    ok(bin().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap());
    let text = summary(&out);
    let entries: Vec<(&str, usize)> = text
        .lines()
        .filter_map(|l| {
            let (k, v) = l.split_once(" = ")?;
            Some((k.strip_prefix("manifest.")?, v.parse().ok()?))
        })
        .collect();
    assert!(entries.iter().any(|(n, _)| *n == "series.csv"));
    assert!(entries.iter().filter(|(n, _)| n.starts_with("snap_")).count() >= 4);
    for (name, rows) in entries {
        let body = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(body.lines().count() - 1, rows, "{name}");
    }
}

#[test]
fn cfl_violation_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "bad.cfg", &FREE.replace("stepper.dt = 0.025", "stepper.dt = 0.2"));
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stepper.dt"), "{err}");
}

#[test]
fn oracle_and_run_agree_on_a_free_wave() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "free.cfg", FREE);
    let (run, oracle) = (tmp.path().join("run"), tmp.path().join("oracle"));
    ok(bin().arg("run").arg(&cfg).arg("--out").arg(&run).output().unwrap());
    ok(bin().arg("oracle-dalembert").arg(&cfg).arg("--out").arg(&oracle).output().unwrap());
    let last = |dir: &Path| {
        let mut snaps: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("snap_"))
            .collect();
        snaps.sort();
        let body = fs::read_to_string(snaps.last().unwrap()).unwrap();
        body.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).collect::<Vec<_>>()
    };
    let (a, b) = (last(&run), last(&oracle));
    assert_eq!(a.len(), b.len());
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3, "max difference {worst}");
}

#[test]
fn spectrum_of_an_orbit_peaks_at_its_frequency() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "orbit.cfg", ORBIT);
    let run = tmp.path().join("run");
    ok(bin().arg("run").arg(&cfg).arg("--out").arg(&run).output().unwrap());
    let spec = tmp.path().join("spec.csv");
    let text = ok(bin()
        .arg("spectrum")
        .arg(run.join("series.csv"))
        .args(["--window", "1"])
        .arg("--out")
        .arg(&spec)
        .output()
        .unwrap());
    let dominant: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("dominant = "))
        .unwrap_or_else(|| panic!("no dominant line in:\n{text}"))
        .parse()
        .unwrap();
    assert!((dominant.abs() - 0.9).abs() < 0.05, "dominant {dominant}");
    assert!(fs::read_to_string(&spec).unwrap().lines().count() > 10);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "free.cfg", FREE);
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        ok(bin().arg("run").arg(&cfg).arg("--out").arg(d).output().unwrap());
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(fs::read(dirs[0].join(&n)).unwrap(), fs::read(dirs[1].join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn check_prints_a_fixed_point_of_canonicalisation() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["adiabatic.cfg", "kink_boost.cfg", "gl_decay.cfg"] {
        let first = ok(bin().arg("check").arg(shipped(name)).output().unwrap());
        let again = write_cfg(tmp.path(), name, &first);
        let second = ok(bin().arg("check").arg(&again).output().unwrap());
        assert_eq!(first, second, "{name}");
    }
}

#[test]
fn sweep_honours_thread_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_cfg(tmp.path(), "one.cfg", FREE);
    let b = write_cfg(tmp.path(), "two.cfg", &FREE.replace("init.width = 2", "init.width = 3"));
    let root = tmp.path().join("sweep");
    ok(bin()
        .env("ATTRACTORLAB_THREADS", "2")
        .arg("sweep")
        .arg(&a)
        .arg(&b)
        .arg("--out-root")
        .arg(&root)
        .output()
        .unwrap());
    assert!(summary(&root.join("one")).contains("manifest.series.csv"));
    assert!(summary(&root.join("two")).contains("manifest.series.csv"));

    let bad = bin().env("ATTRACTORLAB_THREADS", "zero").arg("sweep").arg(&a).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
