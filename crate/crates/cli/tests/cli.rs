use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hvbridge(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvbridge"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn run_writes_probe_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbridge(&["run", "--preset", "fig3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,V_A,V_B,V_O,V_C");
}

#[test]
fn override_sets_output_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbridge(&["run", "--preset", "fig5", "--set", "tran.step=0.5us", "--set", "tran.stop=2ms"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&dir.path().join("fig5.csv"));
    assert_eq!(r.len(), 4001);
    let t1: f64 = r[1][0].parse().unwrap();
    assert!((t1 - 0.5e-6).abs() < 1e-15, "{t1}");
}

#[test]
fn bad_netlist_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ckt");
    fs::write(
        &path,
        "# header\nV1 A 0 dc=100\nR1 A B 1k\nR2 B 0 1k\n.probe B\n.tran 1u 1m\nS1 A B ctrl=nowhere\n",
    )
    .unwrap();
    let o = hvbridge(&["run", "--netlist", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbridge(&["run", "--preset", "fig99"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("fig3") && e.contains("slew"), "{e}");
}

#[test]
fn load_sweep_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbridge(
        &[
            "sweep",
            "--preset",
            "fig7",
            "--set",
            "tran.step=5us",
            "--freqs",
            "2,5,10,30,100",
            "--loads",
            "10n,20n,50n,dea",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&dir.path().join("fig7_sweep.csv"));
    assert_eq!(r.len(), 20);
    assert!(r.iter().all(|row| row[2].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn supply_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbridge(&["sweep", "--preset", "fig8", "--supply", "both", "--freqs", "6,20"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&dir.path().join("fig8_sweep.csv"));
    assert_eq!(r.len(), 4);
    let supplies: Vec<&str> = r.iter().map(|row| row[1].as_str()).collect();
    assert_eq!(supplies, ["bench", "bench", "converter", "converter"]);
}

#[test]
fn empty_frequency_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbridge(&["sweep", "--preset", "fig7", "--freqs", ""], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn monte_carlo_without_spread() {
    let dir = tempfile::tempdir().unwrap();
    let o = hvbridge(&["montecarlo", "--preset", "fig3", "--trials", "3", "--sigma", "0"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let drops: Vec<String> = rows(&dir.path().join("fig3_mc.csv")).into_iter().map(|r| r[2].clone()).collect();
    assert_eq!(drops.len(), 3);
    assert!(drops.iter().all(|d| d == &drops[0]), "{drops:?}");

    let o = hvbridge(&["montecarlo", "--preset", "fig3", "--trials", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn monte_carlo_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["montecarlo", "--preset", "fig3", "--trials", "8", "--seed", "11"];
    assert!(hvbridge(&args, a.path()).status.success());
    assert!(hvbridge(&[&args[..], &["--workers", "1"]].concat(), b.path()).status.success());
    let read = |d: &Path| fs::read(d.join("fig3_mc.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn presets_are_listed() {
    let o = Command::new(env!("CARGO_BIN_EXE_hvbridge")).arg("presets").output().unwrap();
    assert!(o.status.success());
    let names = String::from_utf8(o.stdout).unwrap();
    assert_eq!(names.lines().count(), hvbridge::scenario::PRESETS.len());
}
