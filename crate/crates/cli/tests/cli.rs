use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn gsp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsp")).args(args).env("GSP_OUT", out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const UNIT_F2: &str = "torus.a1 = 1.0\ntorus.a2 = 1.0\ntorus.a3 = 1.0\ntorus.F = 2.0\n";

#[test]
fn check_p_on_quintic_torus() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.toml",
        "torus.a1_sq = \"rational:1/2\"\ntorus.a2_sq = \"algebraic:x^5+x^4-1:[0.85,0.86]\"\ntorus.a3_sq = \"1\"\ntorus.F2 = \"rational:1/2\"\nexperiment.kind = \"resonance\"\n",
    );
    let o = gsp(&["resonance", "check-p", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "holds-by-part-2");
}

#[test]
fn enumerate_froude_one_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "f1.toml",
        "torus.a1_sq = \"1\"\ntorus.a2_sq = \"1\"\ntorus.a3_sq = \"1\"\ntorus.F2 = \"1\"\nlattice.N = 4\nexperiment.kind = \"resonance\"\n",
    );
    for method in ["exact", "float"] {
        let o = gsp(&["resonance", "enumerate", "--method", method, "--config", cfg.to_str().unwrap()], tmp.path());
        assert_eq!(code(&o), 0);
        let text = std::fs::read_to_string(tmp.path().join("resonances.txt")).unwrap();
        assert!(text.lines().all(|l| l.starts_with('#')), "{text}");
    }
}

#[test]
fn exact_enumeration_needs_carriers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &format!("{UNIT_F2}lattice.N = 3\nexperiment.kind = \"resonance\"\n"));
    let o = gsp(&["resonance", "enumerate", "--method", "exact", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exact"));
}

#[test]
fn gap_histogram_and_cost_guard() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.toml", &format!("{UNIT_F2}lattice.N = 3\nexperiment.kind = \"resonance\"\n"));
    let o = gsp(&["resonance", "gaps", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("gaps.csv").exists());
    let big = write_config(tmp.path(), "g2.toml", &format!("{UNIT_F2}lattice.N = 11\nexperiment.kind = \"resonance\"\n"));
    assert_eq!(code(&gsp(&["resonance", "gaps", "--config", big.to_str().unwrap()], tmp.path())), 2);
}

fn series_column(dir: &Path, col: usize) -> Vec<f64> {
    let text = std::fs::read_to_string(dir.join("timeseries.csv")).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn zero_data_gives_zero_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "z.toml",
        &format!("{UNIT_F2}lattice.N = 3\nsolver.T = 0.05\ninitial.amplitude = 0.0\nexperiment.kind = \"pe\"\n"),
    );
    for system in ["pe", "limit"] {
        let o = gsp(&["simulate", system, "--config", cfg.to_str().unwrap()], tmp.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(series_column(tmp.path(), 1).iter().all(|&e| e == 0.0));
    }
}

#[test]
fn qg_data_stays_qg_in_the_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "q.toml",
        &format!(
            "{UNIT_F2}lattice.N = 4\nsolver.T = 0.1\ninitial.kind = \"qg-only\"\nexperiment.kind = \"limit\"\noutput.snapshot_every = 5\n"
        ),
    );
    let o = gsp(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let osc = series_column(tmp.path(), 4);
    assert_eq!(osc.len(), 11);
    assert!(osc.iter().all(|&x| x <= 1e-12));
    assert!(tmp.path().join("snapshot_00005.gsp").exists());
    assert!(tmp.path().join("snapshot_00010.gsp").exists());
    let r = gsp(&["report", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).contains("divergence_free: pass"));
}

#[test]
fn oversized_step_aborts_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfl.toml",
        &format!("{UNIT_F2}lattice.N = 3\nsolver.dt = 0.05\nsolver.eps = 1.0\nsolver.phase_resolution = 1.0\nsolver.T = 0.5\nsolver.sample_dt = 0.1\ninitial.amplitude = 1000.0\nexperiment.kind = \"pe\"\n"),
    );
    let o = gsp(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn converge_guards_and_default_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let small = "lattice.N = 4\nsolver.T = 0.2\nsolver.sample_dt = 0.02\n";
    let one =
        write_config(tmp.path(), "one.toml", &format!("{UNIT_F2}{small}experiment.kind = \"converge\"\nexperiment.eps_list = [0.01]\n"));
    assert_eq!(code(&gsp(&["converge", "--config", one.to_str().unwrap()], tmp.path())), 2);
    let f1 = write_config(
        tmp.path(),
        "f1.toml",
        &format!("torus.a1 = 1.0\ntorus.a2 = 1.0\ntorus.a3 = 1.0\ntorus.F = 1.0\n{small}experiment.kind = \"converge\"\n"),
    );
    assert_eq!(code(&gsp(&["converge", "--config", f1.to_str().unwrap()], tmp.path())), 2);
    let ok = write_config(
        tmp.path(),
        "ok.toml",
        &format!("{UNIT_F2}{small}experiment.kind = \"converge\"\nexperiment.eps_list = [0.1, 0.01]\n"),
    );
    let o = gsp(&["converge", "--config", ok.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("# gsp-csv v1 convergence"));
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "torus.a1 = 1.0\n");
    assert_eq!(code(&gsp(&["simulate", "pe", "--config", cfg.to_str().unwrap()], tmp.path())), 2);
    let missing = tmp.path().join("nope.toml");
    assert_eq!(code(&gsp(&["simulate", "pe", "--config", missing.to_str().unwrap()], tmp.path())), 2);
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!("{UNIT_F2}lattice.N = 4\nsolver.T = 0.05\ninitial.seed = 11\nexperiment.kind = \"pe\"\n");
    let cfg = write_config(tmp.path(), "d.toml", &body);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(code(&gsp(&["--jobs", "1", "simulate", "--config", cfg.to_str().unwrap()], d)), 0);
    }
    let read = |d: &Path| std::fs::read(d.join("timeseries.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
