use std::fs;
use std::path::Path;

use mars::driver::run::{content_hash, MANIFEST_FILE};
use mars::driver::{run, validate_config, DampingMode, ModelKind, RunConfig, Snapshot};

fn config(kind: ModelKind, text: &str, out: &Path) -> RunConfig {
    let mut cfg = validate_config(kind, text).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn snapshot_bytes(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn same_seed_gives_identical_snapshots() {
    for (kind, text) in [
        (ModelKind::Ks2d, "nx = 16\nny = 16\nt_end = 0.2\nsnapshot_every = 5\nseed = 11"),
        (ModelKind::HeleShaw, "N = 64\nt_end = 6.25e-4\nsnapshot_every = 5\nseed = 11"),
    ] {
        let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&config(kind, text, a.path())).unwrap();
        run(&config(kind, text, b.path())).unwrap();
        let mut other = config(kind, text, c.path());
        other.params.set_seed(12);
        run(&other).unwrap();
        let (sa, sb, sc) = (snapshot_bytes(a.path()), snapshot_bytes(b.path()), snapshot_bytes(c.path()));
        assert_eq!(sa, sb, "{kind}");
        assert_eq!(sa.len(), sc.len());
        assert_ne!(sa.last(), sc.last(), "{kind}: seed has no effect");
        assert_eq!(manifest(a.path())["content_hash"], manifest(b.path())["content_hash"]);
    }
}

#[test]
fn manifest_hashes_match_files_and_loader_reads_every_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&config(ModelKind::ThinFilm, "t_end = 2e-3\nsnapshot_every = 5", dir.path())).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    let m = manifest(dir.path());
    assert_eq!(m["total_steps"], 20);
    let records = m["snapshots"].as_array().unwrap();
    assert_eq!(records.len(), 5);
    for r in records {
        let file = r["file"].as_str().unwrap();
        let bytes = fs::read(dir.path().join(file)).unwrap();
        assert_eq!(r["sha256"].as_str().unwrap(), content_hash(&bytes));
        let snap = Snapshot::load(&dir.path().join(file)).unwrap();
        assert_eq!(snap.rows(), 128);
        assert_eq!(snap.get_meta("step").unwrap(), r["step"].to_string());
        for col in ["h", "k", "lambda", "epsilon", "lambda_c"] {
            assert!(snap.column(col).is_some(), "{file}: {col}");
        }
        assert!(snap.get_meta_f64("ke").unwrap() > 1.0);
    }
    assert!(m["rng"].as_str().unwrap().contains("ChaCha"));
}

#[test]
fn heleshaw_snapshots_carry_interface_length() {
    let dir = tempfile::tempdir().unwrap();
    run(&config(ModelKind::HeleShaw, "N = 64\nt_end = 3.125e-4", dir.path())).unwrap();
    let snap = Snapshot::load(&dir.path().join("snapshot_00000010.csv")).unwrap();
    assert!((snap.get_meta_f64("length").unwrap() - 1.0).abs() < 1e-3);
    for col in ["x", "y"] {
        assert!(snap.column(col).is_some(), "{col}");
    }
}

#[test]
fn explicit_runs_exit_with_blow_up() {
    for (kind, text) in [
        (ModelKind::ThinFilm, "t_end = 0.05"),
        (ModelKind::Ks2d, "nx = 32\nny = 32\ndt = 0.05\nt_end = 25"),
        (ModelKind::HeleShaw, "t_end = 3e-3"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(kind, text, dir.path());
        cfg.damping = DampingMode::Explicit;
        let outcome = run(&cfg).unwrap();
        assert_eq!(outcome.exit_code(), 3, "{kind}: {:?}", outcome.termination);
        let m = manifest(dir.path());
        assert_eq!(m["termination"]["status"], "error");
        assert_eq!(m["termination"]["kind"], "blow_up");
        assert_eq!(m["termination"]["exit_code"], 3);
        let last = outcome.snapshots.last().unwrap();
        assert!(last.diagnostic && last.file.starts_with("diagnostic_"));
        assert!(Snapshot::load(&dir.path().join(&last.file)).is_ok());
    }
}

#[test]
fn invalid_config_is_rejected_before_running() {
    for (kind, text, field) in [
        (ModelKind::ThinFilm, "dt = 0", "dt"),
        (ModelKind::ThinFilm, "N = -4", "n"),
        (ModelKind::Ks2d, "nu = -1", "nu"),
        (ModelKind::HeleShaw, "S = 0", "S"),
        (ModelKind::ThinFilm, "epsilon_u = 0", "epsilon_u"),
        (ModelKind::ThinFilm, "damping = \"sometimes\"", "damping"),
        (ModelKind::Ks2d, "bogus = 1", "bogus"),
    ] {
        let err = validate_config(kind, text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}");
        assert!(err.to_string().contains(field), "{text}: {err}");
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("film.toml");
    fs::write(&path, "# thin film\nN = 64\nA = 1e-3\nepsilon_u = 1e-9\nt_end = 5e-4\n").unwrap();
    let cfg = validate_config(ModelKind::ThinFilm, &fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(cfg.controller.epsilon_u, 1e-9);
    assert_eq!(cfg.total_steps(), 5);
    let echo = serde_json::to_value(&cfg).unwrap();
    assert_eq!(echo["params"]["model"], "thinfilm");
    assert_eq!(echo["params"]["n"], 64);
}

/// Default thin film: runs to `t = 1` and ends with `λ` inside
/// `[λ_c, 3 λ_c]` above `k_e`.
#[test]
fn thinfilm_defaults_run_to_t_end_with_converged_damping() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::defaults(ModelKind::ThinFilm);
    cfg.out_dir = dir.path().to_path_buf();
    cfg.snapshot_every = 1000;
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.exit_code(), 0, "{:?}", outcome.termination);
    let last = Snapshot::load(&dir.path().join(&outcome.snapshots.last().unwrap().file)).unwrap();
    let ke = last.get_meta_f64("ke").unwrap();
    let (k, lambda, lc) = (
        last.column_f64("k").unwrap(),
        last.column_f64("lambda").unwrap(),
        last.column_f64("lambda_c").unwrap(),
    );
    for i in 0..k.len() {
        if k[i] > ke && k[i] <= 128.0 / 3.0 {
            let r = lambda[i] / lc[i];
            assert!((1.0..=3.0).contains(&r), "k = {}: λ/λ_c = {r}", k[i]);
        }
    }
}

/// Default Hele-Shaw run: stable to `t_end`, and the damping under `k_e`
/// collapses below a hundredth of its initial value.
#[test]
fn heleshaw_defaults_release_low_k_damping() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::defaults(ModelKind::HeleShaw);
    cfg.out_dir = dir.path().to_path_buf();
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.exit_code(), 0, "{:?}", outcome.termination);
    let first = Snapshot::load(&dir.path().join(&outcome.snapshots[0].file)).unwrap();
    let last = Snapshot::load(&dir.path().join(&outcome.snapshots.last().unwrap().file)).unwrap();
    let ke = last.get_meta_f64("ke").unwrap();
    let k = last.column_f64("k").unwrap();
    let (l0, l1) = (first.column_f64("lambda").unwrap(), last.column_f64("lambda").unwrap());
    let mut checked = 0;
    for i in 0..k.len() {
        if k[i] >= 1.0 && k[i] < ke {
            assert!(l1[i] < l0[i] / 100.0, "k = {}: {} vs {}", k[i], l1[i], l0[i]);
            checked += 1;
        }
    }
    assert!(checked > 0);
}
