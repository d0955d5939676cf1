use super::output::{read_csv, verify_manifest, MANIFEST_FILE};
use super::*;
use clap::Parser;
use std::path::Path;

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("critsep").chain(args.iter().copied())).unwrap()
}

fn write_config(dir: &Path, config: &RunConfig) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, config.to_toml().unwrap()).unwrap();
    path
}

fn small_config(out: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.model.cells = 256;
    c.output_dir = out.to_path_buf();
    c
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != MANIFEST_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn flags_and_subcommands_parse() {
    for sub in ["solve", "sweep", "sync-threshold", "verify", "sobolev"] {
        let c = cli(&[sub, "--config", "a.toml", "--out", "o", "--seed", "3", "--resume", "--grid", "64"]);
        assert_eq!(c.grid, Some(64));
        assert_eq!(c.seed, Some(3));
        assert!(c.resume);
    }
    assert!(Cli::try_parse_from(["critsep", "optimize"]).is_err());
}

#[test]
fn overrides_apply_on_top_of_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config(dir.path()));
    let c = cli(&["solve", "--config", path.to_str().unwrap(), "--seed", "9", "--grid", "128", "--out", "elsewhere"]);
    let cfg = c.resolve_config().unwrap();
    assert_eq!(cfg.solver.seed, 9);
    assert_eq!(cfg.model.cells, 128);
    assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
}

#[test]
fn default_solve_writes_profile_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert_eq!(run(&cli(&["solve", "--out", out.to_str().unwrap()])), EXIT_OK);
    let (header, rows) = read_csv(&out.join("profile.csv")).unwrap();
    assert_eq!(header, ["theta", "u", "v", "weight"]);
    assert_eq!(rows.len(), RunConfig::default().model.cells + 1);
    let text = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(text.starts_with("# config_digest: "));
    let summary: commands::SolveSummary =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary.converged && summary.all_checks_pass(), "{summary:?}");
    assert!(verify_manifest(&out).unwrap().is_empty());
}

#[test]
fn json_format_writes_json_profile() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.format = Format::Json;
    let (m, _) = cmd_solve(&c).unwrap();
    assert!(m.files.iter().any(|f| f.path == "profile.json"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("profile.json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 257);
    assert!(v["rows"][0]["theta"].is_string());
}

#[test]
fn competitive_with_nonnegative_lambda_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let mut c = small_config(&out);
    c.coupling.lambda = 0.5;
    let path = write_config(dir.path(), &c);
    assert_eq!(run(&cli(&["solve", "--config", path.to_str().unwrap()])), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn unreadable_config_is_a_config_error() {
    assert_eq!(run(&cli(&["solve", "--config", "/nonexistent/run.toml"])), EXIT_CONFIG);
}

#[test]
fn non_convergence_exits_nonzero_with_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.solver.max_iters = 2;
    let path = write_config(dir.path(), &c);
    assert_eq!(run(&cli(&["solve", "--config", path.to_str().unwrap()])), EXIT_FAILURE);
    let summary: commands::SolveSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(!summary.converged);
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}

#[test]
fn decoupled_and_single_modes() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.mode = Mode::Decoupled;
    c.coupling.lambda = 0.0;
    let (_, s) = cmd_solve(&c).unwrap();
    assert!((s.energy - s.reference_level).abs() < 1e-9 * s.reference_level, "{s:?}");
    c.mode = Mode::Single;
    let (_, s) = cmd_solve(&c).unwrap();
    assert!((s.energy - s.reference_level).abs() < 1e-9 * s.reference_level, "{s:?}");
}

#[test]
fn identical_runs_give_identical_data_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let c = cli(&["solve", "--grid", "256", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(run(&c), EXIT_OK);
    }
    assert_eq!(data_files(&a), data_files(&b));
}

#[test]
fn random_init_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(&dir.path().join("a"));
    c.solver.init = crate::solver::InitKind::Random;
    let (_, s1) = cmd_solve(&c).unwrap();
    c.output_dir = dir.path().join("b");
    let (_, s2) = cmd_solve(&c).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(data_files(&dir.path().join("a")), data_files(&dir.path().join("b")));
}

fn sweep_config(out: &Path) -> RunConfig {
    let mut c = small_config(out);
    c.sweep.end = -100.0;
    c.sweep.points = 6;
    c
}

#[test]
fn sweep_writes_rows_plot_data_and_limit_profile() {
    let dir = tempfile::tempdir().unwrap();
    let c = sweep_config(dir.path());
    let (manifest, summary) = cmd_sweep(&c, false).unwrap();
    assert_eq!(summary.rows, 7);
    let (header, rows) = read_csv(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(header, ["lambda", "energy", "overlap", "lambda_overlap", "interface_theta", "iters", "status"]);
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[6][0], "-inf");
    assert!(rows.iter().all(|r| r[6].starts_with("converged")));
    let (_, plot) = read_csv(&dir.path().join("sweep_plot.csv")).unwrap();
    assert_eq!(plot.len(), 6);
    let (_, limit) = read_csv(&dir.path().join("limit_profile.csv")).unwrap();
    assert_eq!(limit.len(), 257);
    let names: Vec<_> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    for f in ["sweep.csv", "sweep_plot.csv", "limit_profile.csv", "sweep_checkpoint.json", "sweep_summary.json"] {
        assert!(names.contains(&f), "{f} missing from {names:?}");
    }
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}

#[test]
fn sweep_resume_reproduces_a_fresh_run() {
    let dir = tempfile::tempdir().unwrap();
    let fresh = dir.path().join("fresh");
    cmd_sweep(&sweep_config(&fresh), false).unwrap();

    // interrupted run: a shorter schedule leaves a checkpoint after three rows
    let partial = dir.path().join("partial");
    let short = sweep_config(&partial);
    let full_lambdas = short.schedule().unwrap().lambdas().to_vec();
    let sched = crate::separation::SweepSchedule::new(full_lambdas[..3].to_vec()).unwrap();
    let grid = crate::geometry::ReducedGrid::new(&short.model_params().unwrap()).unwrap();
    let cp = short.coupling_params().unwrap();
    let mut last = None;
    crate::separation::sweep_lambda_with(
        &sched,
        &cp,
        &grid,
        &short.solve_options(),
        None,
        |_, _| {},
        |ck| last = Some(ck.clone()),
    )
    .unwrap();
    std::fs::create_dir_all(&partial).unwrap();
    let file = commands::checkpoint_json(&last.unwrap(), &short.digest().unwrap()).unwrap();
    std::fs::write(partial.join(commands::CHECKPOINT_FILE), file).unwrap();

    let (_, s) = cmd_sweep(&short, true).unwrap();
    assert_eq!(s.resumed_rows, 3);
    for name in ["sweep.csv", "limit_profile.csv", "sweep_plot.csv"] {
        assert_eq!(
            std::fs::read(fresh.join(name)).unwrap(),
            std::fs::read(partial.join(name)).unwrap(),
            "{name} differs after resume"
        );
    }
}

#[test]
fn resume_rejects_a_checkpoint_from_another_config() {
    let dir = tempfile::tempdir().unwrap();
    let c = sweep_config(dir.path());
    cmd_sweep(&c, false).unwrap();
    let mut other = c.clone();
    other.coupling.mu2 = 2.0;
    assert!(matches!(cmd_sweep(&other, true), Err(Error::Config(_))));
}

#[test]
fn sweep_requires_competitive_mode() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = sweep_config(dir.path());
    c.mode = Mode::Single;
    assert!(matches!(cmd_sweep(&c, false), Err(Error::Config(_))));
}

#[test]
fn verify_passes_and_names_injected_sobolev_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let c = cli(&["verify", "--grid", "512", "--out", out.to_str().unwrap()]);
    assert_eq!(run(&c), EXIT_OK);
    let bad = VerifyHooks { sobolev_scale: 1.0 + 1e-6 };
    assert_eq!(run_with_hooks(&c, &bad), EXIT_FAILURE);
    let mut cfg = c.resolve_config().unwrap();
    cfg.output_dir = dir.path().join("v2");
    match cmd_verify(&cfg, &bad) {
        Err(Error::Check(names)) => assert_eq!(names, "sobolev_dual_formula"),
        other => panic!("expected a check failure, got {other:?}"),
    }
}

#[test]
fn verify_reports_refinement_ratio_as_finding() {
    let dir = tempfile::tempdir().unwrap();
    let report = verify::run_battery(&small_config(dir.path()), &VerifyHooks::default()).unwrap();
    let r = report.checks.iter().find(|c| c.name == "refinement_ratio").unwrap();
    assert_eq!(r.kind, verify::CheckKind::Finding);
    assert!(r.detail.contains("ratios"), "{}", r.detail);
}

#[test]
fn sync_threshold_and_sobolev_commands() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_config(dir.path());
    let (_, t) = cmd_sync_threshold(&c).unwrap();
    assert!((t.estimate + 0.5).abs() < 1e-6);
    assert_eq!(t.closed_form, Some(-0.5));
    assert!(t.scan_inside >= 1 && t.scan_outside == 0);
    let (_, rows) = cmd_sobolev(&c).unwrap();
    assert!(rows.iter().all(|r| r.relative_difference < 1e-12));
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}
