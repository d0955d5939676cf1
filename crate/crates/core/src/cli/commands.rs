//! The `solve`, `sweep`, `sync-threshold` and `sobolev` commands.

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use std::collections::BTreeMap;
use std::path::Path;

use super::config::{Format, Mode, RunConfig};
use super::output::{fmt_f64, Artifacts, RunManifest, Table};
use crate::error::{Error, Result};
use crate::functional::{determinant_bound, nehari_infimum, nehari_norm_bound, PairIntegrals, PairState};
use crate::geometry::{
    sobolev_constant, sobolev_constant_via_sphere, sobolev_level, sphere_area, ReducedGrid, ReducedProfile,
};
use crate::scalar::{diagonal_branch, sync_grid_scan, sync_threshold, SyncInstance};
use crate::separation::{sweep_lambda_with, RecordFlag, RecordStatus, SweepCheckpoint, SweepRecord};
use crate::solver::{initial_guess, minimize_nehari, minimize_single, SolveResult};

pub const CHECKPOINT_FILE: &str = "sweep_checkpoint.json";
const UNITS: &str = "theta in radians; energies dimensionless";
/// Relative tolerance of the on-manifold identities in the solve summary.
const IDENTITY_TOL: f64 = 1e-8;
/// Slack on the Nehari norm and determinant bounds.
const BOUND_SLACK: f64 = 0.01;

fn table_name(stem: &str, format: Format) -> String {
    match format {
        Format::Csv => format!("{stem}.csv"),
        Format::Json => format!("{stem}.json"),
    }
}

fn write_table(art: &mut Artifacts, stem: &str, format: Format, table: &Table) -> Result<()> {
    match format {
        Format::Csv => art.write(&table_name(stem, format), &table.to_csv()?)?,
        Format::Json => art.write_json(&table_name(stem, format), &table.to_json())?,
    };
    Ok(())
}

fn write_failure(art: Artifacts, command: &str, config: &RunConfig, err: &Error) -> Result<RunManifest> {
    let mut art = art;
    art.write_json("failure.json", &serde_json::json!({ "command": command, "error": err.to_string() }))?;
    art.finish(command, config)
}

// ---------------------------------------------------------------------------
// solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub mode: Mode,
    pub energy: f64,
    pub grad_norm: f64,
    pub full_grad_norm: f64,
    pub residual_f: f64,
    pub residual_h: f64,
    pub multipliers: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    /// Level the energy is compared against: the unattained Nehari infimum in
    /// competitive mode, the single-equation level otherwise.
    pub reference_level: f64,
    pub checks: BTreeMap<String, bool>,
}

impl SolveSummary {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }
}

fn solve_pair(config: &RunConfig, grid: &ReducedGrid) -> Result<(SolveResult, f64)> {
    let cp = config.coupling_params()?;
    let opts = config.solve_options();
    let init = initial_guess(config.solver.init, grid, opts.seed);
    let dim = config.model.dim;
    match config.mode {
        Mode::Competitive => Ok((minimize_nehari(&init, &cp, grid, &opts)?, nehari_infimum(&cp, dim)?)),
        Mode::Single => {
            let r = minimize_single(&init.u, cp.mu1, grid, &opts)?;
            Ok((r, nehari_norm_bound(cp.mu1, dim)? / dim as f64))
        }
        Mode::Decoupled => {
            let a = minimize_single(&init.u, cp.mu1, grid, &opts)?;
            let b = minimize_single(&init.v, cp.mu2, grid, &opts)?;
            let level = nehari_infimum(&cp, dim)?;
            let combined = SolveResult {
                pair: PairState::new(a.pair.u, b.pair.u)?,
                energy: a.energy + b.energy,
                grad_norm: a.grad_norm.hypot(b.grad_norm),
                full_grad_norm: a.full_grad_norm.hypot(b.full_grad_norm),
                multipliers: (a.multipliers.0, b.multipliers.0),
                iterations: a.iterations + b.iterations,
                converged: a.converged && b.converged,
                residuals: crate::functional::NehariResiduals { f_val: a.residuals.f_val, h_val: b.residuals.f_val },
            };
            Ok((combined, level))
        }
    }
}

fn solve_checks(config: &RunConfig, grid: &ReducedGrid, res: &SolveResult) -> Result<BTreeMap<String, bool>> {
    let cp = config.coupling_params()?;
    let dim = config.model.dim;
    let crit = grid.params().critical_exponent();
    let ints = PairIntegrals::compute(&res.pair, &cp, grid)?;
    let norm = ints.p + ints.q;
    let mut checks = BTreeMap::new();
    checks.insert("converged".into(), res.converged);
    checks.insert("nehari_residuals".into(), res.residuals.max_abs() <= IDENTITY_TOL * norm);
    checks.insert("energy_identity".into(), (res.energy - norm / dim as f64).abs() <= IDENTITY_TOL * res.energy.abs());
    let pb = ints.p >= (1.0 - BOUND_SLACK) * nehari_norm_bound(cp.mu1, dim)?;
    let qb = match config.mode {
        Mode::Single => true,
        _ => ints.q >= (1.0 - BOUND_SLACK) * nehari_norm_bound(cp.mu2, dim)?,
    };
    checks.insert("norm_bounds".into(), pb && qb);
    if config.mode == Mode::Competitive {
        let m = ints.nehari_matrix(&cp, crit);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        checks.insert(
            "determinant_positive".into(),
            det > 0.0 && det >= (1.0 - BOUND_SLACK) * determinant_bound(&cp, dim, ints.c)?,
        );
        checks.insert("above_unattained_level".into(), res.energy > nehari_infimum(&cp, dim)?);
    }
    if config.solver.positivity_enforced {
        let nonneg = res.pair.u.values().iter().chain(res.pair.v.values()).all(|&x| x >= 0.0);
        checks.insert("nonnegative".into(), nonneg);
    }
    Ok(checks)
}

fn profile_table(config: &RunConfig, grid: &ReducedGrid, pair: &PairState) -> Result<Table> {
    let mut t = Table::new(vec!["theta", "u", "v", "weight"])
        .meta("config_digest", config.digest()?)
        .meta("units", UNITS)
        .meta("mode", format!("{:?}", config.mode).to_lowercase());
    for i in 0..grid.len() {
        t.push(vec![fmt_f64(grid.nodes()[i]), fmt_f64(pair.u[i]), fmt_f64(pair.v[i]), fmt_f64(grid.weights()[i])]);
    }
    Ok(t)
}

/// Solves one configuration and writes the profile, a summary and the
/// manifest. Non-convergence still writes all files before returning an error.
pub fn cmd_solve(config: &RunConfig) -> Result<(RunManifest, SolveSummary)> {
    config.validate()?;
    let grid = ReducedGrid::new(&config.model_params()?)?;
    let mut art = Artifacts::create(&config.output_dir)?;
    let (res, level) = match solve_pair(config, &grid) {
        Ok(r) => r,
        Err(e) => {
            write_failure(art, "solve", config, &e)?;
            return Err(e);
        }
    };
    let summary = SolveSummary {
        mode: config.mode,
        energy: res.energy,
        grad_norm: res.grad_norm,
        full_grad_norm: res.full_grad_norm,
        residual_f: res.residuals.f_val,
        residual_h: res.residuals.h_val,
        multipliers: res.multipliers,
        iterations: res.iterations,
        converged: res.converged,
        reference_level: level,
        checks: solve_checks(config, &grid, &res)?,
    };
    write_table(&mut art, "profile", config.format, &profile_table(config, &grid, &res.pair)?)?;
    art.write_json("summary.json", &summary)?;
    let manifest = art.finish("solve", config)?;
    log::info!("energy {} after {} iterations", summary.energy, summary.iterations);
    if !res.converged {
        return Err(Error::Convergence { iterations: res.iterations, residual: res.grad_norm });
    }
    Ok((manifest, summary))
}

// ---------------------------------------------------------------------------
// sweep

#[serde_as]
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointRow {
    #[serde_as(as = "DisplayFromStr")]
    lambda: f64,
    #[serde_as(as = "DisplayFromStr")]
    energy: f64,
    #[serde_as(as = "DisplayFromStr")]
    overlap: f64,
    #[serde_as(as = "DisplayFromStr")]
    lambda_overlap: f64,
    #[serde_as(as = "Option<DisplayFromStr>")]
    interface_theta: Option<f64>,
    #[serde_as(as = "DisplayFromStr")]
    max_pointwise_product: f64,
    iters: usize,
    status: RecordStatus,
    flags: Vec<RecordFlag>,
}

/// Exact decimal strings so a resumed sweep continues bit-for-bit.
#[serde_as]
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointFile {
    config_digest: String,
    rows: Vec<CheckpointRow>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    warm_u: Vec<f64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    warm_v: Vec<f64>,
}

impl CheckpointFile {
    fn from_checkpoint(cp: &SweepCheckpoint, digest: &str) -> Self {
        let rows = cp
            .completed
            .iter()
            .map(|r| CheckpointRow {
                lambda: r.lambda,
                energy: r.energy_c_lambda,
                overlap: r.overlap,
                lambda_overlap: r.lambda_overlap,
                interface_theta: r.interface_theta,
                max_pointwise_product: r.max_pointwise_product,
                iters: r.solver_iters,
                status: r.status,
                flags: r.flags.clone(),
            })
            .collect();
        Self {
            config_digest: digest.to_string(),
            rows,
            warm_u: cp.warm.u.values().to_vec(),
            warm_v: cp.warm.v.values().to_vec(),
        }
    }

    fn into_checkpoint(self) -> Result<SweepCheckpoint> {
        let completed = self
            .rows
            .into_iter()
            .map(|r| SweepRecord {
                lambda: r.lambda,
                energy_c_lambda: r.energy,
                overlap: r.overlap,
                lambda_overlap: r.lambda_overlap,
                interface_theta: r.interface_theta,
                max_pointwise_product: r.max_pointwise_product,
                solver_iters: r.iters,
                status: r.status,
                flags: r.flags,
            })
            .collect();
        let warm = PairState::new(ReducedProfile::new(self.warm_u)?, ReducedProfile::new(self.warm_v)?)?;
        Ok(SweepCheckpoint { completed, warm })
    }
}

/// Serialized checkpoint as written to [`CHECKPOINT_FILE`].
pub fn checkpoint_json(cp: &SweepCheckpoint, config_digest: &str) -> Result<String> {
    serde_json::to_string_pretty(&CheckpointFile::from_checkpoint(cp, config_digest))
        .map_err(|e| Error::Io(e.to_string()))
}

fn load_checkpoint(dir: &Path, digest: &str) -> Result<Option<SweepCheckpoint>> {
    let path = dir.join(CHECKPOINT_FILE);
    if !path.exists() {
        log::info!("no checkpoint at {}, starting fresh", path.display());
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    let file: CheckpointFile =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad checkpoint {}: {e}", path.display())))?;
    if file.config_digest != digest {
        return Err(Error::Config(format!("checkpoint {} was written for a different configuration", path.display())));
    }
    log::info!("resuming after {} completed rows", file.rows.len());
    file.into_checkpoint().map(Some)
}

fn status_cell(r: &SweepRecord) -> String {
    let mut s = match r.status {
        RecordStatus::Converged => "converged",
        RecordStatus::NotConverged => "not_converged",
        RecordStatus::Failed => "failed",
    }
    .to_string();
    for f in &r.flags {
        s.push(';');
        s.push_str(match f {
            RecordFlag::OverlapIncrease => "overlap_increase",
            RecordFlag::EnergyDecrease => "energy_decrease",
            RecordFlag::AboveLimit => "above_limit",
            RecordFlag::Topology => "topology",
        });
    }
    s
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub usable_rows: usize,
    pub resumed_rows: usize,
    pub limit_energy: Option<f64>,
    pub findings: Vec<String>,
}

/// Runs the continuation in `lambda` and the limit solve. Succeeds when at
/// least one finite-`lambda` row produced a usable solution.
pub fn cmd_sweep(config: &RunConfig, resume: bool) -> Result<(RunManifest, SweepSummary)> {
    config.validate()?;
    config.validate_sweep()?;
    if config.mode != Mode::Competitive {
        return Err(Error::Config("sweep needs competitive mode".into()));
    }
    let schedule = config.schedule()?;
    let grid = ReducedGrid::new(&config.model_params()?)?;
    let cp = config.coupling_params()?;
    let opts = config.solve_options();
    let digest = config.digest()?;
    let checkpoint = if resume { load_checkpoint(&config.output_dir, &digest)? } else { None };
    let resumed_rows = checkpoint.as_ref().map_or(0, |c| c.completed.len());

    let mut art = Artifacts::create(&config.output_dir)?;
    if let Some(cp) = &checkpoint {
        art.write_json(CHECKPOINT_FILE, &CheckpointFile::from_checkpoint(cp, &digest))?;
    }
    let mut write_err = None;
    let outcome = sweep_lambda_with(
        &schedule,
        &cp,
        &grid,
        &opts,
        checkpoint,
        |_, _| {},
        |ck| {
            if let Some(r) = ck.completed.last() {
                log::info!("lambda {}: energy {} ({} iterations)", r.lambda, r.energy_c_lambda, r.solver_iters);
            }
            if write_err.is_none() {
                if let Err(e) = art.write_json(CHECKPOINT_FILE, &CheckpointFile::from_checkpoint(ck, &digest)) {
                    write_err = Some(e);
                }
            }
        },
    )?;
    if let Some(e) = write_err {
        return Err(e);
    }

    let mut sweep =
        Table::new(vec!["lambda", "energy", "overlap", "lambda_overlap", "interface_theta", "iters", "status"])
            .meta("config_digest", &digest)
            .meta("units", UNITS)
            .meta("rows", "one per lambda, then the limit problem at lambda = -inf");
    for r in &outcome.records {
        sweep.push(vec![
            fmt_f64(r.lambda),
            fmt_f64(r.energy_c_lambda),
            fmt_f64(r.overlap),
            fmt_f64(r.lambda_overlap),
            opt_cell(r.interface_theta),
            r.solver_iters.to_string(),
            status_cell(r),
        ]);
    }
    write_table(&mut art, "sweep", config.format, &sweep)?;

    let mut plot = Table::new(vec!["lambda", "neg_lambda", "energy", "overlap", "lambda_overlap", "interface_theta"])
        .meta("config_digest", &digest)
        .meta("units", UNITS)
        .meta("limit_energy", opt_cell(outcome.limit_energy))
        .meta(
            "gnuplot",
            "set datafile separator ','; set logscale x; plot 'sweep_plot.csv' using 2:4 with linespoints",
        );
    for r in outcome.finite_records().filter(|r| r.status.is_usable()) {
        plot.push(vec![
            fmt_f64(r.lambda),
            fmt_f64(-r.lambda),
            fmt_f64(r.energy_c_lambda),
            fmt_f64(r.overlap),
            fmt_f64(r.lambda_overlap),
            opt_cell(r.interface_theta),
        ]);
    }
    art.write("sweep_plot.csv", &plot.to_csv()?)?;

    if let Some(w) = &outcome.limit_profile {
        let mut t = Table::new(vec!["theta", "w", "weight"])
            .meta("config_digest", &digest)
            .meta("units", UNITS)
            .meta("limit_energy", opt_cell(outcome.limit_energy));
        for i in 0..grid.len() {
            t.push(vec![fmt_f64(grid.nodes()[i]), fmt_f64(w[i]), fmt_f64(grid.weights()[i])]);
        }
        write_table(&mut art, "limit_profile", config.format, &t)?;
    }

    let summary = SweepSummary {
        rows: outcome.records.len(),
        usable_rows: outcome.finite_records().filter(|r| r.status.is_usable()).count(),
        resumed_rows,
        limit_energy: outcome.limit_energy,
        findings: outcome.findings.clone(),
    };
    art.write_json("sweep_summary.json", &summary)?;
    let manifest = art.finish("sweep", config)?;
    for f in &summary.findings {
        log::warn!("{f}");
    }
    if summary.usable_rows == 0 {
        return Err(Error::Search("no sweep row produced a solution".into()));
    }
    Ok((manifest, summary))
}

// ---------------------------------------------------------------------------
// sync-threshold and sobolev

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    /// `-sqrt(mu1 mu2)/2`, available for `N = 4`, `alpha = beta = 2`.
    pub closed_form: Option<f64>,
    pub scan_points: usize,
    /// Brute-scan solution counts at `estimate * (1 -/+ 0.01)`.
    pub scan_inside: usize,
    pub scan_outside: usize,
    pub diagonal_at_estimate: Option<f64>,
}

pub const SCAN_POINTS: usize = 1_000_000;

pub fn cmd_sync_threshold(config: &RunConfig) -> Result<(RunManifest, ThresholdSummary)> {
    config.model_params()?;
    let c = &config.coupling;
    let dim = config.model.dim;
    let th = sync_threshold(c.mu1, c.mu2, c.alpha, c.beta, dim)?;
    let est = th.estimate();
    let inst = SyncInstance::new(c.mu1, c.mu2, c.alpha, c.beta, est, dim)?;
    // more negative than the threshold: no synchronized solution expected
    let scan_outside = sync_grid_scan(&inst.with_lambda(est * 1.01), SCAN_POINTS)?;
    let scan_inside = sync_grid_scan(&inst.with_lambda(est * 0.99), SCAN_POINTS)?;
    let closed_form = (dim == 4 && c.alpha == 2.0 && c.beta == 2.0).then(|| -(c.mu1 * c.mu2).sqrt() / 2.0);
    let summary = ThresholdSummary {
        lo: th.lo,
        hi: th.hi,
        estimate: est,
        closed_form,
        scan_points: SCAN_POINTS,
        scan_inside,
        scan_outside,
        diagonal_at_estimate: diagonal_branch(&inst),
    };
    let mut art = Artifacts::create(&config.output_dir)?;
    art.write_json("sync_threshold.json", &summary)?;
    Ok((art.finish("sync-threshold", config)?, summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevRow {
    pub dim: usize,
    pub sobolev_constant: f64,
    pub via_sphere: f64,
    pub relative_difference: f64,
    pub sphere_area: f64,
    /// `S^{N/2} / N`, the least energy of the single equation with `mu = 1`.
    pub single_level: f64,
}

pub fn sobolev_row(dim: usize) -> Result<SobolevRow> {
    let s = sobolev_constant(dim)?;
    let t = sobolev_constant_via_sphere(dim)?;
    Ok(SobolevRow {
        dim,
        sobolev_constant: s,
        via_sphere: t,
        relative_difference: (s - t).abs() / s,
        sphere_area: sphere_area(dim)?,
        single_level: sobolev_level(dim)? / dim as f64,
    })
}

/// Tabulates the Sobolev constant for `N = 3..=max(8, dim)`.
pub fn cmd_sobolev(config: &RunConfig) -> Result<(RunManifest, Vec<SobolevRow>)> {
    let rows = (3..=config.model.dim.max(8)).map(sobolev_row).collect::<Result<Vec<_>>>()?;
    let mut art = Artifacts::create(&config.output_dir)?;
    art.write_json("sobolev.json", &rows)?;
    Ok((art.finish("sobolev", config)?, rows))
}
