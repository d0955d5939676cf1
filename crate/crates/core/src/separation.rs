//! Continuation in the coupling strength towards the segregated limit, and
//! the sign structure of the limit profile on the orbit arc.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::functional::{overlap, CouplingParams, PairState};
use crate::geometry::{ModelParams, ReducedGrid, ReducedProfile};
use crate::solver::{initial_guess, minimize_limit, minimize_nehari_observed, InitKind, Iterate, SolveOptions};

/// Strictly decreasing negative coupling values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    lambdas: Vec<f64>,
}

impl SweepSchedule {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidParams("empty sweep schedule".into()));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l < 0.0)) {
            return Err(Error::InvalidParams(format!("schedule value {bad} is not a finite negative number")));
        }
        if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParams("schedule must be strictly decreasing".into()));
        }
        Ok(Self { lambdas })
    }

    /// `count` points spaced geometrically from `start` to `end` (both negative).
    pub fn geometric(start: f64, end: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParams("geometric schedule needs at least two points".into()));
        }
        if !(start < 0.0 && end < start) {
            return Err(Error::InvalidParams(format!("need end < start < 0, got start={start}, end={end}")));
        }
        let ratio = (end / start).ln() / (count - 1) as f64;
        let mut lambdas: Vec<f64> = (0..count).map(|k| start * (ratio * k as f64).exp()).collect();
        lambdas[count - 1] = end;
        Self::new(lambdas)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Converged,
    NotConverged,
    Failed,
}

impl RecordStatus {
    pub fn is_usable(self) -> bool {
        self != RecordStatus::Failed
    }
}

/// Observations that do not fail a sweep but are surfaced with the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    /// Overlap grew relative to the previous row (checked after the third row).
    OverlapIncrease,
    /// Energy dropped by more than `1e-6` relative to the previous row.
    EnergyDecrease,
    /// Energy exceeds the limit level by more than 1%.
    AboveLimit,
    /// Sign structure of `u - v` is not a single crossing.
    Topology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// `-inf` marks the limit row.
    pub lambda: f64,
    pub energy_c_lambda: f64,
    pub overlap: f64,
    pub lambda_overlap: f64,
    pub interface_theta: Option<f64>,
    pub max_pointwise_product: f64,
    pub solver_iters: usize,
    pub status: RecordStatus,
    pub flags: Vec<RecordFlag>,
}

impl SweepRecord {
    pub fn is_limit(&self) -> bool {
        self.lambda == f64::NEG_INFINITY
    }
}

/// Completed rows plus the warm start for the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCheckpoint {
    pub completed: Vec<SweepRecord>,
    pub warm: PairState,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// One row per schedule value, then the limit row if the limit solve ran.
    pub records: Vec<SweepRecord>,
    pub final_pair: Option<PairState>,
    pub limit_profile: Option<ReducedProfile>,
    pub limit_energy: Option<f64>,
    pub findings: Vec<String>,
}

impl SweepOutcome {
    pub fn finite_records(&self) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(|r| !r.is_limit())
    }

    pub fn limit_record(&self) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.is_limit())
    }
}

pub fn sweep_lambda(
    schedule: &SweepSchedule,
    cp_base: &CouplingParams,
    grid: &ReducedGrid,
    opts: &SolveOptions,
) -> Result<SweepOutcome> {
    sweep_lambda_with(schedule, cp_base, grid, opts, None, |_, _| {}, |_| {})
}

/// Warm-started sweep. `resume` skips the rows it already holds;
/// `observer` sees every accepted solver iterate with its `lambda`;
/// `on_record` is called with the running checkpoint after each row.
pub fn sweep_lambda_with<O, R>(
    schedule: &SweepSchedule,
    cp_base: &CouplingParams,
    grid: &ReducedGrid,
    opts: &SolveOptions,
    resume: Option<SweepCheckpoint>,
    mut observer: O,
    mut on_record: R,
) -> Result<SweepOutcome>
where
    O: FnMut(f64, &Iterate),
    R: FnMut(&SweepCheckpoint),
{
    let dim = grid.params().dim;
    cp_base.with_lambda(schedule.lambdas()[0]).validate(dim)?;
    let (mut records, mut warm) = match resume {
        Some(cp) => {
            if cp.completed.len() > schedule.len() {
                return Err(Error::InvalidParams("checkpoint holds more rows than the schedule".into()));
            }
            for (r, l) in cp.completed.iter().zip(schedule.lambdas()) {
                if r.lambda != *l {
                    return Err(Error::InvalidParams(format!(
                        "checkpoint row lambda {} does not match schedule value {l}",
                        r.lambda
                    )));
                }
            }
            cp.warm.check_grid(grid)?;
            (cp.completed, Some(cp.warm))
        }
        None => (Vec::new(), None),
    };
    let mut findings = Vec::new();

    for &lambda in &schedule.lambdas()[records.len()..] {
        let cp = cp_base.with_lambda(lambda);
        let init = warm.clone().unwrap_or_else(|| initial_guess(InitKind::Bumps, grid, opts.seed));
        let record = match minimize_nehari_observed(&init, &cp, grid, opts, |it| observer(lambda, it)) {
            Ok(res) => {
                let ov = overlap(&res.pair, &cp, grid)?;
                let rec = SweepRecord {
                    lambda,
                    energy_c_lambda: res.energy,
                    overlap: ov,
                    lambda_overlap: -lambda * ov,
                    interface_theta: pair_interface(&res.pair, grid).ok(),
                    max_pointwise_product: max_product(&res.pair),
                    solver_iters: res.iterations,
                    status: if res.converged { RecordStatus::Converged } else { RecordStatus::NotConverged },
                    flags: Vec::new(),
                };
                warm = Some(res.pair);
                rec
            }
            Err(e) => {
                log::warn!("sweep solve at lambda={lambda} failed: {e}");
                findings.push(format!("lambda={lambda}: {e}"));
                SweepRecord {
                    lambda,
                    energy_c_lambda: f64::NAN,
                    overlap: f64::NAN,
                    lambda_overlap: f64::NAN,
                    interface_theta: None,
                    max_pointwise_product: f64::NAN,
                    solver_iters: 0,
                    status: RecordStatus::Failed,
                    flags: Vec::new(),
                }
            }
        };
        records.push(record);
        if let Some(w) = &warm {
            on_record(&SweepCheckpoint { completed: records.clone(), warm: w.clone() });
        }
    }

    let final_pair = warm;
    let mut limit_profile = None;
    let mut limit_energy = None;
    if let Some(pair) = &final_pair {
        let w = pair.u.axpy(-1.0, &pair.v);
        match minimize_limit(&w, cp_base, grid, opts) {
            Ok(res) => {
                records.push(SweepRecord {
                    lambda: f64::NEG_INFINITY,
                    energy_c_lambda: res.energy,
                    overlap: 0.0,
                    lambda_overlap: 0.0,
                    interface_theta: interface_locate(&res.w, grid).ok(),
                    max_pointwise_product: 0.0,
                    solver_iters: res.iterations,
                    status: if res.converged { RecordStatus::Converged } else { RecordStatus::NotConverged },
                    flags: Vec::new(),
                });
                limit_energy = Some(res.energy);
                limit_profile = Some(res.w);
            }
            Err(e) => findings.push(format!("limit solve failed: {e}")),
        }
    }
    flag_records(&mut records, limit_energy, &mut findings);
    Ok(SweepOutcome { records, final_pair, limit_profile, limit_energy, findings })
}

fn flag_records(records: &mut [SweepRecord], limit: Option<f64>, findings: &mut Vec<String>) {
    let mut prev: Option<(f64, f64)> = None;
    for (i, r) in records.iter_mut().enumerate() {
        if r.is_limit() || !r.status.is_usable() {
            continue;
        }
        if r.interface_theta.is_none() {
            r.flags.push(RecordFlag::Topology);
        }
        if let Some((pe, po)) = prev {
            if i >= 3 && r.overlap > po {
                r.flags.push(RecordFlag::OverlapIncrease);
            }
            if r.energy_c_lambda < pe - 1e-6 * pe.abs() {
                r.flags.push(RecordFlag::EnergyDecrease);
            }
        }
        if let Some(c) = limit {
            if r.energy_c_lambda > c * 1.01 {
                r.flags.push(RecordFlag::AboveLimit);
            }
        }
        for f in &r.flags {
            findings.push(format!("lambda={}: {f:?}", r.lambda));
        }
        prev = Some((r.energy_c_lambda, r.overlap));
    }
}

fn max_product(pair: &PairState) -> f64 {
    pair.u.values().iter().zip(pair.v.values()).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max)
}

/// Interface of a pair: the crossing of `u - v`.
pub fn pair_interface(pair: &PairState, grid: &ReducedGrid) -> Result<f64> {
    pair.check_grid(grid)?;
    interface_locate(&pair.u.axpy(-1.0, &pair.v), grid)
}

/// Runs of constant strict sign, as `(sign, first, last)` node indices.
/// Exact zeros are skipped.
fn sign_runs(w: &[f64]) -> Vec<(i8, usize, usize)> {
    let mut runs: Vec<(i8, usize, usize)> = Vec::new();
    for (i, &x) in w.iter().enumerate() {
        let s = if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            continue;
        };
        match runs.last_mut() {
            Some(last) if last.0 == s => last.2 = i,
            _ => runs.push((s, i, i)),
        }
    }
    runs
}

/// The unique sign change of `w`, by linear interpolation between the
/// bracketing nodes.
pub fn interface_locate(w: &ReducedProfile, grid: &ReducedGrid) -> Result<f64> {
    grid.check_len(w.len())?;
    let runs = sign_runs(w.values());
    let crossings = runs.len().saturating_sub(1);
    if crossings != 1 {
        return Err(Error::Topology { crossings });
    }
    let (i, j) = (runs[0].2, runs[1].1);
    let (a, b) = (w.values()[i], w.values()[j]);
    let (ti, tj) = (grid.nodes()[i], grid.nodes()[j]);
    if j == i + 1 {
        Ok(ti + (tj - ti) * a / (a - b))
    } else {
        // a block of exact zeros separates the two signs
        Ok(0.5 * (grid.nodes()[i + 1] + grid.nodes()[j - 1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

/// Sign structure of a limit profile on the orbit arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToriReport {
    pub crossings: usize,
    pub theta0: Option<f64>,
    /// Which of `{w > 0}`, `{w < 0}` contains `theta = 0`.
    pub touches_zero: Option<Sign>,
    /// Topological type of the set touching `theta = 0`; the other set has
    /// the complementary type.
    pub zero_side_type: String,
    pub far_side_type: String,
    pub checks: Vec<(String, bool)>,
}

impl ToriReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// Checks that `{w > 0}` and `{w < 0}` are complementary arcs, each abutting
/// one end of `[0, pi/2]`, with a single common boundary point.
pub fn verify_tori(w: &ReducedProfile, grid: &ReducedGrid, params: &ModelParams) -> ToriReport {
    let vals = w.values();
    let runs = sign_runs(vals);
    let crossings = runs.len().saturating_sub(1);
    let last = vals.len().saturating_sub(1);
    let mut checks = Vec::new();
    checks.push(("both_signs_present".to_string(), runs.len() >= 2));
    checks.push(("single_interface".to_string(), crossings == 1));
    let theta0 = interface_locate(w, grid).ok();
    let touches_zero = runs.first().map(|r| if r.0 > 0 { Sign::Positive } else { Sign::Negative });
    if runs.len() == 2 {
        // nodes outside the runs are exact zeros; allow them only at the
        // endpoints, where the orbit weight vanishes
        checks.push(("first_arc_starts_at_0".to_string(), vals[..runs[0].1].iter().all(|x| *x == 0.0)));
        checks.push(("second_arc_ends_at_pi_2".to_string(), vals[runs[1].2 + 1..=last].iter().all(|x| *x == 0.0)));
        let gap_nodes = runs[1].1 - runs[0].2 - 1;
        checks.push(("common_boundary".to_string(), gap_nodes <= 1));
        checks.push(("interface_interior".to_string(), theta0.is_some_and(|t| t > 0.0 && t < FRAC_PI_2)));
    }
    let (m, n) = (params.m, params.n);
    ToriReport {
        crossings,
        theta0,
        touches_zero,
        zero_side_type: format!("S^{} x B^{}", m - 1, n),
        far_side_type: format!("B^{} x S^{}", m, n - 1),
        checks,
    }
}
