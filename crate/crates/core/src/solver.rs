//! Constrained descent on the symmetric Nehari set and on the limit set.
//!
//! Every iterate is kept exactly on the constraint set: a trial point is
//! built by stepping along the negative tangent gradient and then mapped back
//! by the closed-form or Newton projection. Step sizes come from a
//! Barzilai-Borwein guess followed by Armijo backtracking on the energy of the
//! projected trial point. A trial whose projection fails counts as a rejected
//! step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::functional::{
    self, limit_energy, limit_project, limit_residuals, limit_tangent_gradient, nehari_norm_bound, nehari_project,
    preconditioned_tangent, single_project, single_tangent_split, tangent_split, CouplingParams, NehariResiduals,
    PairIntegrals, PairState,
};
use crate::geometry::{ReducedGrid, ReducedProfile};

/// Fraction of the Sobolev bound below which a component counts as collapsed.
pub const COLLAPSE_FRACTION: f64 = 0.1;
/// Largest admissible natural-constraint multiplier at convergence.
pub const MULTIPLIER_TOL: f64 = 1e-4;

const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_slope: f64,
    pub armijo_backtrack: f64,
    pub positivity_enforced: bool,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-7,
            armijo_slope: 1e-4,
            armijo_backtrack: 0.5,
            positivity_enforced: true,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return Err(Error::InvalidParams(format!("armijo_slope {} not in (0,1)", self.armijo_slope)));
        }
        if !(self.armijo_backtrack > 0.0 && self.armijo_backtrack < 1.0) {
            return Err(Error::InvalidParams(format!("armijo_backtrack {} not in (0,1)", self.armijo_backtrack)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParams("grad_tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub pair: PairState,
    pub energy: f64,
    /// `h1` norm of the tangent gradient at `pair`.
    pub grad_norm: f64,
    /// `h1` norm of the unconstrained gradient at `pair`.
    pub full_grad_norm: f64,
    pub multipliers: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    pub residuals: NehariResiduals,
}

#[derive(Debug, Clone)]
pub struct LimitResult {
    pub w: ReducedProfile,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: (f64, f64),
}

/// Snapshot handed to an observer after every accepted iterate.
#[derive(Debug)]
pub struct Iterate<'a> {
    pub iteration: usize,
    pub pair: &'a PairState,
    pub energy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Bumps,
    ConstantsSplit,
    Random,
}

impl std::str::FromStr for InitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bumps" => Ok(Self::Bumps),
            "constants_split" => Ok(Self::ConstantsSplit),
            "random" => Ok(Self::Random),
            other => Err(Error::Config(format!("unknown init kind '{other}'"))),
        }
    }
}

/// Starting pairs. `Bumps` gives caps with disjoint supports around the two
/// ends of the arc; `ConstantsSplit` a smoothed step at `pi/4`; `Random` a
/// seeded positive perturbation of the split.
pub fn initial_guess(kind: InitKind, grid: &ReducedGrid, seed: u64) -> PairState {
    let split = FRAC_PI_2 / 2.0;
    match kind {
        InitKind::Bumps => {
            let reach = 0.45 * FRAC_PI_2;
            let cap = |x: f64| if x < reach { (1.0 - (x / reach).powi(2)).powi(2) } else { 0.0 };
            PairState {
                u: ReducedProfile::from_fn(grid, cap),
                v: ReducedProfile::from_fn(grid, |t| cap(FRAC_PI_2 - t)),
            }
        }
        InitKind::ConstantsSplit => {
            let c = 2f64.sqrt();
            let eps = 0.05;
            PairState {
                u: ReducedProfile::from_fn(grid, |t| c * 0.5 * (1.0 + ((split - t) / eps).tanh())),
                v: ReducedProfile::from_fn(grid, |t| c * 0.5 * (1.0 + ((t - split) / eps).tanh())),
            }
        }
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = initial_guess(InitKind::ConstantsSplit, grid, seed);
            let mut coeffs = || -> Vec<f64> { (0..6).map(|_| rng.gen_range(-0.3..0.3)).collect() };
            let (cu, cv) = (coeffs(), coeffs());
            let wobble = |c: &[f64], t: f64| {
                1.0 + c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * 2.0 * t).cos()).sum::<f64>() / 2.0
            };
            PairState {
                u: ReducedProfile::from_vec_unchecked(
                    base.u.values().iter().zip(grid.nodes()).map(|(x, &t)| x * wobble(&cu, t)).collect(),
                ),
                v: ReducedProfile::from_vec_unchecked(
                    base.v.values().iter().zip(grid.nodes()).map(|(x, &t)| x * wobble(&cv, t)).collect(),
                ),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Generic projected descent.

/// Descent data at a point: an ascent direction in the working metric, the
/// matching covector (so `covector . direction` is the squared metric norm),
/// and the `h1` norm of the tangent gradient used for the stopping test.
struct Tangent<P> {
    dir: P,
    dual: P,
    norm: f64,
}

trait Constrained {
    type Point: Clone;
    fn retract(&self, p: &Self::Point) -> Result<Self::Point>;
    fn energy(&self, p: &Self::Point) -> Result<f64>;
    fn tangent(&self, p: &Self::Point) -> Result<Tangent<Self::Point>>;
    /// Euclidean pairing of nodal vectors.
    fn dot(&self, a: &Self::Point, b: &Self::Point) -> f64;
    fn axpy(&self, p: &Self::Point, s: f64, d: &Self::Point) -> Self::Point;
    fn check_collapse(&self, p: &Self::Point, iteration: usize) -> Result<()>;
    fn accept(&self, _iteration: usize, _p: &Self::Point, _energy: f64, _grad_norm: f64) {}
}

struct Descent<P> {
    point: P,
    energy: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

fn descend<C: Constrained>(prob: &C, init: &C::Point, opts: &SolveOptions) -> Result<Descent<C::Point>> {
    opts.validate()?;
    let mut x = prob.retract(init)?;
    prob.check_collapse(&x, 0)?;
    let mut e = prob.energy(&x)?;
    let mut g = prob.tangent(&x)?;
    prob.accept(0, &x, e, g.norm);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        if g.norm <= opts.grad_tol {
            return Ok(Descent { point: x, energy: e, grad_norm: g.norm, iterations, converged: true });
        }
        let slope = prob.dot(&g.dual, &g.dir);
        let mut trial = None;
        let mut a = step;
        for _ in 0..MAX_BACKTRACKS {
            if let Ok(y) = prob.retract(&prob.axpy(&x, -a, &g.dir)) {
                if let Ok(ey) = prob.energy(&y) {
                    let armijo = ey <= e - opts.armijo_slope * a * slope;
                    // near the tolerance the energy decrease drops below roundoff;
                    // accept then on gradient decrease with a flat energy
                    let flat = (ey - e).abs() <= 64.0 * f64::EPSILON * e.abs();
                    if armijo || flat {
                        if let Ok(gy) = prob.tangent(&y) {
                            if armijo || gy.norm < g.norm {
                                trial = Some((y, ey, gy));
                                break;
                            }
                        }
                    }
                }
            }
            a *= opts.armijo_backtrack;
            if a < MIN_STEP {
                break;
            }
        }
        let Some((y, ey, gy)) = trial else {
            log::debug!("line search stalled at iteration {iterations}, |grad|={:e}", g.norm);
            break;
        };
        iterations += 1;
        prob.check_collapse(&y, iterations)?;
        // Barzilai-Borwein (short) step from the accepted displacement
        let s = prob.axpy(&y, -1.0, &x);
        let dd = prob.axpy(&gy.dual, -1.0, &g.dual);
        let dz = prob.axpy(&gy.dir, -1.0, &g.dir);
        let sy = prob.dot(&s, &dd);
        let yy = prob.dot(&dd, &dz);
        step = if sy > 0.0 && yy > 0.0 { (sy / yy).clamp(MIN_STEP, MAX_STEP) } else { (2.0 * a).min(MAX_STEP) };
        x = y;
        e = ey;
        g = gy;
        prob.accept(iterations, &x, e, g.norm);
    }
    let converged = g.norm <= opts.grad_tol;
    Ok(Descent { point: x, energy: e, grad_norm: g.norm, iterations, converged })
}

fn h1_tangent(grid: &ReducedGrid, dir: ReducedProfile) -> Tangent<ReducedProfile> {
    let mut dual = vec![0.0; dir.len()];
    grid.apply_h1(dir.values(), &mut dual);
    let norm = grid.h1_slices(dir.values(), dir.values()).max(0.0).sqrt();
    Tangent { dir, dual: ReducedProfile::from_vec_unchecked(dual), norm }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Pair problem.

struct PairProblem<'a, F: FnMut(&Iterate)> {
    cp: &'a CouplingParams,
    grid: &'a ReducedGrid,
    positive: bool,
    bounds: (f64, f64),
    observer: std::cell::RefCell<F>,
}

impl<F: FnMut(&Iterate)> Constrained for PairProblem<'_, F> {
    type Point = PairState;

    fn retract(&self, p: &PairState) -> Result<PairState> {
        let p = if self.positive { p.abs() } else { p.clone() };
        let (s, t) = nehari_project(&p, self.cp, self.grid)?;
        Ok(p.scaled(s, t))
    }
    fn energy(&self, p: &PairState) -> Result<f64> {
        functional::energy(p, self.cp, self.grid)
    }
    fn tangent(&self, p: &PairState) -> Result<Tangent<PairState>> {
        let norm = functional::pair_norm(&tangent_split(p, self.cp, self.grid)?.tangent, self.grid);
        let (dir, dual) = preconditioned_tangent(p, self.cp, self.grid)?;
        Ok(Tangent { dir, dual, norm })
    }
    fn dot(&self, a: &PairState, b: &PairState) -> f64 {
        dot(a.u.values(), b.u.values()) + dot(a.v.values(), b.v.values())
    }
    fn axpy(&self, p: &PairState, s: f64, d: &PairState) -> PairState {
        p.axpy(s, d)
    }
    fn check_collapse(&self, p: &PairState, iteration: usize) -> Result<()> {
        let pu = self.grid.h1_slices(p.u.values(), p.u.values());
        let pv = self.grid.h1_slices(p.v.values(), p.v.values());
        check_norm("u", pu, self.bounds.0, iteration)?;
        check_norm("v", pv, self.bounds.1, iteration)
    }
    fn accept(&self, iteration: usize, p: &PairState, energy: f64, grad_norm: f64) {
        (self.observer.borrow_mut())(&Iterate { iteration, pair: p, energy, grad_norm });
    }
}

fn check_norm(component: &'static str, norm_sq: f64, bound: f64, iteration: usize) -> Result<()> {
    let threshold = COLLAPSE_FRACTION * bound;
    if !(norm_sq >= threshold) {
        return Err(Error::Collapse { component, iteration, norm_sq, threshold });
    }
    Ok(())
}

fn projection_to_collapse(e: Error) -> Error {
    match e {
        Error::Degenerate(_) => Error::Collapse { component: "u/v", iteration: 0, norm_sq: 0.0, threshold: 0.0 },
        other => other,
    }
}

/// Minimizes `E` over the symmetric Nehari set starting from `init`.
pub fn minimize_nehari(
    init: &PairState,
    cp: &CouplingParams,
    grid: &ReducedGrid,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    minimize_nehari_observed(init, cp, grid, opts, |_| {})
}

/// As [`minimize_nehari`], calling `observer` on the initial projected point
/// and on every accepted iterate.
pub fn minimize_nehari_observed<F: FnMut(&Iterate)>(
    init: &PairState,
    cp: &CouplingParams,
    grid: &ReducedGrid,
    opts: &SolveOptions,
    observer: F,
) -> Result<SolveResult> {
    let dim = grid.params().dim;
    cp.validate(dim)?;
    if !(cp.lambda < 0.0) {
        return Err(Error::InvalidParams(format!("competitive solve needs lambda < 0, got {}", cp.lambda)));
    }
    init.check_grid(grid)?;
    let prob = PairProblem {
        cp,
        grid,
        positive: opts.positivity_enforced,
        bounds: (nehari_norm_bound(cp.mu1, dim)?, nehari_norm_bound(cp.mu2, dim)?),
        observer: std::cell::RefCell::new(observer),
    };
    let d = descend(&prob, init, opts).map_err(projection_to_collapse)?;
    let split = tangent_split(&d.point, cp, grid)?;
    let full_grad_norm = functional::pair_norm(&split.full, grid);
    let residuals = PairIntegrals::compute(&d.point, cp, grid)?.residuals(cp);
    let (s, t) = split.multipliers;
    let converged =
        d.converged && s.abs() <= MULTIPLIER_TOL && t.abs() <= MULTIPLIER_TOL && full_grad_norm <= 10.0 * opts.grad_tol;
    Ok(SolveResult {
        pair: d.point,
        energy: d.energy,
        grad_norm: d.grad_norm,
        full_grad_norm,
        multipliers: split.multipliers,
        iterations: d.iterations,
        converged,
        residuals,
    })
}

// ---------------------------------------------------------------------------
// Single component (v frozen at 0).

struct SingleProblem<'a> {
    mu: f64,
    grid: &'a ReducedGrid,
    positive: bool,
    bound: f64,
}

impl Constrained for SingleProblem<'_> {
    type Point = ReducedProfile;

    fn retract(&self, p: &ReducedProfile) -> Result<ReducedProfile> {
        let p = if self.positive { p.map(f64::abs) } else { p.clone() };
        let s = single_project(&p, self.mu, self.grid)?;
        Ok(p.scaled(s))
    }
    fn energy(&self, p: &ReducedProfile) -> Result<f64> {
        single_energy(p, self.mu, self.grid)
    }
    fn tangent(&self, p: &ReducedProfile) -> Result<Tangent<ReducedProfile>> {
        Ok(h1_tangent(self.grid, single_tangent_split(p, self.mu, self.grid)?.1))
    }
    fn dot(&self, a: &ReducedProfile, b: &ReducedProfile) -> f64 {
        dot(a.values(), b.values())
    }
    fn axpy(&self, p: &ReducedProfile, s: f64, d: &ReducedProfile) -> ReducedProfile {
        p.axpy(s, d)
    }
    fn check_collapse(&self, p: &ReducedProfile, iteration: usize) -> Result<()> {
        check_norm("u", self.grid.h1_slices(p.values(), p.values()), self.bound, iteration)
    }
}

fn single_energy(u: &ReducedProfile, mu: f64, grid: &ReducedGrid) -> Result<f64> {
    let w = CouplingParams { mu1: mu, mu2: mu, ..CouplingParams::symmetric(grid.params().dim, 0.0) };
    // with w >= 0 the limit functional is the single-equation energy
    limit_energy(&u.map(f64::abs), &w, grid)
}

/// Minimizes the single-equation energy `h1(u,u)/2 - mu1 int |u|^{2*}/2*`
/// over its Nehari set; the returned pair has `v = 0`.
pub fn minimize_single(init: &ReducedProfile, mu: f64, grid: &ReducedGrid, opts: &SolveOptions) -> Result<SolveResult> {
    grid.check_len(init.len())?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
    }
    let dim = grid.params().dim;
    let prob = SingleProblem { mu, grid, positive: opts.positivity_enforced, bound: nehari_norm_bound(mu, dim)? };
    let d = descend(&prob, init, opts).map_err(projection_to_collapse)?;
    let (full, _, s) = single_tangent_split(&d.point, mu, grid)?;
    let full_grad_norm = grid.h1_slices(full.values(), full.values()).sqrt();
    let crit = grid.params().critical_exponent();
    let pu = grid.h1_slices(d.point.values(), d.point.values());
    let a: f64 = d.point.values().iter().zip(grid.weights()).map(|(x, w)| w * x.abs().powf(crit)).sum();
    let converged = d.converged && s.abs() <= MULTIPLIER_TOL && full_grad_norm <= 10.0 * opts.grad_tol;
    Ok(SolveResult {
        pair: PairState { v: ReducedProfile::zeros(grid), u: d.point },
        energy: d.energy,
        grad_norm: d.grad_norm,
        full_grad_norm,
        multipliers: (s, 0.0),
        iterations: d.iterations,
        converged,
        residuals: NehariResiduals { f_val: pu - mu * a, h_val: 0.0 },
    })
}

// ---------------------------------------------------------------------------
// Limit problem.

struct LimitProblem<'a> {
    cp: &'a CouplingParams,
    grid: &'a ReducedGrid,
    bounds: (f64, f64),
}

impl Constrained for LimitProblem<'_> {
    type Point = ReducedProfile;

    fn retract(&self, p: &ReducedProfile) -> Result<ReducedProfile> {
        limit_project(p, self.cp, self.grid)
    }
    fn energy(&self, p: &ReducedProfile) -> Result<f64> {
        limit_energy(p, self.cp, self.grid)
    }
    fn tangent(&self, p: &ReducedProfile) -> Result<Tangent<ReducedProfile>> {
        Ok(h1_tangent(self.grid, limit_tangent_gradient(p, self.cp, self.grid)?))
    }
    fn dot(&self, a: &ReducedProfile, b: &ReducedProfile) -> f64 {
        dot(a.values(), b.values())
    }
    fn axpy(&self, p: &ReducedProfile, s: f64, d: &ReducedProfile) -> ReducedProfile {
        p.axpy(s, d)
    }
    fn check_collapse(&self, p: &ReducedProfile, iteration: usize) -> Result<()> {
        let (wp, wm) = (p.positive_part(), p.negative_part());
        check_norm("w+", self.grid.h1_slices(wp.values(), wp.values()), self.bounds.0, iteration)?;
        check_norm("w-", self.grid.h1_slices(wm.values(), wm.values()), self.bounds.1, iteration)
    }
}

/// Minimizes the limit functional `J` over the set where `w+` and `w-` both
/// satisfy their single-equation Nehari identities.
pub fn minimize_limit(
    init_w: &ReducedProfile,
    cp: &CouplingParams,
    grid: &ReducedGrid,
    opts: &SolveOptions,
) -> Result<LimitResult> {
    grid.check_len(init_w.len())?;
    let dim = grid.params().dim;
    cp.validate(dim)?;
    if init_w.positive_part().is_zero() || init_w.negative_part().is_zero() {
        return Err(Error::Collapse { component: "w", iteration: 0, norm_sq: 0.0, threshold: 0.0 });
    }
    let prob = LimitProblem { cp, grid, bounds: (nehari_norm_bound(cp.mu1, dim)?, nehari_norm_bound(cp.mu2, dim)?) };
    let opts = SolveOptions { positivity_enforced: false, ..*opts };
    let d = descend(&prob, init_w, &opts).map_err(|e| match e {
        Error::Degenerate(_) => Error::Collapse { component: "w", iteration: 0, norm_sq: 0.0, threshold: 0.0 },
        other => other,
    })?;
    let residuals = limit_residuals(&d.point, cp, grid)?;
    Ok(LimitResult {
        w: d.point,
        energy: d.energy,
        grad_norm: d.grad_norm,
        iterations: d.iterations,
        converged: d.converged,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{nehari_infimum, overlap};
    use crate::geometry::{sobolev_constant, ModelParams};

    fn grid(dim: usize, m: usize, cells: usize) -> ReducedGrid {
        ReducedGrid::new(&ModelParams::new(dim, m, dim + 1 - m, cells).unwrap()).unwrap()
    }

    #[test]
    fn bumps_have_zero_overlap() {
        let g = grid(4, 2, 256);
        let p = initial_guess(InitKind::Bumps, &g, 0);
        let cp = CouplingParams::symmetric(4, -1.0);
        assert_eq!(overlap(&p, &cp, &g).unwrap(), 0.0);
        assert!(!p.u.is_zero() && !p.v.is_zero());
    }

    #[test]
    fn random_init_is_deterministic() {
        let g = grid(4, 2, 64);
        let a = initial_guess(InitKind::Random, &g, 7);
        let b = initial_guess(InitKind::Random, &g, 7);
        let c = initial_guess(InitKind::Random, &g, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let s = initial_guess(InitKind::ConstantsSplit, &g, 0);
        assert!(!s.u.is_zero() && !s.v.is_zero());
    }

    #[test]
    fn single_mode_finds_constant_level() {
        let g = grid(4, 2, 256);
        let init = initial_guess(InitKind::Random, &g, 3).u.map(|x| x + 0.3);
        let res = minimize_single(&init, 1.0, &g, &SolveOptions::default()).unwrap();
        assert!(res.converged, "{res:?}");
        let s = sobolev_constant(4).unwrap();
        let level = s * s / 4.0;
        assert!((res.energy - level).abs() / level < 1e-3, "{} vs {level}", res.energy);
    }

    #[test]
    fn pair_solve_exceeds_infimum_and_descends() {
        let g = grid(4, 2, 256);
        let cp = CouplingParams::symmetric(4, -1.0);
        let mut energies = Vec::new();
        let res =
            minimize_nehari_observed(&initial_guess(InitKind::Bumps, &g, 0), &cp, &g, &SolveOptions::default(), |it| {
                energies.push(it.energy)
            })
            .unwrap();
        assert!(res.converged, "{:?}", (res.grad_norm, res.full_grad_norm, res.multipliers, res.iterations));
        assert!(res.energy > nehari_infimum(&cp, 4).unwrap());
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
        assert!(res.pair.u.values().iter().chain(res.pair.v.values()).all(|&x| x >= 0.0));
        assert!(res.residuals.max_abs() < 1e-8 * res.energy);
    }

    #[test]
    fn nonnegative_lambda_rejected() {
        let g = grid(4, 2, 64);
        let cp = CouplingParams::symmetric(4, 0.0);
        let err = minimize_nehari(&initial_guess(InitKind::Bumps, &g, 0), &cp, &g, &SolveOptions::default());
        assert!(matches!(err, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn limit_rejects_one_signed_start() {
        let g = grid(4, 2, 64);
        let cp = CouplingParams::symmetric(4, -1.0);
        let w = ReducedProfile::constant(&g, 1.0);
        assert!(matches!(minimize_limit(&w, &cp, &g, &SolveOptions::default()), Err(Error::Collapse { .. })));
    }

    #[test]
    fn bad_options_rejected() {
        let o = SolveOptions { armijo_slope: 1.5, ..SolveOptions::default() };
        assert!(o.validate().is_err());
        let o = SolveOptions { armijo_backtrack: 0.0, ..SolveOptions::default() };
        assert!(o.validate().is_err());
    }
}
