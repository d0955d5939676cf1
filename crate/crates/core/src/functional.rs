//! Discrete energy of the coupled system, its Nehari residuals and
//! `H^1`-Riesz gradients, fiberwise Nehari projections, and the
//! sign-changing limit functional.
//!
//! For a pair `(u, v)` with
//!
//! ```text
//! P = |u|^2, Q = |v|^2            (h1_form)
//! A = int |u|^{2*}, B = int |v|^{2*}, C = int |u|^alpha |v|^beta
//! ```
//!
//! the energy is `E = (P + Q)/2 - (mu1 A + mu2 B)/2* - lambda C` and the
//! residuals are `f = P - mu1 A - lambda alpha C`, `h = Q - mu2 B - lambda beta C`.

use crate::error::{Error, Result};
use crate::geometry::{critical_exponent, sobolev_level, ReducedGrid, ReducedProfile};

/// Coefficients of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub mu1: f64,
    pub mu2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl CouplingParams {
    pub const EXPONENT_SUM_TOL: f64 = 1e-12;

    pub fn new(mu1: f64, mu2: f64, alpha: f64, beta: f64, lambda: f64, dim: usize) -> Result<Self> {
        let cp = Self { mu1, mu2, alpha, beta, lambda };
        cp.validate(dim)?;
        Ok(cp)
    }

    /// `mu1 = mu2 = 1`, `alpha = beta = 2* / 2`.
    pub fn symmetric(dim: usize, lambda: f64) -> Self {
        let half = critical_exponent(dim) / 2.0;
        Self { mu1: 1.0, mu2: 1.0, alpha: half, beta: half, lambda }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.mu1 > 0.0 && self.mu2 > 0.0) {
            return Err(Error::InvalidParams(format!("mu1 = {}, mu2 = {} must be positive", self.mu1, self.mu2)));
        }
        for (name, e) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(e > 1.0 && e <= 2.0) {
                return Err(Error::InvalidParams(format!("{name} = {e} outside (1, 2]")));
            }
        }
        let target = critical_exponent(dim);
        if (self.alpha + self.beta - target).abs() > Self::EXPONENT_SUM_TOL {
            return Err(Error::InvalidParams(format!("alpha + beta = {} but 2* = {target}", self.alpha + self.beta)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParams("lambda must be finite".into()));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    /// Exchange the roles of the two components.
    pub fn swapped(&self) -> Self {
        Self { mu1: self.mu2, mu2: self.mu1, alpha: self.beta, beta: self.alpha, lambda: self.lambda }
    }
}

/// Optimization variable: a pair of arc profiles on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub u: ReducedProfile,
    pub v: ReducedProfile,
}

impl PairState {
    pub fn new(u: ReducedProfile, v: ReducedProfile) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Dimension { expected: u.len(), got: v.len() });
        }
        Ok(Self { u, v })
    }

    pub fn check_grid(&self, grid: &ReducedGrid) -> Result<()> {
        grid.check_len(self.u.len())?;
        grid.check_len(self.v.len())
    }

    pub fn scaled(&self, s: f64, t: f64) -> Self {
        Self { u: self.u.scaled(s), v: self.v.scaled(t) }
    }

    pub fn abs(&self) -> Self {
        Self { u: self.u.map(f64::abs), v: self.v.map(f64::abs) }
    }

    /// `(u, v) -> (v, u)`.
    pub fn swapped(&self) -> Self {
        Self { u: self.v.clone(), v: self.u.clone() }
    }

    /// `(u, v) -> (-v, -u)`, the involution that pairs `(u, -u)` with itself.
    pub fn swapped_negated(&self) -> Self {
        Self { u: self.v.scaled(-1.0), v: self.u.scaled(-1.0) }
    }

    pub fn axpy(&self, s: f64, dir: &Self) -> Self {
        Self { u: self.u.axpy(s, &dir.u), v: self.v.axpy(s, &dir.v) }
    }

    #[cfg(test)]
    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut x = self.u.values().to_vec();
        x.extend_from_slice(self.v.values());
        x
    }
}

/// `f = dE/du [u]` and `h = dE/dv [v]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NehariResiduals {
    pub f_val: f64,
    pub h_val: f64,
}

impl NehariResiduals {
    pub fn max_abs(&self) -> f64 {
        self.f_val.abs().max(self.h_val.abs())
    }
}

#[inline]
pub(crate) fn abs_pow(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if e == 2.0 {
        a * a
    } else if e == 4.0 {
        let a2 = a * a;
        a2 * a2
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(e)
    }
}

/// `|x|^{e-2} x`, taken as 0 at `x = 0`.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if e == 2.0 {
        x
    } else if e == 4.0 {
        x * x * x
    } else if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e - 1.0)
    }
}

/// The scalar integrals that determine `E`, `f` and `h` along the fiber
/// `(s u, t v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairIntegrals {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PairIntegrals {
    pub fn compute(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<Self> {
        pair.check_grid(grid)?;
        let crit = grid.params().critical_exponent();
        let (u, v) = (pair.u.values(), pair.v.values());
        let w = grid.weights();
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for i in 0..u.len() {
            a += w[i] * abs_pow(u[i], crit);
            b += w[i] * abs_pow(v[i], crit);
            c += w[i] * abs_pow(u[i], cp.alpha) * abs_pow(v[i], cp.beta);
        }
        Ok(Self { p: grid.h1_slices(u, u), q: grid.h1_slices(v, v), a, b, c })
    }

    pub fn energy(&self, cp: &CouplingParams, crit: f64) -> f64 {
        0.5 * (self.p + self.q) - (cp.mu1 * self.a + cp.mu2 * self.b) / crit - cp.lambda * self.c
    }

    pub fn residuals(&self, cp: &CouplingParams) -> NehariResiduals {
        NehariResiduals {
            f_val: self.p - cp.mu1 * self.a - cp.lambda * cp.alpha * self.c,
            h_val: self.q - cp.mu2 * self.b - cp.lambda * cp.beta * self.c,
        }
    }

    /// Integrals of `(s u, t v)`.
    pub fn scaled(&self, s: f64, t: f64, cp: &CouplingParams, crit: f64) -> Self {
        Self {
            p: s * s * self.p,
            q: t * t * self.q,
            a: s.powf(crit) * self.a,
            b: t.powf(crit) * self.b,
            c: s.powf(cp.alpha) * t.powf(cp.beta) * self.c,
        }
    }

    /// The matrix `(a_ij)` of the fiber Hessian at a Nehari point:
    /// `a11 = (2 - 2*) mu1 A + lambda alpha (2 - alpha) C`,
    /// `a12 = a21 = -lambda alpha beta C`, and `a22` analogously.
    pub fn nehari_matrix(&self, cp: &CouplingParams, crit: f64) -> [[f64; 2]; 2] {
        let (al, be, la) = (cp.alpha, cp.beta, cp.lambda);
        let a11 = (2.0 - crit) * cp.mu1 * self.a + la * al * (2.0 - al) * self.c;
        let a22 = (2.0 - crit) * cp.mu2 * self.b + la * be * (2.0 - be) * self.c;
        let a12 = -la * al * be * self.c;
        [[a11, a12], [a12, a22]]
    }
}

/// Discrete energy `E(u, v)`.
pub fn energy(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<f64> {
    let ints = PairIntegrals::compute(pair, cp, grid)?;
    Ok(ints.energy(cp, grid.params().critical_exponent()))
}

pub fn residuals(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<NehariResiduals> {
    Ok(PairIntegrals::compute(pair, cp, grid)?.residuals(cp))
}

/// `int |u|^alpha |v|^beta`.
pub fn overlap(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<f64> {
    Ok(PairIntegrals::compute(pair, cp, grid)?.c)
}

/// Euclidean derivative of the discrete energy with respect to the nodal
/// values of `u` and `v`.
fn energy_derivative(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> (Vec<f64>, Vec<f64>) {
    let crit = grid.params().critical_exponent();
    let (u, v) = (pair.u.values(), pair.v.values());
    let w = grid.weights();
    let mut du = vec![0.0; u.len()];
    let mut dv = vec![0.0; v.len()];
    grid.apply_h1(u, &mut du);
    grid.apply_h1(v, &mut dv);
    for i in 0..u.len() {
        let cu = cp.lambda * cp.alpha * signed_pow(u[i], cp.alpha) * abs_pow(v[i], cp.beta);
        let cv = cp.lambda * cp.beta * abs_pow(u[i], cp.alpha) * signed_pow(v[i], cp.beta);
        du[i] -= w[i] * (cp.mu1 * signed_pow(u[i], crit) + cu);
        dv[i] -= w[i] * (cp.mu2 * signed_pow(v[i], crit) + cv);
    }
    (du, dv)
}

fn riesz(grid: &ReducedGrid, mut x: Vec<f64>) -> ReducedProfile {
    grid.solve_h1_in_place(&mut x);
    ReducedProfile::from_vec_unchecked(x)
}

/// `<(u1, v1), (u2, v2)> = h1(u1, u2) + h1(v1, v2)`.
pub fn pair_inner(a: &PairState, b: &PairState, grid: &ReducedGrid) -> f64 {
    grid.h1_slices(a.u.values(), b.u.values()) + grid.h1_slices(a.v.values(), b.v.values())
}

pub fn pair_norm(a: &PairState, grid: &ReducedGrid) -> f64 {
    pair_inner(a, a, grid).max(0.0).sqrt()
}

/// Riesz representative of `E'` in the `h1_form` inner product on pairs.
pub fn gradient(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<PairState> {
    pair.check_grid(grid)?;
    let (du, dv) = energy_derivative(pair, cp, grid);
    Ok(PairState { u: riesz(grid, du), v: riesz(grid, dv) })
}

/// Euclidean derivatives of `f` and `h`, as `(df/du, df/dv, dh/du, dh/dv)`.
fn constraint_derivatives(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> [Vec<f64>; 4] {
    let crit = grid.params().critical_exponent();
    let (u, v) = (pair.u.values(), pair.v.values());
    let w = grid.weights();
    let n = u.len();
    let (mut fu, mut fv, mut hu, mut hv) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    grid.apply_h1(u, &mut fu);
    grid.apply_h1(v, &mut hv);
    let (al, be, la) = (cp.alpha, cp.beta, cp.lambda);
    for i in 0..n {
        let su = signed_pow(u[i], al) * abs_pow(v[i], be);
        let sv = abs_pow(u[i], al) * signed_pow(v[i], be);
        fu[i] = 2.0 * fu[i] - w[i] * (crit * cp.mu1 * signed_pow(u[i], crit) + la * al * al * su);
        fv[i] = -w[i] * la * al * be * sv;
        hu[i] = -w[i] * la * al * be * su;
        hv[i] = 2.0 * hv[i] - w[i] * (crit * cp.mu2 * signed_pow(v[i], crit) + la * be * be * sv);
    }
    [fu, fv, hu, hv]
}

/// Riesz representatives of `f'` and `h'`.
fn constraint_gradients(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> (PairState, PairState) {
    let [fu, fv, hu, hv] = constraint_derivatives(pair, cp, grid);
    (PairState { u: riesz(grid, fu), v: riesz(grid, fv) }, PairState { u: riesz(grid, hu), v: riesz(grid, hv) })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tangent descent direction in the variable metric
/// `G = A + diag(W * d^2/du^2 (-lambda int |u|^alpha |v|^beta))` per component,
/// which absorbs the stiffness of the coupling term for large `|lambda|`.
///
/// Returns `(direction, covector)`: the `G`-Riesz representative of the
/// restricted derivative and the restricted derivative itself, so that
/// `covector . direction` is the squared `G`-norm.
pub(crate) fn preconditioned_tangent(
    pair: &PairState,
    cp: &CouplingParams,
    grid: &ReducedGrid,
) -> Result<(PairState, PairState)> {
    pair.check_grid(grid)?;
    let (u, v) = (pair.u.values(), pair.v.values());
    let w = grid.weights();
    let (al, be) = (cp.alpha, cp.beta);
    let neg = (-cp.lambda).max(0.0);
    let floor = |x: &[f64]| 1e-3 * x.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let (fu_floor, fv_floor) = (floor(u), floor(v));
    let mut gu = vec![0.0; u.len()];
    let mut gv = vec![0.0; v.len()];
    for i in 0..u.len() {
        gu[i] = w[i] * neg * al * (al - 1.0) * u[i].abs().max(fu_floor).powf(al - 2.0) * abs_pow(v[i], be);
        gv[i] = w[i] * neg * be * (be - 1.0) * v[i].abs().max(fv_floor).powf(be - 2.0) * abs_pow(u[i], al);
    }
    let solve = |g: &[f64], x: &[f64]| {
        let mut y = x.to_vec();
        grid.solve_shifted_in_place(g, &mut y);
        y
    };
    let (du, dv) = energy_derivative(pair, cp, grid);
    let [fu, fv, hu, hv] = constraint_derivatives(pair, cp, grid);
    let (zu, zv) = (solve(&gu, &du), solve(&gv, &dv));
    let (zfu, zfv) = (solve(&gu, &fu), solve(&gv, &fv));
    let (zhu, zhv) = (solve(&gu, &hu), solve(&gv, &hv));
    let g11 = dot(&fu, &zfu) + dot(&fv, &zfv);
    let g12 = dot(&fu, &zhu) + dot(&fv, &zhv);
    let g22 = dot(&hu, &zhu) + dot(&hv, &zhv);
    let r1 = dot(&du, &zfu) + dot(&dv, &zfv);
    let r2 = dot(&du, &zhu) + dot(&dv, &zhv);
    let det = g11 * g22 - g12 * g12;
    if !(det > 1e-14 * g11 * g22) {
        return Err(Error::DegenerateConstraint { det });
    }
    let s = (r1 * g22 - r2 * g12) / det;
    let t = (g11 * r2 - g12 * r1) / det;
    let comb = |a: &[f64], b: &[f64], c: &[f64]| -> ReducedProfile {
        ReducedProfile::from_vec_unchecked(a.iter().zip(b).zip(c).map(|((x, y), z)| x - s * y - t * z).collect())
    };
    Ok((
        PairState { u: comb(&zu, &zfu, &zhu), v: comb(&zv, &zfv, &zhv) },
        PairState { u: comb(&du, &fu, &hu), v: comb(&dv, &fv, &hv) },
    ))
}

/// Decomposition `grad E = tangent + s grad f + t grad h`.
#[derive(Debug, Clone)]
pub struct TangentSplit {
    pub full: PairState,
    pub tangent: PairState,
    pub multipliers: (f64, f64),
}

/// Gradient of `E` restricted to the Nehari set: the full gradient minus
/// its `h1`-orthogonal projection onto `span{grad f, grad h}`.
pub fn tangent_gradient(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<PairState> {
    Ok(tangent_split(pair, cp, grid)?.tangent)
}

pub fn tangent_split(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<TangentSplit> {
    let full = gradient(pair, cp, grid)?;
    let (gf, gh) = constraint_gradients(pair, cp, grid);
    let g11 = pair_inner(&gf, &gf, grid);
    let g12 = pair_inner(&gf, &gh, grid);
    let g22 = pair_inner(&gh, &gh, grid);
    let r1 = pair_inner(&full, &gf, grid);
    let r2 = pair_inner(&full, &gh, grid);
    let det = g11 * g22 - g12 * g12;
    if !(det > 1e-14 * g11 * g22) {
        return Err(Error::DegenerateConstraint { det });
    }
    let s = (r1 * g22 - r2 * g12) / det;
    let t = (g11 * r2 - g12 * r1) / det;
    let tangent = full.axpy(-s, &gf).axpy(-t, &gh);
    Ok(TangentSplit { full, tangent, multipliers: (s, t) })
}

/// Lagrange multipliers of the natural-constraint system: the solution of
/// `a11 s + a12 t = <grad E, (u, 0)> - <T, (u, 0)>` etc., where `T` is the
/// tangent part. At a free critical point both vanish.
pub fn natural_constraint_multipliers(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<(f64, f64)> {
    Ok(tangent_split(pair, cp, grid)?.multipliers)
}

/// Riesz gradient of the single-equation energy
/// `h1(u, u)/2 - mu int |u|^{2*} / 2*` and its part tangent to the
/// single-equation Nehari set. Returns `(full, tangent, multiplier)`.
pub fn single_tangent_split(
    u: &ReducedProfile,
    mu: f64,
    grid: &ReducedGrid,
) -> Result<(ReducedProfile, ReducedProfile, f64)> {
    grid.check_len(u.len())?;
    let crit = grid.params().critical_exponent();
    let x = u.values();
    let n = x.len();
    let (mut d, mut c) = (vec![0.0; n], vec![0.0; n]);
    grid.apply_h1(x, &mut d);
    for i in 0..n {
        let nl = grid.weights()[i] * mu * signed_pow(x[i], crit);
        c[i] = 2.0 * d[i] - crit * nl;
        d[i] -= nl;
    }
    let full = riesz(grid, d);
    let gc = riesz(grid, c);
    let g = grid.h1_slices(gc.values(), gc.values());
    if !(g > 0.0) {
        return Err(Error::DegenerateConstraint { det: g });
    }
    let s = grid.h1_slices(full.values(), gc.values()) / g;
    let tangent = full.axpy(-s, &gc);
    Ok((full, tangent, s))
}

pub const PROJECT_MAX_ITERS: usize = 200;
pub const PROJECT_TOL: f64 = 1e-13;

/// `s > 0` with `s u` on the single-equation Nehari set:
/// `s^{2*-2} = h1(u, u) / (mu int |u|^{2*})`.
pub fn single_project(u: &ReducedProfile, mu: f64, grid: &ReducedGrid) -> Result<f64> {
    grid.check_len(u.len())?;
    let crit = grid.params().critical_exponent();
    let p = grid.h1_slices(u.values(), u.values());
    let a: f64 = u.values().iter().zip(grid.weights()).map(|(x, w)| w * abs_pow(*x, crit)).sum();
    if !(p > 0.0 && a > 0.0) || !(mu > 0.0) {
        return Err(Error::Degenerate("single_project needs a nonzero profile and mu > 0".into()));
    }
    Ok((p / (mu * a)).powf(1.0 / (crit - 2.0)))
}

/// Unique `(s, t)` in `(0, inf)^2` with `(s u, t v)` on the Nehari set.
///
/// Newton in `(ln s, ln t)` on `f(su, tv)/s^2 = 0 = h(su, tv)/t^2`, started
/// at the decoupled closed forms and damped on the residual norm.
pub fn nehari_project(pair: &PairState, cp: &CouplingParams, grid: &ReducedGrid) -> Result<(f64, f64)> {
    let ints = PairIntegrals::compute(pair, cp, grid)?;
    project_integrals(&ints, cp, grid.params().critical_exponent())
}

pub(crate) fn project_integrals(ints: &PairIntegrals, cp: &CouplingParams, crit: f64) -> Result<(f64, f64)> {
    let PairIntegrals { p, q, a, b, c } = *ints;
    if !(p > 0.0 && q > 0.0 && a > 0.0 && b > 0.0) {
        return Err(Error::Degenerate(format!(
            "Nehari projection needs both components nonzero (|u|^2={p:e}, |v|^2={q:e})"
        )));
    }
    let k = crit - 2.0;
    let (al, be, la) = (cp.alpha, cp.beta, cp.lambda);
    // F1 = 1 - mu1 A/P e^{kx} - la al C/P e^{(al-2)x + be y}
    let (ka, kb, kc1, kc2) = (cp.mu1 * a / p, cp.mu2 * b / q, la * al * c / p, la * be * c / q);
    let eval = |x: f64, y: f64| {
        let e1 = (k * x).exp();
        let e2 = (k * y).exp();
        let m1 = ((al - 2.0) * x + be * y).exp();
        let m2 = (al * x + (be - 2.0) * y).exp();
        let f = [1.0 - ka * e1 - kc1 * m1, 1.0 - kb * e2 - kc2 * m2];
        let jac = [
            [-k * ka * e1 - (al - 2.0) * kc1 * m1, -be * kc1 * m1],
            [-al * kc2 * m2, -k * kb * e2 - (be - 2.0) * kc2 * m2],
        ];
        (f, jac)
    };
    let mut x = -(ka.ln()) / k;
    let mut y = -(kb.ln()) / k;
    let norm = |f: [f64; 2]| f[0].abs().max(f[1].abs());
    let (mut f, mut jac) = eval(x, y);
    for _ in 0..PROJECT_MAX_ITERS {
        if norm(f) <= PROJECT_TOL {
            return Ok((x.exp(), y.exp()));
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det == 0.0 {
            break;
        }
        let dx = -(f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
        let dy = -(jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
        let mut step = 1.0;
        let current = norm(f);
        loop {
            // cap the log-step so s, t never change by more than e^2 at once
            let scale = (2.0 / dx.abs().max(dy.abs())).min(1.0) * step;
            let (nx, ny) = (x + scale * dx, y + scale * dy);
            let (nf, nj) = eval(nx, ny);
            if norm(nf) < current || step < 1e-6 {
                x = nx;
                y = ny;
                f = nf;
                jac = nj;
                break;
            }
            step *= 0.5;
        }
    }
    if norm(f) <= 1e3 * PROJECT_TOL {
        return Ok((x.exp(), y.exp()));
    }
    Err(Error::Convergence { iterations: PROJECT_MAX_ITERS, residual: norm(f) })
}

/// Lower bound on `h1(u, u)` for `(u, v)` on the Nehari set:
/// `mu1^{-(N-2)/2} S^{N/2}`.
pub fn nehari_norm_bound(mu: f64, dim: usize) -> Result<f64> {
    Ok(mu.powf(-(dim as f64 - 2.0) / 2.0) * sobolev_level(dim)?)
}

/// Infimum of `E` over the full (unsymmetrized) Nehari set,
/// `(mu1^{-(N-2)/2} + mu2^{-(N-2)/2}) S^{N/2} / N`; never attained.
pub fn nehari_infimum(cp: &CouplingParams, dim: usize) -> Result<f64> {
    Ok((nehari_norm_bound(cp.mu1, dim)? + nehari_norm_bound(cp.mu2, dim)?) / dim as f64)
}

/// Lower bound for `det(a_ij)` at a Nehari point with overlap `C`:
/// `(2* - 2) c0 alpha beta (-lambda) C`, `c0 = min_i mu_i^{-(N-2)/2} S^{N/2}`.
pub fn determinant_bound(cp: &CouplingParams, dim: usize, overlap: f64) -> Result<f64> {
    let c0 = nehari_norm_bound(cp.mu1, dim)?.min(nehari_norm_bound(cp.mu2, dim)?);
    Ok((critical_exponent(dim) - 2.0) * c0 * cp.alpha * cp.beta * (-cp.lambda) * overlap)
}

// ---------------------------------------------------------------------------
// Limit problem: -Delta w = mu1 |w+|^{2*-2} w+ + mu2 |w-|^{2*-2} w-.

/// `J(w) = h1(w, w)/2 - (mu1 int |w+|^{2*} + mu2 int |w-|^{2*}) / 2*`.
pub fn limit_energy(w: &ReducedProfile, cp: &CouplingParams, grid: &ReducedGrid) -> Result<f64> {
    grid.check_len(w.len())?;
    let crit = grid.params().critical_exponent();
    let (plus, minus) = limit_power_integrals(w, grid);
    Ok(0.5 * grid.h1_slices(w.values(), w.values()) - (cp.mu1 * plus + cp.mu2 * minus) / crit)
}

fn limit_power_integrals(w: &ReducedProfile, grid: &ReducedGrid) -> (f64, f64) {
    let crit = grid.params().critical_exponent();
    let (mut plus, mut minus) = (0.0, 0.0);
    for (x, wt) in w.values().iter().zip(grid.weights()) {
        if *x > 0.0 {
            plus += wt * abs_pow(*x, crit);
        } else {
            minus += wt * abs_pow(*x, crit);
        }
    }
    (plus, minus)
}

/// Single-equation Nehari residuals of `w+` (with `mu1`) and `w-` (with `mu2`).
pub fn limit_residuals(w: &ReducedProfile, cp: &CouplingParams, grid: &ReducedGrid) -> Result<(f64, f64)> {
    grid.check_len(w.len())?;
    let (plus, minus) = limit_power_integrals(w, grid);
    let wp = w.positive_part();
    let wm = w.negative_part();
    Ok((
        grid.h1_slices(wp.values(), wp.values()) - cp.mu1 * plus,
        grid.h1_slices(wm.values(), wm.values()) - cp.mu2 * minus,
    ))
}

/// Riesz gradient of `J`.
pub fn limit_gradient(w: &ReducedProfile, cp: &CouplingParams, grid: &ReducedGrid) -> Result<ReducedProfile> {
    grid.check_len(w.len())?;
    let crit = grid.params().critical_exponent();
    let x = w.values();
    let mut d = vec![0.0; x.len()];
    grid.apply_h1(x, &mut d);
    for (i, di) in d.iter_mut().enumerate() {
        let mu = if x[i] > 0.0 { cp.mu1 } else { cp.mu2 };
        *di -= grid.weights()[i] * mu * signed_pow(x[i], crit);
    }
    Ok(riesz(grid, d))
}

/// Riesz gradient of `J` with the components along the gradients of the two
/// limit residuals removed.
pub fn limit_tangent_gradient(w: &ReducedProfile, cp: &CouplingParams, grid: &ReducedGrid) -> Result<ReducedProfile> {
    let full = limit_gradient(w, cp, grid)?;
    let crit = grid.params().critical_exponent();
    let x = w.values();
    let n = x.len();
    let wp = w.positive_part();
    let wm = w.negative_part();
    let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
    grid.apply_h1(wp.values(), &mut gp);
    grid.apply_h1(wm.values(), &mut gm);
    for i in 0..n {
        let wt = grid.weights()[i];
        if x[i] > 0.0 {
            gp[i] = 2.0 * gp[i] - crit * cp.mu1 * wt * signed_pow(x[i], crit);
            gm[i] = 0.0;
        } else if x[i] < 0.0 {
            gm[i] = 2.0 * gm[i] - crit * cp.mu2 * wt * signed_pow(x[i], crit);
            gp[i] = 0.0;
        } else {
            gp[i] = 0.0;
            gm[i] = 0.0;
        }
    }
    let gp = riesz(grid, gp);
    let gm = riesz(grid, gm);
    let ip = |a: &ReducedProfile, b: &ReducedProfile| grid.h1_slices(a.values(), b.values());
    let (g11, g12, g22) = (ip(&gp, &gp), ip(&gp, &gm), ip(&gm, &gm));
    let (r1, r2) = (ip(&full, &gp), ip(&full, &gm));
    let det = g11 * g22 - g12 * g12;
    if !(det > 1e-14 * g11 * g22) {
        return Err(Error::DegenerateConstraint { det });
    }
    let s = (r1 * g22 - r2 * g12) / det;
    let t = (g11 * r2 - g12 * r1) / det;
    Ok(full.axpy(-s, &gp).axpy(-t, &gm))
}

/// Rescales `w+` and `w-` separately onto the single-equation Nehari sets.
pub fn limit_project(w: &ReducedProfile, cp: &CouplingParams, grid: &ReducedGrid) -> Result<ReducedProfile> {
    let wp = w.positive_part();
    let wm = w.negative_part();
    let s = single_project(&wp, cp.mu1, grid).map_err(|_| Error::Degenerate("positive part of w vanished".into()))?;
    let t = single_project(&wm, cp.mu2, grid).map_err(|_| Error::Degenerate("negative part of w vanished".into()))?;
    Ok(ReducedProfile::from_vec_unchecked(w.values().iter().map(|&x| if x > 0.0 { s * x } else { t * x }).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sobolev_constant, sphere_area, ModelParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn grid(dim: usize, m: usize, cells: usize) -> ReducedGrid {
        ReducedGrid::new(&ModelParams::new(dim, m, dim + 1 - m, cells).unwrap()).unwrap()
    }

    fn random_profile(g: &ReducedGrid, rng: &mut ChaCha8Rng, offset: f64) -> ReducedProfile {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
        ReducedProfile::from_fn(g, |t| {
            offset + c[0] * (2.0 * t).cos() + c[1] * (3.0 * t).sin() + c[2] * t + c[3] * (5.0 * t).cos()
        })
    }

    #[test]
    fn constant_solution_energy_and_residual() {
        let g = grid(4, 2, 256);
        let cp = CouplingParams::symmetric(4, -1.0);
        let pair = PairState::new(ReducedProfile::constant(&g, 2f64.sqrt()), ReducedProfile::zeros(&g)).unwrap();
        let e = energy(&pair, &cp, &g).unwrap();
        let s = sobolev_constant(4).unwrap();
        assert_relative_eq!(e, 0.25 * s * s, max_relative = 1e-10);
        assert!((e - 26.32).abs() < 0.01);
        let r = residuals(&pair, &cp, &g).unwrap();
        assert!(r.f_val.abs() < 1e-10 * e);
        let grad = gradient(&pair, &cp, &g).unwrap();
        assert!(grad.u.values().iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn decoupled_energy_is_sum() {
        let g = grid(5, 3, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_profile(&g, &mut rng, 1.0);
        let v = random_profile(&g, &mut rng, 0.8);
        let cp = CouplingParams::symmetric(5, 0.0);
        let pair = PairState::new(u.clone(), v.clone()).unwrap();
        let zero = ReducedProfile::zeros(&g);
        let eu = energy(&PairState::new(u, zero.clone()).unwrap(), &cp, &g).unwrap();
        let ev = energy(&PairState::new(zero, v).unwrap(), &cp, &g).unwrap();
        assert_relative_eq!(energy(&pair, &cp, &g).unwrap(), eu + ev, max_relative = 1e-12);
    }

    #[test]
    fn disjoint_supports_have_no_coupling() {
        let g = grid(4, 2, 64);
        let u = ReducedProfile::from_fn(&g, |t| if t < FRAC_PI_4 - 0.05 { 1.0 + t } else { 0.0 });
        let v = ReducedProfile::from_fn(&g, |t| if t > FRAC_PI_4 + 0.05 { 2.0 - t } else { 0.0 });
        let pair = PairState::new(u.clone(), v.clone()).unwrap();
        let cp = CouplingParams::symmetric(4, -7.0);
        assert_eq!(overlap(&pair, &cp, &g).unwrap(), 0.0);
        let r = residuals(&pair, &cp, &g).unwrap();
        let single = residuals(&PairState::new(u.clone(), ReducedProfile::zeros(&g)).unwrap(), &cp, &g).unwrap();
        assert_eq!(r.f_val, single.f_val);

        let (s, t) = nehari_project(&pair, &cp, &g).unwrap();
        assert_relative_eq!(s, single_project(&u, 1.0, &g).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(t, single_project(&v, 1.0, &g).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn residual_scaling_polynomial() {
        let g = grid(5, 2, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cp = CouplingParams::symmetric(5, -2.0);
        let pair = PairState::new(random_profile(&g, &mut rng, 1.0), random_profile(&g, &mut rng, 1.0)).unwrap();
        let ints = PairIntegrals::compute(&pair, &cp, &g).unwrap();
        let crit = g.params().critical_exponent();
        for _ in 0..10 {
            let s: f64 = rng.gen_range(0.2..3.0);
            let t: f64 = rng.gen_range(0.2..3.0);
            let direct = residuals(&pair.scaled(s, t), &cp, &g).unwrap().f_val;
            let poly = s * s * ints.p
                - s.powf(crit) * ints.a
                - cp.lambda * cp.alpha * s.powf(cp.alpha) * t.powf(cp.beta) * ints.c;
            assert_relative_eq!(direct, poly, max_relative = 1e-10, epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = grid(4, 2, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cp = CouplingParams { mu1: 1.3, mu2: 0.7, alpha: 2.0, beta: 2.0, lambda: -3.0 };
        for _ in 0..5 {
            let p = PairState::new(random_profile(&g, &mut rng, 1.2), random_profile(&g, &mut rng, 0.9)).unwrap();
            let q = PairState::new(random_profile(&g, &mut rng, 0.0), random_profile(&g, &mut rng, 0.1)).unwrap();
            let eps = 1e-5;
            let fd = (energy(&p.axpy(eps, &q), &cp, &g).unwrap() - energy(&p.axpy(-eps, &q), &cp, &g).unwrap())
                / (2.0 * eps);
            let an = pair_inner(&gradient(&p, &cp, &g).unwrap(), &q, &g);
            assert_relative_eq!(fd, an, max_relative = 1e-6);
        }
    }

    #[test]
    fn gradient_equivariance_under_swap_negation() {
        let g = grid(5, 3, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cp = CouplingParams::symmetric(5, -1.5);
        let p = PairState::new(random_profile(&g, &mut rng, 1.0), random_profile(&g, &mut rng, -0.3)).unwrap();
        let lhs = gradient(&p.swapped_negated(), &cp, &g).unwrap();
        let rhs = gradient(&p, &cp, &g).unwrap().swapped_negated();
        for (a, b) in lhs.to_flat().iter().zip(rhs.to_flat()) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn projection_of_nehari_point_is_identity() {
        let g = grid(4, 2, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cp = CouplingParams::symmetric(4, -2.0);
        let p = separated_pair(&g, &mut rng);
        let (s, t) = nehari_project(&p, &cp, &g).unwrap();
        let on = p.scaled(s, t);
        let r = residuals(&on, &cp, &g).unwrap();
        let p_norm = h1_norm_sq(&on.u, &g);
        assert!(r.max_abs() <= 1e-8 * p_norm);
        let (s2, t2) = nehari_project(&on, &cp, &g).unwrap();
        assert!((s2 - 1.0).abs() < 1e-12 && (t2 - 1.0).abs() < 1e-12);
    }

    /// `u` leaning towards theta = 0 and `v` towards pi/2, so that the fiber
    /// through the pair meets the Nehari set even for strongly negative lambda.
    fn separated_pair(g: &ReducedGrid, rng: &mut ChaCha8Rng) -> PairState {
        let a = random_profile(g, rng, 1.0);
        let b = random_profile(g, rng, 1.0);
        let u = ReducedProfile::from_fn(g, |t| t.cos().powi(6));
        let v = ReducedProfile::from_fn(g, |t| t.sin().powi(6));
        let mul = |x: &ReducedProfile, y: &ReducedProfile| {
            ReducedProfile::new(x.values().iter().zip(y.values()).map(|(p, q)| p * q).collect()).unwrap()
        };
        PairState::new(mul(&u, &a), mul(&v, &b)).unwrap()
    }

    fn h1_norm_sq(u: &ReducedProfile, g: &ReducedGrid) -> f64 {
        g.h1_slices(u.values(), u.values())
    }

    #[test]
    fn projection_maximizes_fiber_energy() {
        let g = grid(4, 2, 96);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cp = CouplingParams::symmetric(4, -0.8);
        let p = separated_pair(&g, &mut rng);
        let (s, t) = nehari_project(&p, &cp, &g).unwrap();
        let best = energy(&p.scaled(s, t), &cp, &g).unwrap();
        for _ in 0..100 {
            let s2 = s * rng.gen_range(0.05f64..3.0);
            let t2 = t * rng.gen_range(0.05f64..3.0);
            assert!(energy(&p.scaled(s2, t2), &cp, &g).unwrap() <= best + 1e-12 * best.abs());
        }
    }

    #[test]
    fn single_projection_examples() {
        let g = grid(4, 2, 64);
        let one = ReducedProfile::constant(&g, 1.0);
        assert_relative_eq!(single_project(&one, 1.0, &g).unwrap(), 2f64.sqrt(), max_relative = 1e-12);
        let root2 = ReducedProfile::constant(&g, 2f64.sqrt());
        assert_relative_eq!(single_project(&root2, 1.0, &g).unwrap(), 1.0, max_relative = 1e-12);
        let bump = ReducedProfile::from_fn(&g, |t| (1.0 + t).sin());
        let s = single_project(&bump, 1.0, &g).unwrap();
        assert_relative_eq!(single_project(&bump.scaled(3.0), 1.0, &g).unwrap(), s / 3.0, max_relative = 1e-12);
        assert!(single_project(&ReducedProfile::zeros(&g), 1.0, &g).is_err());
    }

    #[test]
    fn degenerate_projection_is_rejected() {
        let g = grid(4, 2, 32);
        let cp = CouplingParams::symmetric(4, -1.0);
        let p = PairState::new(ReducedProfile::constant(&g, 1.0), ReducedProfile::zeros(&g)).unwrap();
        assert!(matches!(nehari_project(&p, &cp, &g), Err(Error::Degenerate(_))));
    }

    #[test]
    fn tangent_gradient_is_orthogonal_and_contracting() {
        let g = grid(4, 2, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cp = CouplingParams::symmetric(4, -1.0);
        let p = separated_pair(&g, &mut rng);
        let (s, t) = nehari_project(&p, &cp, &g).unwrap();
        let on = p.scaled(s, t);
        let split = tangent_split(&on, &cp, &g).unwrap();
        let (gf, gh) = constraint_gradients(&on, &cp, &g);
        let tn = pair_norm(&split.tangent, &g);
        for c in [&gf, &gh] {
            let ip = pair_inner(&split.tangent, c, &g);
            assert!(ip.abs() <= 1e-8 * tn * pair_norm(c, &g));
        }
        assert!(tn <= pair_norm(&split.full, &g));
    }

    #[test]
    fn on_manifold_energy_identity() {
        let g = grid(5, 2, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cp = CouplingParams::symmetric(5, -4.0);
        let p = separated_pair(&g, &mut rng);
        let (s, t) = nehari_project(&p, &cp, &g).unwrap();
        let on = p.scaled(s, t);
        let e = energy(&on, &cp, &g).unwrap();
        let norms = h1_norm_sq(&on.u, &g) + h1_norm_sq(&on.v, &g);
        assert!((e - norms / 5.0).abs() <= 1e-8 * e.abs());
    }

    #[test]
    fn energy_decreases_in_lambda() {
        let g = grid(4, 2, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PairState::new(random_profile(&g, &mut rng, 1.0), random_profile(&g, &mut rng, 1.0)).unwrap();
        let e1 = energy(&p, &CouplingParams::symmetric(4, -5.0), &g).unwrap();
        let e2 = energy(&p, &CouplingParams::symmetric(4, -1.0), &g).unwrap();
        assert!(e1 > e2);
    }

    #[test]
    fn limit_functional_identities() {
        let g = grid(4, 2, 128);
        let cp = CouplingParams::symmetric(4, -3.0);
        let pos = ReducedProfile::from_fn(&g, |t| 1.0 + t.cos());
        let zero = ReducedProfile::zeros(&g);
        let single = energy(&PairState::new(pos.clone(), zero).unwrap(), &cp, &g).unwrap();
        assert_relative_eq!(limit_energy(&pos, &cp, &g).unwrap(), single, max_relative = 1e-12);

        // disjoint closed supports (separated by at least one zero node)
        let u = ReducedProfile::from_fn(&g, |t| if t < FRAC_PI_4 - 0.03 { 1.2 - t } else { 0.0 });
        let v = ReducedProfile::from_fn(&g, |t| if t > FRAC_PI_4 + 0.03 { t } else { 0.0 });
        let w = u.axpy(-1.0, &v);
        let jw = limit_energy(&w, &cp, &g).unwrap();
        for lambda in [-0.1, -10.0, -1e4] {
            let e = energy(&PairState::new(u.clone(), v.clone()).unwrap(), &cp.with_lambda(lambda), &g).unwrap();
            assert_relative_eq!(jw, e, max_relative = 1e-12);
        }
        assert_relative_eq!(limit_energy(&w.scaled(-1.0), &cp, &g).unwrap(), jw, max_relative = 1e-12);
    }

    #[test]
    fn limit_gradient_matches_finite_differences() {
        let g = grid(4, 2, 128);
        let cp = CouplingParams { mu1: 1.0, mu2: 2.0, alpha: 2.0, beta: 2.0, lambda: -1.0 };
        let w = ReducedProfile::from_fn(&g, |t| (2.0 * t).cos() + 0.1);
        let q = ReducedProfile::from_fn(&g, |t| (t * 5.0).sin());
        let eps = 1e-6;
        let fd = (limit_energy(&w.axpy(eps, &q), &cp, &g).unwrap() - limit_energy(&w.axpy(-eps, &q), &cp, &g).unwrap())
            / (2.0 * eps);
        let grad = limit_gradient(&w, &cp, &g).unwrap();
        assert_relative_eq!(fd, g.h1_slices(grad.values(), q.values()), max_relative = 1e-6);
    }

    #[test]
    fn limit_projection_zeroes_residuals() {
        let g = grid(5, 3, 128);
        let cp = CouplingParams::symmetric(5, -1.0);
        let w = ReducedProfile::from_fn(&g, |t| 0.7 * (2.0 * t).cos() - 0.1);
        let pw = limit_project(&w, &cp, &g).unwrap();
        let (rp, rm) = limit_residuals(&pw, &cp, &g).unwrap();
        let scale = g.h1_slices(pw.values(), pw.values());
        assert!(rp.abs() < 1e-10 * scale && rm.abs() < 1e-10 * scale);
        assert!(limit_project(&ReducedProfile::constant(&g, 1.0), &cp, &g).is_err());
    }

    #[test]
    fn nehari_matrix_determinant_bound_holds_on_projected_pairs() {
        let g = grid(4, 2, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for lambda in [-0.5, -3.0, -40.0] {
            let cp = CouplingParams::symmetric(4, lambda);
            let p = separated_pair(&g, &mut rng);
            let (s, t) = nehari_project(&p, &cp, &g).unwrap();
            let ints = PairIntegrals::compute(&p.scaled(s, t), &cp, &g).unwrap();
            let a = ints.nehari_matrix(&cp, 4.0);
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let bound = determinant_bound(&cp, 4, ints.c).unwrap();
            assert!(det >= 0.99 * bound, "det {det} < bound {bound}");
        }
        let _ = sphere_area(4);
    }
}
