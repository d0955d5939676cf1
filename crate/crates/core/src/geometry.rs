//! Reduction of `O(m) x O(n)`-invariant functions on the sphere `S^N` to
//! profiles on the arc `theta in [0, pi/2]`.
//!
//! A point `(x, y) in R^m x R^n` of `S^N` lies on the orbit
//! `S^{m-1}(cos theta) x S^{n-1}(sin theta)`, so an invariant function is a
//! function of `theta` alone and sphere integrals become weighted arc
//! integrals with the orbit volume
//! `w(theta) = |S^{m-1}| |S^{n-1}| cos^{m-1}(theta) sin^{n-1}(theta)`.
//!
//! Profiles are continuous piecewise-linear on a uniform grid. The stiffness
//! uses the exact cell integrals of `w`, the mass and nonlinear terms use
//! lumped nodal weights `W_i = int w phi_i` (with `phi_i` the hat functions),
//! so `sum W_i = |S^N|` up to roundoff. The weight vanishes at both ends of
//! the arc and no boundary condition is imposed.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Index;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Dimension `N`, orbit split `(m, n)` with `m + n = N + 1`, and the number
/// of grid cells on the arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    pub dim: usize,
    pub m: usize,
    pub n: usize,
    pub cells: usize,
}

impl ModelParams {
    pub const MIN_CELLS: usize = 16;

    pub fn new(dim: usize, m: usize, n: usize, cells: usize) -> Result<Self> {
        let p = Self { dim, m, n, cells };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 4 {
            return Err(Error::InvalidParams(format!("dimension N={} must be >= 4", self.dim)));
        }
        if self.m < 2 || self.n < 2 {
            return Err(Error::InvalidParams(format!("orbit split (m, n) = ({}, {}) needs m, n >= 2", self.m, self.n)));
        }
        if self.m + self.n != self.dim + 1 {
            return Err(Error::InvalidParams(format!("m + n = {} but N + 1 = {}", self.m + self.n, self.dim + 1)));
        }
        if self.cells < Self::MIN_CELLS {
            return Err(Error::InvalidParams(format!(
                "grid needs at least {} cells, got {}",
                Self::MIN_CELLS,
                self.cells
            )));
        }
        Ok(())
    }

    /// `2* = 2N / (N - 2)`.
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.dim)
    }

    /// `N (N - 2) / 4`, the zeroth-order coefficient of the conformal
    /// Laplacian on the unit sphere.
    pub fn mass_coefficient(&self) -> f64 {
        let n = self.dim as f64;
        n * (n - 2.0) / 4.0
    }

    /// Same model with the roles of the two factors exchanged.
    pub fn swapped(&self) -> Self {
        Self { m: self.n, n: self.m, ..*self }
    }

    pub fn with_cells(&self, cells: usize) -> Self {
        Self { cells, ..*self }
    }
}

pub fn critical_exponent(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * n / (n - 2.0)
}

/// Surface area of the unit sphere `S^k` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain("sphere_area needs k >= 1".into()));
    }
    let half = (k as f64 + 1.0) / 2.0;
    Ok(2.0 * PI.powf(half) / gamma(half))
}

/// Volume of the `(m, n)`-orbit through the arc point `theta`.
pub fn orbit_weight(theta: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} outside [0, pi/2]")));
    }
    Ok(orbit_weight_unchecked(theta, params.m, params.n))
}

fn orbit_weight_unchecked(theta: f64, m: usize, n: usize) -> f64 {
    let am = sphere_area(m - 1).expect("m >= 2");
    let an = sphere_area(n - 1).expect("n >= 2");
    // sin(pi/2 - theta) keeps full relative accuracy near theta = pi/2
    am * an * (FRAC_PI_2 - theta).sin().powi(m as i32 - 1) * theta.sin().powi(n as i32 - 1)
}

/// Best Sobolev constant of `D^{1,2}(R^N) -> L^{2*}(R^N)` (Talenti/Aubin form).
pub fn sobolev_constant(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::Domain(format!("sobolev_constant needs N >= 3, got {dim}")));
    }
    let n = dim as f64;
    Ok(PI * n * (n - 2.0) * (gamma(n / 2.0) / gamma(n)).powf(2.0 / n))
}

/// The same constant through the sphere: `S^{N/2} = (N(N-2)/4)^{N/2} |S^N|`.
pub fn sobolev_constant_via_sphere(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::Domain(format!("sobolev_constant needs N >= 3, got {dim}")));
    }
    let n = dim as f64;
    Ok(n * (n - 2.0) / 4.0 * sphere_area(dim)?.powf(2.0 / n))
}

/// `S^{N/2}`, the energy scale that appears in every Nehari bound.
pub fn sobolev_level(dim: usize) -> Result<f64> {
    Ok(sobolev_constant(dim)?.powf(dim as f64 / 2.0))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

const CELL_QUADRATURE_ORDER: usize = 10;

/// Uniform arc grid with lumped orbit-volume weights and the factorized
/// `H^1` operator `A = K + (N(N-2)/4) diag(W)`.
#[derive(Debug, Clone)]
pub struct ReducedGrid {
    params: ModelParams,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `int_cell w / h^2` per cell.
    stiffness: Vec<f64>,
    spacing: f64,
    // LDL^T factors of the tridiagonal H^1 operator.
    ldl_diag: Vec<f64>,
    ldl_lower: Vec<f64>,
}

impl ReducedGrid {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let cells = params.cells;
        let h = FRAC_PI_2 / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        nodes[cells] = FRAC_PI_2;

        let gl = gauss_legendre(CELL_QUADRATURE_ORDER);
        let mut weights = vec![0.0; cells + 1];
        let mut stiffness = vec![0.0; cells];
        for k in 0..cells {
            let (a, b) = (nodes[k], nodes[k + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let (mut left, mut right) = (0.0, 0.0);
            for &(x, gw) in &gl {
                let t = mid + half * x;
                let w = orbit_weight_unchecked(t, params.m, params.n) * gw * half;
                let frac = (t - a) / (b - a);
                left += w * (1.0 - frac);
                right += w * frac;
            }
            weights[k] += left;
            weights[k + 1] += right;
            stiffness[k] = (left + right) / ((b - a) * (b - a));
        }

        let mass = params.mass_coefficient();
        let diag: Vec<f64> = (0..=cells)
            .map(|i| {
                let l = if i > 0 { stiffness[i - 1] } else { 0.0 };
                let r = if i < cells { stiffness[i] } else { 0.0 };
                l + r + mass * weights[i]
            })
            .collect();
        let mut ldl_diag = vec![0.0; cells + 1];
        let mut ldl_lower = vec![0.0; cells];
        ldl_diag[0] = diag[0];
        for i in 1..=cells {
            let off = -stiffness[i - 1];
            ldl_lower[i - 1] = off / ldl_diag[i - 1];
            ldl_diag[i] = diag[i] - ldl_lower[i - 1] * off;
        }

        Ok(Self { params: *params, nodes, weights, stiffness, spacing: h, ldl_diag, ldl_lower })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: len });
        }
        Ok(())
    }

    /// `sum_i W_i f_i`.
    pub(crate) fn integrate_slice(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum()
    }

    pub(crate) fn h1_slices(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut grad = 0.0;
        for k in 0..self.stiffness.len() {
            grad += self.stiffness[k] * ((a[k + 1] - a[k]) * (b[k + 1] - b[k]));
        }
        let mut mass = 0.0;
        for i in 0..a.len() {
            mass += self.weights[i] * (a[i] * b[i]);
        }
        grad + self.params.mass_coefficient() * mass
    }

    /// `out = A a`.
    pub(crate) fn apply_h1(&self, a: &[f64], out: &mut [f64]) {
        let c = self.params.mass_coefficient();
        let last = a.len() - 1;
        for i in 0..=last {
            let mut v = c * self.weights[i] * a[i];
            if i > 0 {
                v += self.stiffness[i - 1] * (a[i] - a[i - 1]);
            }
            if i < last {
                v += self.stiffness[i] * (a[i] - a[i + 1]);
            }
            out[i] = v;
        }
    }

    /// Solves `A x = rhs` in place.
    pub(crate) fn solve_h1_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 1..n {
            x[i] -= self.ldl_lower[i - 1] * x[i - 1];
        }
        for (xi, d) in x.iter_mut().zip(&self.ldl_diag) {
            *xi /= d;
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.ldl_lower[i] * x[i + 1];
        }
    }

    /// Solves `(A + diag(extra)) x = rhs` in place; `extra` must be `>= 0`.
    pub(crate) fn solve_shifted_in_place(&self, extra: &[f64], x: &mut [f64]) {
        let c = self.params.mass_coefficient();
        let n = x.len();
        let k = &self.stiffness;
        let diag = |i: usize| {
            let l = if i > 0 { k[i - 1] } else { 0.0 };
            let r = if i + 1 < n { k[i] } else { 0.0 };
            l + r + c * self.weights[i] + extra[i]
        };
        let mut d = vec![0.0; n];
        let mut lower = vec![0.0; n - 1];
        d[0] = diag(0);
        for i in 1..n {
            lower[i - 1] = -k[i - 1] / d[i - 1];
            d[i] = diag(i) + lower[i - 1] * k[i - 1];
        }
        for i in 1..n {
            x[i] -= lower[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= d[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= lower[i] * x[i + 1];
        }
    }
}

/// Samples of an invariant sphere function at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProfile {
    values: Vec<f64>,
}

impl ReducedProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("profile value at node {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &ReducedGrid) -> Self {
        Self { values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &ReducedGrid, c: f64) -> Self {
        Self { values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: &ReducedGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { values: grid.nodes().iter().map(|&t| f(t)).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| s * v).collect() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect() }
    }

    /// Mirror image under `theta -> pi/2 - theta`.
    pub fn reflected(&self) -> Self {
        Self { values: self.values.iter().rev().copied().collect() }
    }

    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// `min(w, 0)`; nonpositive.
    pub fn negative_part(&self) -> Self {
        self.map(|v| v.min(0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

impl Index<usize> for ReducedProfile {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Quadrature of `int_0^{pi/2} f w dtheta`, i.e. the sphere integral of the
/// invariant extension of `f`.
pub fn integrate(f: &ReducedProfile, grid: &ReducedGrid) -> Result<f64> {
    grid.check_len(f.len())?;
    Ok(grid.integrate_slice(f.values()))
}

/// `int (u1' u2' + N(N-2)/4 u1 u2) w dtheta`; with `u1 = u2 = u` this is the
/// Dirichlet energy of the corresponding function on `R^N`.
pub fn h1_form(u1: &ReducedProfile, u2: &ReducedProfile, grid: &ReducedGrid) -> Result<f64> {
    grid.check_len(u1.len())?;
    grid.check_len(u2.len())?;
    Ok(grid.h1_slices(u1.values(), u2.values()))
}
