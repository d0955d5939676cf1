//! Finite-dimensional pieces: synchronized solutions and their threshold,
//! the fixed-point-free inequality, and the two-variable function
//! `e(s,t) = a1 s^2 + a2 t^2 - b1 s^p - b2 t^p + d s^alpha t^beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::CouplingParams;
use crate::geometry::critical_exponent;

// ---------------------------------------------------------------------------
// Synchronized solutions.

/// Coefficients of the synchronized system
/// `1 = mu1 s^{2*-2} + lambda alpha s^{alpha-2} t^beta`,
/// `1 = mu2 t^{2*-2} + lambda beta s^alpha t^{beta-2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncInstance {
    pub mu1: f64,
    pub mu2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub dim: usize,
}

/// Normalized search box: `s mu1^{1/(2*-2)}` and `t mu2^{1/(2*-2)}` range over
/// `[SYNC_BOX_MIN, SYNC_BOX_MAX]`.
pub const SYNC_BOX_MIN: f64 = 1e-3;
pub const SYNC_BOX_MAX: f64 = 1e3;
const SYNC_STARTS_PER_AXIS: usize = 40;
const SYNC_DEDUP_TOL: f64 = 1e-8;

impl SyncInstance {
    pub fn new(mu1: f64, mu2: f64, alpha: f64, beta: f64, lambda: f64, dim: usize) -> Result<Self> {
        let inst = Self { mu1, mu2, alpha, beta, lambda, dim };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_coupling(cp: &CouplingParams, dim: usize) -> Result<Self> {
        Self::new(cp.mu1, cp.mu2, cp.alpha, cp.beta, cp.lambda, dim)
    }

    pub fn validate(&self) -> Result<()> {
        CouplingParams { mu1: self.mu1, mu2: self.mu2, alpha: self.alpha, beta: self.beta, lambda: self.lambda }
            .validate(self.dim)?;
        if !(self.lambda < 0.0) {
            return Err(Error::InvalidParams(format!("synchronized system needs lambda < 0, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    fn k(&self) -> f64 {
        critical_exponent(self.dim) - 2.0
    }

    /// Coefficients `(c1, c2)` of the system in normalized variables
    /// `sigma = mu1^{1/k} s`, `tau = mu2^{1/k} t`:
    /// `sigma^k + c1 sigma^{alpha-2} tau^beta = 1`, `tau^k + c2 sigma^alpha tau^{beta-2} = 1`.
    fn normalized(&self) -> (f64, f64) {
        let k = self.k();
        let (a, b) = (self.alpha, self.beta);
        let c1 = self.lambda * a * self.mu1.powf((2.0 - a) / k) * self.mu2.powf(-b / k);
        let c2 = self.lambda * b * self.mu1.powf(-a / k) * self.mu2.powf((2.0 - b) / k);
        (c1, c2)
    }

    /// Residuals of the system at `(s, t)` in original variables.
    pub fn residuals(&self, s: f64, t: f64) -> (f64, f64) {
        let k = self.k();
        let (a, b, l) = (self.alpha, self.beta, self.lambda);
        (
            self.mu1 * s.powf(k) + l * a * s.powf(a - 2.0) * t.powf(b) - 1.0,
            self.mu2 * t.powf(k) + l * b * s.powf(a) * t.powf(b - 2.0) - 1.0,
        )
    }
}

/// The diagonal solution `s = t` when `mu1 = mu2`, `alpha = beta`:
/// `s^{2*-2} = 1/(mu + lambda alpha)` if that is positive.
pub fn diagonal_branch(inst: &SyncInstance) -> Option<f64> {
    let denom = inst.mu1 + inst.lambda * inst.alpha;
    (inst.mu1 == inst.mu2 && inst.alpha == inst.beta && denom > 0.0).then(|| denom.powf(-1.0 / inst.k()))
}

/// All positive solutions `(s, t)` of the synchronized system inside the
/// normalized box.
///
/// For `lambda < 0` the first equation is solvable for `tau` exactly when
/// `sigma > 1`, giving a curve `tau = phi(sigma)`. Newton runs on the second
/// residual along that curve from log-spaced starts in `ln sigma`, each root
/// is polished by two-dimensional Newton, and roots are deduplicated.
pub fn sync_solve(inst: &SyncInstance) -> Result<Vec<(f64, f64)>> {
    inst.validate()?;
    let k = inst.k();
    let (c1, c2) = inst.normalized();
    let (a, b) = (inst.alpha, inst.beta);
    let (lo, hi) = (SYNC_BOX_MIN.ln(), SYNC_BOX_MAX.ln());
    // the curve parametrized by z = ln(sigma^k - 1): returns (x, y, dx/dz, dy/dz)
    let curve = |z: f64| {
        let ez = z.exp();
        let x = ez.ln_1p() / k;
        let dx = ez / (k * (1.0 + ez));
        let y = (z - (-c1).ln() - (a - 2.0) * x) / b;
        (x, y, dx, (1.0 - (a - 2.0) * dx) / b)
    };
    let g = |z: f64| {
        let (x, y, dx, dy) = curve(z);
        let e = (k * y).exp();
        let m = c2 * (a * x + (b - 2.0) * y).exp();
        (e + m - 1.0, k * e * dy + m * (a * dx + (b - 2.0) * dy), 1.0 + e + m.abs())
    };
    let mut roots: Vec<(f64, f64)> = Vec::new();
    let starts = SYNC_STARTS_PER_AXIS * SYNC_STARTS_PER_AXIS / 4;
    let (z_lo, z_hi) = (-40.0, k * hi);
    for i in 0..starts {
        let mut z = z_lo + (z_hi - z_lo) * (i as f64 + 0.5) / starts as f64;
        let mut ok = false;
        for _ in 0..100 {
            let (gz, dg, scale) = g(z);
            if gz.abs() < 1e-14 * scale {
                ok = true;
                break;
            }
            if !(dg.is_finite() && dg != 0.0) {
                break;
            }
            let dz = -gz / dg;
            let mut step = (2.0 / dz.abs()).min(1.0);
            while g(z + step * dz).0.abs() >= gz.abs() && step > 1e-12 {
                step *= 0.5;
            }
            z += step * dz;
            if !z.is_finite() || z > 2.0 * z_hi || z < 4.0 * z_lo {
                break;
            }
        }
        if !ok {
            continue;
        }
        let (x0, y0, _, _) = curve(z);
        let Some((x, y)) = polish(inst, x0, y0) else { continue };
        if x < lo || x > hi || y < lo || y > hi {
            continue;
        }
        let (sig, tau) = (x.exp(), y.exp());
        if !roots.iter().any(|&(p, q)| close(p, sig) && close(q, tau)) {
            roots.push((sig, tau));
        }
    }
    let (n1, n2) = (inst.mu1.powf(-1.0 / k), inst.mu2.powf(-1.0 / k));
    let mut out: Vec<(f64, f64)> = roots.into_iter().map(|(p, q)| (p * n1, q * n2)).collect();
    out.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

/// A few undamped Newton steps on the full system in normalized log
/// variables; returns `None` if the residual does not reach roundoff.
fn polish(inst: &SyncInstance, mut x: f64, mut y: f64) -> Option<(f64, f64)> {
    let k = inst.k();
    let (c1, c2) = inst.normalized();
    let (a, b) = (inst.alpha, inst.beta);
    for _ in 0..8 {
        let (e1, e2) = ((k * x).exp(), (k * y).exp());
        let m1 = c1 * ((a - 2.0) * x + b * y).exp();
        let m2 = c2 * (a * x + (b - 2.0) * y).exp();
        let f = [e1 + m1 - 1.0, e2 + m2 - 1.0];
        let jac = [[k * e1 + (a - 2.0) * m1, b * m1], [a * m2, k * e2 + (b - 2.0) * m2]];
        let scale = 1.0 + e1.max(e2).max(m1.abs()).max(m2.abs());
        if f[0].abs().max(f[1].abs()) <= 1e-14 * scale {
            return Some((x, y));
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det == 0.0 {
            return None;
        }
        let dx = -(f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
        let dy = -(jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
        if dx.abs().max(dy.abs()) > 1e-3 {
            return None;
        }
        x += dx;
        y += dy;
    }
    let e1 = (k * x).exp();
    let m1 = c1 * ((a - 2.0) * x + b * y).exp();
    ((e1 + m1 - 1.0).abs() <= 1e-12 * (1.0 + e1)).then_some((x, y))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SYNC_DEDUP_TOL * a.abs().max(b.abs())
}

/// Independent count of solutions inside the normalized box.
///
/// For `lambda < 0` the second equation defines `sigma` explicitly as a
/// function of `tau > 1`; this samples that curve at `points` log-spaced
/// values and counts sign changes of the first residual along it.
pub fn sync_grid_scan(inst: &SyncInstance, points: usize) -> Result<usize> {
    inst.validate()?;
    let k = inst.k();
    let (c1, c2) = inst.normalized();
    let (a, b) = (inst.alpha, inst.beta);
    let (lo, hi) = (SYNC_BOX_MIN.max(1.0).ln(), SYNC_BOX_MAX.ln());
    let mut count = 0;
    let mut prev: Option<f64> = None;
    for i in 1..=points {
        let tau = (lo + (hi - lo) * i as f64 / points as f64).exp();
        let sig = ((tau.powf(k) - 1.0) / (-c2 * tau.powf(b - 2.0))).powf(1.0 / a);
        if !(SYNC_BOX_MIN..=SYNC_BOX_MAX).contains(&sig) {
            prev = None;
            continue;
        }
        let g1 = sig.powf(k) + c1 * sig.powf(a - 2.0) * tau.powf(b) - 1.0;
        if let Some(p) = prev {
            if (p > 0.0) != (g1 > 0.0) {
                count += 1;
            }
        }
        prev = Some(g1);
    }
    Ok(count)
}

/// Bracket `[lo, hi]` around the emptiness threshold: the synchronized
/// system has solutions at `hi` and none at `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncThreshold {
    pub lo: f64,
    pub hi: f64,
}

impl SyncThreshold {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

pub const THRESHOLD_BRACKET: (f64, f64) = (-1e6, -1e-6);
const THRESHOLD_REL_WIDTH: f64 = 1e-10;

/// Empirical threshold below which `sync_solve` finds nothing, by bisection
/// in `ln(-lambda)` over [`THRESHOLD_BRACKET`].
pub fn sync_threshold(mu1: f64, mu2: f64, alpha: f64, beta: f64, dim: usize) -> Result<SyncThreshold> {
    let (mut lo, mut hi) = THRESHOLD_BRACKET;
    let base = SyncInstance::new(mu1, mu2, alpha, beta, hi, dim)?;
    let empty = |l: f64| sync_solve(&base.with_lambda(l)).map(|v| v.is_empty());
    if !(empty(lo)? && !empty(hi)?) {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > THRESHOLD_REL_WIDTH * hi.abs() && hi - lo > 1e-300 {
        let mid = -((-lo).ln() * 0.5 + (-hi).ln() * 0.5).exp();
        if !(mid < hi && mid > lo) {
            break;
        }
        if empty(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SyncThreshold { lo, hi })
}

/// `(u, -u)` cannot lie on the Nehari set when `lambda <= -mu/alpha`.
/// Expects `mu > 0` and `alpha` in `(1, 2]`.
pub fn fixed_point_free(mu: f64, alpha: f64, lambda: f64) -> bool {
    lambda <= -mu / alpha
}

// ---------------------------------------------------------------------------
// The plane function e(s, t).

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub d: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
}

const PLANE_CONSTRAINT_TOL: f64 = 1e-12;

impl PlaneCoeffs {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64, d: f64, p: f64, alpha: f64, beta: f64) -> Result<Self> {
        let c = Self { a1, a2, b1, b2, d, p, alpha, beta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.a1, self.a2, self.b1, self.b2, self.d];
        if pos.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams("a1, a2, b1, b2, d must be positive".into()));
        }
        if !(self.p > 2.0 && self.alpha > 1.0 && self.beta > 1.0) {
            return Err(Error::InvalidParams("need p > 2, alpha > 1, beta > 1".into()));
        }
        if (self.alpha + self.beta - self.p).abs() > PLANE_CONSTRAINT_TOL * self.p {
            return Err(Error::InvalidParams("alpha + beta must equal p".into()));
        }
        let (r1, r2) = self.constraint_residuals();
        let scale = self.a1.max(self.a2).max(self.b1).max(self.b2).max(self.d);
        if r1.abs().max(r2.abs()) > PLANE_CONSTRAINT_TOL * scale * self.p {
            return Err(Error::InvalidParams(format!("(1,1) is not critical: residuals {r1:e}, {r2:e}")));
        }
        Ok(())
    }

    /// `(2 a1 - p b1 + d alpha, 2 a2 - p b2 + d beta)`.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        (2.0 * self.a1 - self.p * self.b1 + self.d * self.alpha, 2.0 * self.a2 - self.p * self.b2 + self.d * self.beta)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { a1: c * self.a1, a2: c * self.a2, b1: c * self.b1, b2: c * self.b2, d: c * self.d, ..*self }
    }

    pub fn value(&self, s: f64, t: f64) -> f64 {
        self.a1 * s * s + self.a2 * t * t - self.b1 * s.powf(self.p) - self.b2 * t.powf(self.p)
            + self.d * s.powf(self.alpha) * t.powf(self.beta)
    }

    pub fn grad(&self, s: f64, t: f64) -> (f64, f64) {
        let (p, a, b) = (self.p, self.alpha, self.beta);
        (
            2.0 * self.a1 * s - p * self.b1 * s.powf(p - 1.0) + self.d * a * s.powf(a - 1.0) * t.powf(b),
            2.0 * self.a2 * t - p * self.b2 * t.powf(p - 1.0) + self.d * b * s.powf(a) * t.powf(b - 1.0),
        )
    }

    /// `[[e_ss, e_st], [e_st, e_tt]]`.
    pub fn hessian(&self, s: f64, t: f64) -> [[f64; 2]; 2] {
        let (p, a, b, d) = (self.p, self.alpha, self.beta, self.d);
        let ss =
            2.0 * self.a1 - p * (p - 1.0) * self.b1 * s.powf(p - 2.0) + d * a * (a - 1.0) * s.powf(a - 2.0) * t.powf(b);
        let tt =
            2.0 * self.a2 - p * (p - 1.0) * self.b2 * t.powf(p - 2.0) + d * b * (b - 1.0) * s.powf(a) * t.powf(b - 2.0);
        let st = d * a * b * s.powf(a - 1.0) * t.powf(b - 1.0);
        [[ss, st], [st, tt]]
    }
}

/// Chooses `b1, b2` so that `(1, 1)` is a critical point of `e`.
pub fn plane_coeffs(a1: f64, a2: f64, d: f64, p: f64, alpha: f64, beta: f64) -> Result<PlaneCoeffs> {
    PlaneCoeffs::new(a1, a2, (2.0 * a1 + d * alpha) / p, (2.0 * a2 + d * beta) / p, d, p, alpha, beta)
}

/// A square `[r, R]^2` on whose edges the gradient of `e` points inward:
/// `e_s(r, .) >= delta`, `e_s(R, .) <= -1`, and likewise for `e_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneBox {
    pub r: f64,
    pub big_r: f64,
    pub delta: f64,
}

pub const BOX_EDGE_POINTS: usize = 1000;
const BOX_MAX_EXPONENT: i32 = 20;

fn edge_points(r: f64, big_r: f64, n: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = (r.ln(), big_r.ln());
    (0..n).map(move |i| if i + 1 == n { big_r } else { (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp() })
}

/// Smallest inward margin on the low edges and largest outward slope on the
/// high edges, sampled at `n` log-spaced points per edge.
fn box_margins(c: &PlaneCoeffs, r: f64, big_r: f64, n: usize) -> (f64, f64) {
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    for x in edge_points(r, big_r, n) {
        low = low.min(c.grad(r, x).0).min(c.grad(x, r).1);
        high = high.max(c.grad(big_r, x).0).max(c.grad(x, big_r).1);
    }
    (low, high)
}

/// Checks the four edge inequalities with `n` sample points per edge.
pub fn verify_box(c: &PlaneCoeffs, b: &PlaneBox, n: usize) -> bool {
    if !(b.r < b.big_r && b.delta > 0.0) {
        return false;
    }
    let (low, high) = box_margins(c, b.r, b.big_r, n);
    low >= b.delta && high <= -1.0
}

/// Searches `r = 2^-i`, `R = 2^j` for `i, j` up to 20 (about `1e-6 .. 1e6`),
/// preferring the tightest box; `delta` is half the sampled margin.
pub fn plane_box(c: &PlaneCoeffs) -> Result<PlaneBox> {
    c.validate()?;
    let mut best: Option<(i32, PlaneBox)> = None;
    for i in 1..=BOX_MAX_EXPONENT {
        for j in 1..=BOX_MAX_EXPONENT {
            if best.is_some_and(|(s, _)| i + j >= s) {
                continue;
            }
            let (r, big_r) = (2f64.powi(-i), 2f64.powi(j));
            let (low, high) = box_margins(c, r, big_r, BOX_EDGE_POINTS);
            if low > 0.0 && high <= -1.0 {
                best = Some((i + j, PlaneBox { r, big_r, delta: 0.5 * low }));
            }
        }
    }
    best.map(|(_, b)| b)
        .ok_or_else(|| Error::Search("no admissible box in [1e-6, 1e6]; check the coefficient constraints".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    StrictLocalMax,
    StrictLocalMin,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub s: f64,
    pub t: f64,
    pub value: f64,
    pub kind: CriticalKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub domain: PlaneBox,
    pub points: Vec<CriticalPoint>,
    /// Every critical point found is a strict local maximum.
    pub all_strict_max: bool,
    /// The critical set is exactly `{(1, 1)}`.
    pub unique_at_one: bool,
    /// `e(1, 1)` is the maximum of `e` over a sampling grid of the box.
    pub global_max_on_grid: bool,
    /// `e < e(1, 1)` on the circle of radius `10 R`.
    pub decays_far_out: bool,
    /// Newton starts that converged outside the box (onto the axes).
    pub escaped_starts: usize,
}

impl CriticalReport {
    /// The uniqueness statement, which only applies when every critical
    /// point is a strict local maximum.
    pub fn hypothesis_violated(&self) -> bool {
        !self.all_strict_max
    }

    pub fn uniqueness_holds(&self) -> bool {
        !self.all_strict_max || (self.unique_at_one && self.global_max_on_grid)
    }
}

pub const CRITICAL_STARTS_PER_AXIS: usize = 200;
const CRITICAL_DEDUP_TOL: f64 = 1e-8;
const MAX_GRID_POINTS: usize = 400;

fn classify(h: [[f64; 2]; 2]) -> CriticalKind {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let scale = h[0][0].abs().max(h[1][1].abs()).max(h[0][1].abs()).powi(2);
    if det > 1e-12 * scale {
        if h[0][0] < 0.0 {
            CriticalKind::StrictLocalMax
        } else {
            CriticalKind::StrictLocalMin
        }
    } else if det < -1e-12 * scale {
        CriticalKind::Saddle
    } else {
        CriticalKind::Degenerate
    }
}

/// Critical points of `e` in the box from [`plane_box`], by Newton from a
/// log-spaced `200 x 200` grid of starts, deduplicated and classified by the
/// exact Hessian.
pub fn plane_critical_points(c: &PlaneCoeffs) -> Result<CriticalReport> {
    let domain = plane_box(c)?;
    let (lo, hi) = (domain.r.ln(), domain.big_r.ln());
    let n = CRITICAL_STARTS_PER_AXIS;
    let mut found: Vec<(f64, f64)> = Vec::new();
    let mut escaped = 0;
    for i in 0..n {
        for j in 0..n {
            let mut s = (lo + (hi - lo) * (i as f64 + 0.5) / n as f64).exp();
            let mut t = (lo + (hi - lo) * (j as f64 + 0.5) / n as f64).exp();
            let mut ok = false;
            for _ in 0..100 {
                let (gs, gt) = c.grad(s, t);
                let scale = 1.0 + (c.a1 * s).abs() + (c.a2 * t).abs();
                if gs.abs().max(gt.abs()) <= 1e-13 * scale {
                    ok = true;
                    break;
                }
                let h = c.hessian(s, t);
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                if !det.is_finite() || det == 0.0 {
                    break;
                }
                let ds = -(gs * h[1][1] - gt * h[0][1]) / det;
                let dt = -(h[0][0] * gt - h[1][0] * gs) / det;
                // stay in the open quadrant
                let mut step = 1.0;
                while s + step * ds <= 0.0 || t + step * dt <= 0.0 {
                    step *= 0.5;
                }
                s += step * ds;
                t += step * dt;
                if !(s.is_finite() && t.is_finite()) || s > 10.0 * domain.big_r || t > 10.0 * domain.big_r {
                    break;
                }
            }
            if !ok {
                continue;
            }
            // limits on the axes belong to the boundary of the quadrant
            if !(domain.r..=domain.big_r).contains(&s) || !(domain.r..=domain.big_r).contains(&t) {
                escaped += 1;
                continue;
            }
            if !found.iter().any(|&(p, q)| near(p, s) && near(q, t)) {
                found.push((s, t));
            }
        }
    }
    found.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
    let points: Vec<CriticalPoint> = found
        .into_iter()
        .map(|(s, t)| CriticalPoint { s, t, value: c.value(s, t), kind: classify(c.hessian(s, t)) })
        .collect();
    let all_strict_max = points.iter().all(|p| p.kind == CriticalKind::StrictLocalMax);
    let unique_at_one = points.len() == 1 && (points[0].s - 1.0).abs() < 1e-8 && (points[0].t - 1.0).abs() < 1e-8;
    let peak = c.value(1.0, 1.0);
    let slack = 1e-12 * peak.abs().max(1.0);
    let m = MAX_GRID_POINTS;
    let grid: Vec<f64> = edge_points(domain.r, domain.big_r, m).collect();
    let global_max_on_grid = grid.iter().all(|&s| grid.iter().all(|&t| c.value(s, t) <= peak + slack));
    let far = 10.0 * domain.big_r;
    let decays_far_out = (0..=90).all(|k| {
        let phi = k as f64 * std::f64::consts::FRAC_PI_2 / 90.0;
        let (s, t) = ((far * phi.cos()).max(0.0), (far * phi.sin()).max(0.0));
        c.value(s, t) < peak
    });
    Ok(CriticalReport {
        domain,
        points,
        all_strict_max,
        unique_at_one,
        global_max_on_grid,
        decays_far_out,
        escaped_starts: escaped,
    })
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= CRITICAL_DEDUP_TOL * a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sym(lambda: f64) -> SyncInstance {
        SyncInstance::new(1.0, 1.0, 2.0, 2.0, lambda, 4).unwrap()
    }

    #[test]
    fn diagonal_solution_present_above_minus_half() {
        let roots = sync_solve(&sym(-0.25)).unwrap();
        assert!(roots.iter().any(|&(s, t)| (s - 2f64.sqrt()).abs() < 1e-10 && (t - 2f64.sqrt()).abs() < 1e-10));
        for &(s, t) in &roots {
            let (r1, r2) = sym(-0.25).residuals(s, t);
            assert!(r1.abs() < 1e-10 && r2.abs() < 1e-10);
        }
        assert_relative_eq!(diagonal_branch(&sym(-0.25)).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn diagonal_branch_absent_at_minus_half() {
        assert_eq!(diagonal_branch(&sym(-0.5)), None);
        assert!(sync_solve(&sym(-0.5)).unwrap().is_empty());
    }

    #[test]
    fn decoupled_limit() {
        let inst = SyncInstance::new(2.0, 3.0, 2.0, 2.0, -1e-9, 4).unwrap();
        let roots = sync_solve(&inst).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0].0, 2f64.powf(-0.5), max_relative = 1e-6);
        assert_relative_eq!(roots[0].1, 3f64.powf(-0.5), max_relative = 1e-6);
    }

    #[test]
    fn diagonal_reduction_for_other_dimensions() {
        // N = 5: 2* = 10/3, alpha = beta = 5/3
        for &lambda in &[-0.1, -0.5, -0.59, -0.61, -2.0] {
            let inst = SyncInstance::new(1.0, 1.0, 5.0 / 3.0, 5.0 / 3.0, lambda, 5).unwrap();
            let diag = diagonal_branch(&inst);
            assert_eq!(diag.is_some(), 1.0 + lambda * 5.0 / 3.0 > 0.0);
            if let Some(s) = diag {
                let (r1, r2) = inst.residuals(s, s);
                assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_scan_matches_closed_form() {
        // N = 4, alpha = beta = 2: solutions exist iff lambda > -sqrt(mu1 mu2)/2
        for &(mu2, lstar) in &[(1.0, -0.5), (100.0, -5.0)] {
            let above = SyncInstance::new(1.0, mu2, 2.0, 2.0, lstar + 1e-2, 4).unwrap();
            let below = SyncInstance::new(1.0, mu2, 2.0, 2.0, lstar - 1e-2, 4).unwrap();
            assert_eq!(sync_grid_scan(&above, 100_000).unwrap(), 1);
            assert_eq!(sync_grid_scan(&below, 100_000).unwrap(), 0);
            assert_eq!(sync_solve(&above).unwrap().len(), 1);
            assert!(sync_solve(&below).unwrap().is_empty());
        }
    }

    #[test]
    fn fixed_point_free_examples() {
        assert!(fixed_point_free(1.0, 2.0, -0.5));
        assert!(!fixed_point_free(1.0, 2.0, -0.4));
        assert!(fixed_point_free(2.0, 1.5, -1.4));
        let mut seen_true = false;
        for k in 0..200 {
            let l = -(k as f64) * 0.01;
            let v = fixed_point_free(1.0, 2.0, l);
            assert!(!seen_true || v);
            seen_true |= v;
        }
    }

    fn standard() -> PlaneCoeffs {
        plane_coeffs(1.0, 1.0, 1.0, 4.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn plane_coeffs_example() {
        let c = standard();
        assert_eq!((c.b1, c.b2), (1.0, 1.0));
        assert_eq!(c.grad(1.0, 1.0), (0.0, 0.0));
        assert_eq!(c.constraint_residuals(), (0.0, 0.0));
        let (s, t) = (0.7, 1.3);
        assert_relative_eq!(c.value(s, t), s * s + t * t - s.powi(4) - t.powi(4) + s * s * t * t, epsilon = 1e-14);
    }

    #[test]
    fn plane_coeffs_small_d_is_decoupled() {
        let c = plane_coeffs(1.5, 0.5, 1e-12, 4.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(c.b1, 2.0 * 1.5 / 4.0, epsilon = 1e-11);
        assert_relative_eq!(c.b2, 2.0 * 0.5 / 4.0, epsilon = 1e-11);
    }

    #[test]
    fn plane_box_standard_and_refined() {
        let c = standard();
        let b = plane_box(&c).unwrap();
        assert!(b.r < 1.0 && 1.0 < b.big_r && b.delta > 0.0);
        assert!(verify_box(&c, &b, 10 * BOX_EDGE_POINTS));
    }

    #[test]
    fn plane_box_scaling() {
        let c = standard();
        let b = plane_box(&c).unwrap();
        let scaled = PlaneBox { delta: 3.0 * b.delta, ..b };
        assert!(verify_box(&c.scaled(3.0), &scaled, BOX_EDGE_POINTS));
        let (low, _) = box_margins(&c, b.r, b.big_r, BOX_EDGE_POINTS);
        let (low3, _) = box_margins(&c.scaled(3.0), b.r, b.big_r, BOX_EDGE_POINTS);
        assert_relative_eq!(low3, 3.0 * low, max_relative = 1e-12);
    }

    #[test]
    fn plane_box_negative_control() {
        let c = standard();
        let bad = PlaneBox { r: 0.5, big_r: 0.9, delta: 1e-3 };
        assert!(!verify_box(&c, &bad, BOX_EDGE_POINTS));
    }

    #[test]
    fn standard_instance_unique_max() {
        let rep = plane_critical_points(&standard()).unwrap();
        assert!(rep.all_strict_max && rep.unique_at_one && rep.global_max_on_grid && rep.decays_far_out, "{rep:?}");
    }

    #[test]
    fn symmetric_instance_symmetric_critical_set() {
        let c = plane_coeffs(0.8, 0.8, 0.9, 4.0, 2.0, 2.0).unwrap();
        let rep = plane_critical_points(&c).unwrap();
        for p in &rep.points {
            assert!(rep.points.iter().any(|q| near(q.s, p.t) && near(q.t, p.s)), "{rep:?}");
        }
        assert!(rep.points.iter().any(|p| near(p.s, 1.0) && near(p.t, 1.0)));
    }

    #[test]
    fn invalid_plane_inputs() {
        assert!(plane_coeffs(-1.0, 1.0, 1.0, 4.0, 2.0, 2.0).is_err());
        assert!(plane_coeffs(1.0, 1.0, 1.0, 4.0, 2.5, 2.0).is_err());
        assert!(PlaneCoeffs::new(1.0, 1.0, 2.0, 1.0, 1.0, 4.0, 2.0, 2.0).is_err());
    }
}
