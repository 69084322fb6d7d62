//! Integration engines.
//!
//! * [`integrate_simplex`]: stick-breaking map of the scaled simplex onto the
//!   unit cube with tensor Gauss–Legendre panels graded dyadically toward the
//!   faces. The error estimate is the level-to-level difference times 10.
//! * [`integrate_line`]: adaptive Gauss–Kronrod (7/15) on a truncated line
//!   with an exponential tail estimate.
//! * [`lattice_sum`]: product trapezoid rule on shifted lattices in `ℂⁿ`,
//!   used for the entire, double-exponentially decaying integrands of the
//!   log-ratio representation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Dimension cap of the simplex engine.
pub const MAX_SIMPLEX_DIM: usize = 8;

/// Node budget per level of the simplex engine.
const MAX_SIMPLEX_NODES: usize = 40_000_000;

/// Tolerances and effort limits shared by all engines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: u32,
    pub points_per_panel: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_subdivisions: 10,
            points_per_panel: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: u32, points_per_panel: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            rel_tol,
            abs_tol,
            max_subdivisions,
            points_per_panel,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                reason: "must be positive and finite",
            });
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "abs_tol",
                reason: "must be positive and finite",
            });
        }
        if self.points_per_panel < 2 {
            return Err(Error::InvalidParameter {
                name: "points_per_panel",
                reason: "must be at least 2",
            });
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter {
                name: "max_subdivisions",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    fn target(&self, value: Complex64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.norm())
    }
}

/// The simplex `{t_j > 0, Σ t_j = T}` with `dim` free variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexDomain {
    dim: usize,
    total_time: f64,
}

impl SimplexDomain {
    pub fn new(dim: usize, total_time: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "simplex needs at least one free variable",
            });
        }
        if dim > MAX_SIMPLEX_DIM {
            return Err(Error::DimensionCap {
                dim,
                cap: MAX_SIMPLEX_DIM,
            });
        }
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "total_time",
                reason: "must be positive and finite",
            });
        }
        Ok(SimplexDomain { dim, total_time })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }
}

/// Value with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOutcome {
    pub value: Complex64,
    pub err_est: f64,
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite rule on `[0, 1]` for a given refinement level: `level + 1`
/// uniform panels, the two outer ones split dyadically `level` times toward
/// the endpoints.
fn graded_rule(level: u32, gx: &[f64], gw: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = level as usize + 1;
    let width = 1.0 / m as f64;
    let mut panels: Vec<(f64, f64)> = Vec::new();
    let mut edge = width;
    let mut left = Vec::new();
    for _ in 0..level {
        left.push((edge / 2.0, edge));
        edge /= 2.0;
    }
    left.push((0.0, edge));
    left.reverse();
    panels.extend_from_slice(&left);
    for p in 1..m.saturating_sub(1) {
        panels.push((p as f64 * width, (p + 1) as f64 * width));
    }
    if m > 1 {
        for &(a, b) in left.iter().rev() {
            panels.push((1.0 - b, 1.0 - a));
        }
    }
    let mut x = Vec::with_capacity(panels.len() * gx.len());
    let mut w = Vec::with_capacity(panels.len() * gx.len());
    for (a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in gx.iter().zip(gw) {
            x.push(mid + half * xi);
            w.push(half * wi);
        }
    }
    (x, w)
}

/// Integrates `f(t₀, …, t_n)` over `{t_j > 0, Σ t_j = T}` with respect to
/// `dt₀ ⋯ dt_{n−1}`.
pub fn integrate_simplex<F>(mut f: F, domain: &SimplexDomain, spec: &QuadratureSpec) -> Result<QuadOutcome>
where
    F: FnMut(&[f64]) -> Complex64,
{
    spec.validate()?;
    let n = domain.dim;
    let total = domain.total_time;
    let (gx, gw) = gauss_legendre(spec.points_per_panel);
    let mut t = vec![0.0; n + 1];
    let mut prev: Option<Complex64> = None;
    let mut last_err = f64::INFINITY;
    let mut last = Complex64::new(0.0, 0.0);
    for level in 1..=spec.max_subdivisions {
        let (ux, uw) = graded_rule(level, &gx, &gw);
        let m = ux.len();
        let nodes = m.checked_pow(n as u32).unwrap_or(usize::MAX);
        if nodes > MAX_SIMPLEX_NODES {
            break;
        }
        let mut idx = vec![0usize; n];
        let mut sum = Complex64::new(0.0, 0.0);
        'outer: loop {
            let mut rest = total;
            let mut weight = total.powi(n as i32);
            for (d, &i) in idx.iter().enumerate() {
                let u = ux[i];
                t[d] = rest * u;
                weight *= uw[i] * (1.0 - u).powi((n - 1 - d) as i32);
                rest *= 1.0 - u;
            }
            t[n] = rest;
            let v = f(&t);
            sum += v * weight;
            let mut d = n;
            loop {
                if d == 0 {
                    break 'outer;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < m {
                    break;
                }
                idx[d] = 0;
            }
        }
        if !sum.is_finite() {
            return Err(Error::NonFinite);
        }
        if let Some(p) = prev {
            let err = 10.0 * (sum - p).norm();
            last_err = err;
            if err <= spec.target(sum) {
                return Ok(QuadOutcome {
                    value: sum,
                    err_est: err,
                });
            }
        }
        prev = Some(sum);
        last = sum;
    }
    Err(Error::NonConvergence {
        re: last.re,
        im: last.im,
        err_est: last_err,
    })
}

/// Result of [`integrate_line`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineOutcome {
    pub value: Complex64,
    /// Quadrature error plus the estimated mass outside `[−W, W]`.
    pub err_est: f64,
    pub tail_bound: f64,
    /// Set when the tail estimate exceeds `rel_tol·|value|`.
    pub tail_dominated: bool,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod value, Gauss–Kronrod difference and Kronrod estimate of `∫|f|`.
fn kronrod15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut m = fc.norm() * WGK[7];
    for j in 0..7 {
        let (fl, fr) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        let fx = fl + fr;
        k += fx * WGK[j];
        m += (fl.norm() + fr.norm()) * WGK[j];
        if j % 2 == 1 {
            g += fx * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm(), m * h.abs())
}

/// Integrates `f` over `ℝ`, truncated to `[−half_width, half_width]`.
pub fn integrate_line<F>(mut f: F, half_width: f64, spec: &QuadratureSpec) -> Result<LineOutcome>
where
    F: FnMut(f64) -> Complex64,
{
    spec.validate()?;
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "half_width",
            reason: "must be positive and finite",
        });
    }
    let w = half_width;
    let initial = 16;
    let mut intervals: Vec<(f64, f64, Complex64, f64, f64)> = Vec::new();
    for i in 0..initial {
        let a = -w + 2.0 * w * i as f64 / initial as f64;
        let b = -w + 2.0 * w * (i + 1) as f64 / initial as f64;
        let (v, e, m) = kronrod15(&mut f, a, b);
        intervals.push((a, b, v, e, m));
    }
    let max_intervals = 64 * spec.max_subdivisions.max(1) as usize * initial;
    let tail = tail_estimate(&mut f, w);
    loop {
        let value: Complex64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        let mass: f64 = intervals.iter().map(|iv| iv.4).sum();
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        // Cancelling integrands are resolved to round-off of the mass.
        let target = spec.target(value).max(64.0 * f64::EPSILON * mass);
        if err <= target || intervals.len() >= max_intervals {
            if err > target {
                return Err(Error::NonConvergence {
                    re: value.re,
                    im: value.im,
                    err_est: err + tail,
                });
            }
            return Ok(LineOutcome {
                value,
                err_est: err + tail,
                tail_bound: tail,
                tail_dominated: tail > spec.rel_tol * value.norm(),
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (a, b, ..) = intervals[worst];
        let mid = 0.5 * (a + b);
        let (v1, e1, m1) = kronrod15(&mut f, a, mid);
        let (v2, e2, m2) = kronrod15(&mut f, mid, b);
        intervals[worst] = (a, mid, v1, e1, m1);
        intervals.insert(worst + 1, (mid, b, v2, e2, m2));
    }
}

/// Mass beyond `±w` assuming exponential decay fitted from two samples.
fn tail_estimate<F: FnMut(f64) -> Complex64>(f: &mut F, w: f64) -> f64 {
    let delta = w / 64.0;
    let mut total = 0.0;
    for sign in [-1.0, 1.0] {
        let outer = f(sign * w).norm();
        let inner = f(sign * (w - delta)).norm();
        if outer == 0.0 {
            continue;
        }
        let rate = (inner / outer).ln() / delta;
        if rate > 0.0 && rate.is_finite() {
            total += outer / rate;
        } else {
            return f64::INFINITY;
        }
    }
    total
}

/// One axis of a shifted lattice: nodes `k·step + i·shift`, `k_lo ≤ k ≤ k_hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeAxis {
    pub step: f64,
    pub shift: f64,
    pub k_lo: i64,
    pub k_hi: i64,
}

impl LatticeAxis {
    pub fn len(&self) -> usize {
        (self.k_hi - self.k_lo + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, i: usize) -> Complex64 {
        Complex64::new((self.k_lo + i as i64) as f64 * self.step, self.shift)
    }

    fn even(&self, i: usize) -> bool {
        (self.k_lo + i as i64).rem_euclid(2) == 0
    }
}

/// Trapezoid sums on a lattice and on its every-other-node sublattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSum {
    pub fine: Complex64,
    pub coarse: Complex64,
    /// Trapezoid sum of `|f|`.
    pub mass: f64,
    pub nodes: usize,
}

impl LatticeSum {
    /// Error estimate of `fine`. For analytic integrands the trapezoid error
    /// squares when the step halves, so the fine error is about
    /// `δ²/mass` with `δ = |fine − coarse|`.
    pub fn err_est(&self) -> f64 {
        let delta = (self.fine - self.coarse).norm();
        let scale = self.mass.max(f64::MIN_POSITIVE);
        10.0 * delta * (delta / scale).min(1.0) + 16.0 * f64::EPSILON * self.mass
    }
}

/// Evaluates `f` on every node of the product lattice. `f` receives the
/// per-axis node indices.
pub fn lattice_sum<F>(axes: &[LatticeAxis], f: F) -> LatticeSum
where
    F: FnMut(&[usize]) -> Complex64,
{
    lattice_sum_pruned(axes, &[], f64::NEG_INFINITY, f)
}

/// Like [`lattice_sum`], but skips every node whose summed per-axis log
/// weight `Σ_d log_weights[d][i_d]` falls below `cutoff`. Weights must be
/// nonpositive so that whole sub-blocks can be skipped; an empty
/// `log_weights` disables pruning.
pub fn lattice_sum_pruned<F>(axes: &[LatticeAxis], log_weights: &[Vec<f64>], cutoff: f64, mut f: F) -> LatticeSum
where
    F: FnMut(&[usize]) -> Complex64,
{
    let n = axes.len();
    let mut acc = Acc {
        fine: Complex64::new(0.0, 0.0),
        coarse: Complex64::new(0.0, 0.0),
        mass: 0.0,
        nodes: 0,
    };
    if n > 0 && axes.iter().all(|a| !a.is_empty()) {
        let mut idx = vec![0usize; n];
        walk(axes, log_weights, cutoff, 0, 0.0, true, &mut idx, &mut f, &mut acc);
    }
    let h: f64 = axes.iter().map(|a| a.step).product();
    let h2: f64 = axes.iter().map(|a| 2.0 * a.step).product();
    LatticeSum {
        fine: acc.fine * h,
        coarse: acc.coarse * h2,
        mass: acc.mass * h,
        nodes: acc.nodes,
    }
}

/// Number of nodes [`lattice_sum_pruned`] would evaluate, counted up to
/// `limit`.
pub fn pruned_node_count(axes: &[LatticeAxis], log_weights: &[Vec<f64>], cutoff: f64, limit: usize) -> usize {
    fn count(
        axes: &[LatticeAxis],
        logw: &[Vec<f64>],
        cutoff: f64,
        d: usize,
        prefix: f64,
        limit: usize,
        acc: &mut usize,
    ) {
        for i in 0..axes[d].len() {
            if *acc >= limit {
                return;
            }
            let p = if logw.is_empty() { 0.0 } else { prefix + logw[d][i] };
            if p < cutoff {
                continue;
            }
            if d + 1 < axes.len() {
                count(axes, logw, cutoff, d + 1, p, limit, acc);
            } else {
                *acc += 1;
            }
        }
    }
    let mut acc = 0;
    if !axes.is_empty() && axes.iter().all(|a| !a.is_empty()) {
        count(axes, log_weights, cutoff, 0, 0.0, limit, &mut acc);
    }
    acc
}

struct Acc {
    fine: Complex64,
    coarse: Complex64,
    mass: f64,
    nodes: usize,
}

#[allow(clippy::too_many_arguments)]
fn walk<F>(
    axes: &[LatticeAxis],
    logw: &[Vec<f64>],
    cutoff: f64,
    d: usize,
    prefix: f64,
    even: bool,
    idx: &mut [usize],
    f: &mut F,
    acc: &mut Acc,
) where
    F: FnMut(&[usize]) -> Complex64,
{
    let axis = &axes[d];
    for i in 0..axis.len() {
        let p = if logw.is_empty() { 0.0 } else { prefix + logw[d][i] };
        if p < cutoff {
            continue;
        }
        idx[d] = i;
        let ev = even && axis.even(i);
        if d + 1 < axes.len() {
            walk(axes, logw, cutoff, d + 1, p, ev, idx, f, acc);
        } else {
            let v = f(idx);
            acc.fine += v;
            acc.mass += v.norm();
            if ev {
                acc.coarse += v;
            }
            acc.nodes += 1;
        }
    }
}
