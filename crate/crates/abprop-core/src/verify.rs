//! Numerical checks of the identities and limits the propagator must obey.
//!
//! Every check returns a [`CheckReport`]; `passed` is exactly
//! `discrepancy ≤ tolerance`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::cover::segment_word;
use crate::error::{Error, Result};
use crate::geometry::{polar_around, polar_to_point, PlanePoint, PolarAround, Vortex, VortexConfig};
use crate::kernels::{end_shape, free_kernel, ChainVariant, EvalMode, Flux};
use crate::propagator::{k_closed, k_schulman_truncated, PropagatorRequest, PropagatorResult};
use crate::quadrature::{integrate_line, QuadratureSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub details: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn new(name: &str, discrepancy: f64, tolerance: f64) -> Self {
        CheckReport {
            name: String::from(name),
            discrepancy,
            tolerance,
            passed: discrepancy <= tolerance,
            details: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.details.insert(String::from(key), value);
        self
    }

    /// Replaces the tolerance and recomputes `passed`.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.discrepancy <= tolerance;
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }
}

fn check_strip(alpha: f64, theta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "must lie in (0, 1)",
        });
    }
    if !(theta.abs() < PI) {
        return Err(Error::ValidityDomain { angle: theta });
    }
    Ok(())
}

/// `Σ_{|k|≤k_max} e^{2πi·sign·αk}[(θ+2kπ−π+is)⁻¹ − (θ+2kπ+π+is)⁻¹]`.
pub fn partial_sum_identity(alpha: f64, theta: f64, s: f64, k_max: u64, sign: f64) -> Complex64 {
    let term = |k: i64| {
        let z = Complex64::new(theta + 2.0 * PI * k as f64, s);
        let bracket = Complex64::new(2.0 * PI, 0.0) / (z * z - PI * PI);
        crate::cover::unit_phase(sign * alpha * k as f64) * bracket
    };
    // Smallest terms first.
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (1..=k_max as i64).rev() {
        acc += term(k) + term(-k);
    }
    acc + term(0)
}

/// `−2 sin(πα)·e^{−α(s−iθ)}/(1+e^{−s+iθ})`.
pub fn sum_identity_closed(alpha: f64, theta: f64, s: f64) -> Complex64 {
    end_shape(alpha, Complex64::new(s, 0.0), theta) * (-2.0 * (PI * alpha).sin())
}

/// Bound on `|Σ_{|k|>k_max}|` of the bracket terms, `1/(π k_max)`.
pub fn sum_identity_tail(k_max: u64) -> f64 {
    1.0 / (PI * k_max.max(1) as f64)
}

/// Partial winding sum against its closed form. The winding weight is
/// `e^{−2πiαk}`; the discrepancy with the opposite weight is reported as a
/// detail.
pub fn check_sum_identity(alpha: f64, theta: f64, s: f64, k_max: u64) -> Result<CheckReport> {
    check_strip(alpha, theta)?;
    let closed = sum_identity_closed(alpha, theta, s);
    let lhs = partial_sum_identity(alpha, theta, s, k_max, -1.0);
    let other = partial_sum_identity(alpha, theta, s, k_max, 1.0);
    let tail = sum_identity_tail(k_max);
    let roundoff = 8.0 * f64::EPSILON * (k_max as f64).sqrt().max(1.0);
    Ok(CheckReport::new("sum_identity", (lhs - closed).norm(), tail + roundoff)
        .with("alpha", alpha)
        .with("theta", theta)
        .with("s", s)
        .with("k_max", k_max as f64)
        .with("closed_re", closed.re)
        .with("closed_im", closed.im)
        .with("partial_re", lhs.re)
        .with("partial_im", lhs.im)
        .with("tail_bound", tail)
        .with("opposite_weight_discrepancy", (other - closed).norm()))
}

/// `∫ e^{(θ+is)τ}/sin(π(α+iτ)) dτ` against `2e^{−α(s−iθ)}/(1+e^{−s+iθ})`.
pub fn check_integral_identity(alpha: f64, theta: f64, s: f64, quad: &QuadratureSpec) -> Result<CheckReport> {
    check_strip(alpha, theta)?;
    let (ea, eb) = (
        Complex64::from_polar(1.0, PI * alpha),
        Complex64::from_polar(1.0, -PI * alpha),
    );
    let two_i = Complex64::new(0.0, 2.0);
    // 1/sin(π(α+iτ)) with the growing exponential divided out.
    let f = |tau: f64| {
        if tau >= 0.0 {
            Complex64::new((theta - PI) * tau, s * tau).exp() * two_i / (ea * (-2.0 * PI * tau).exp() - eb)
        } else {
            Complex64::new((theta + PI) * tau, s * tau).exp() * two_i / (ea - eb * (2.0 * PI * tau).exp())
        }
    };
    let half_width = (40.0 / (PI - theta.abs())).min(1e4);
    let out = integrate_line(f, half_width, quad)?;
    let closed = end_shape(alpha, Complex64::new(s, 0.0), theta) * 2.0;
    let tol = 1e-8f64.max(out.err_est + out.tail_bound);
    Ok(CheckReport::new("integral_identity", (out.value - closed).norm(), tol)
        .with("alpha", alpha)
        .with("theta", theta)
        .with("s", s)
        .with("quad_err", out.err_est)
        .with("tail_bound", out.tail_bound)
        .with("tail_dominated", if out.tail_dominated { 1.0 } else { 0.0 }))
}

/// Euler operator `(r∂_r + t∂_t)` applied to `(θ + i log(t/r))⁻¹` by central
/// differences; the exact result is zero.
pub fn check_auxrel_euler(t: f64, r: f64, theta: f64, h: f64) -> Result<CheckReport> {
    if !(t > 0.0 && r > 0.0 && h > 0.0 && h < t.min(r)) {
        return Err(Error::InvalidParameter {
            name: "t, r, h",
            reason: "need t, r > 0 and 0 < h < min(t, r)",
        });
    }
    if theta == 0.0 && t == r {
        return Err(Error::Singularity);
    }
    let f = |t: f64, r: f64| Complex64::new(1.0, 0.0) / Complex64::new(theta, (t / r).ln());
    let dr = (f(t, r + h) - f(t, r - h)) / (2.0 * h);
    let dt = (f(t + h, r) - f(t - h, r)) / (2.0 * h);
    let res = dr * r + dt * t;
    Ok(CheckReport::new("auxrel_euler", res.norm(), 1e-6)
        .with("t", t)
        .with("r", r)
        .with("theta", theta)
        .with("h", h)
        .with("value", f(t, r).norm()))
}

fn tau_of(req: &PropagatorRequest) -> Result<f64> {
    match req.mode {
        EvalMode::Euclidean { tau } => Ok(tau),
        _ => Err(Error::InvalidParameter {
            name: "mode",
            reason: "this check needs Euclidean mode",
        }),
    }
}

fn value_at(req: &PropagatorRequest, x: PlanePoint, tau: f64) -> Result<Complex64> {
    let r = req
        .clone()
        .with_endpoints(req.x0, x)
        .with_mode(EvalMode::euclidean(tau)?);
    Ok(k_closed(&r)?.value)
}

/// Relative residual `|(∂_τ − Δ)K|/|K|` of the five-point Laplacian and a
/// central time difference at `req.x`.
pub fn check_pde_residual(req: &PropagatorRequest, grid_step: f64, time_step: f64) -> Result<CheckReport> {
    let tau = tau_of(req)?;
    if !(grid_step > 0.0 && time_step > 0.0 && time_step < tau) {
        return Err(Error::InvalidParameter {
            name: "grid_step, time_step",
            reason: "steps must be positive and time_step < tau",
        });
    }
    let c = req.x;
    let h = grid_step;
    let nbrs = [
        PlanePoint::new(c.x + h, c.y),
        PlanePoint::new(c.x - h, c.y),
        PlanePoint::new(c.x, c.y + h),
        PlanePoint::new(c.x, c.y - h),
    ];
    if req.cfg.cut_at(c).is_some() || req.cfg.vortex_at(c).is_some() {
        return Err(Error::StencilCrossesCut);
    }
    for p in nbrs {
        match segment_word(c, p, &req.cfg) {
            Some(w) if w.is_identity() && req.cfg.cut_at(p).is_none() => {}
            _ => return Err(Error::StencilCrossesCut),
        }
    }
    let k0 = value_at(req, c, tau)?;
    let mut lap = k0 * -4.0;
    for p in nbrs {
        lap += value_at(req, p, tau)?;
    }
    lap /= h * h;
    let dt = (value_at(req, c, tau + time_step)? - value_at(req, c, tau - time_step)?) / (2.0 * time_step);
    let res = (dt - lap).norm() / k0.norm();
    Ok(CheckReport::new("pde_residual", res, 1e-3)
        .with("h", h)
        .with("time_step", time_step)
        .with("abs_k", k0.norm()))
}

/// Convergence order of [`check_pde_residual`] under halving of both steps.
/// The discrepancy is `2 − order`, with tolerance `0.2`.
pub fn check_pde_order(req: &PropagatorRequest, grid_step: f64) -> Result<CheckReport> {
    let coarse = check_pde_residual(req, grid_step, grid_step)?;
    let fine = check_pde_residual(req, 0.5 * grid_step, 0.5 * grid_step)?;
    let order = (coarse.discrepancy / fine.discrepancy).log2();
    let order = if order.is_nan() { f64::NEG_INFINITY } else { order };
    Ok(CheckReport::new("pde_order", 2.0 - order, 0.2)
        .with("order", order)
        .with("residual_h", coarse.discrepancy)
        .with("residual_h_half", fine.discrepancy)
        .with("h", grid_step))
}

/// Jump of `K` across the cut of `probe.center`. `K` is evaluated at polar
/// angles `π − ε` and `−π + ε` around the vortex, for `ε` and `ε/2`, and
/// `K(π) − e^{2πiσ}K(−π)` is extrapolated linearly to `ε = 0`.
pub fn check_boundary_condition(base: &PropagatorRequest, probe: PolarAround, eps: f64) -> Result<CheckReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: "must lie in (0, 0.5)",
        });
    }
    if !(probe.r > 0.0) {
        return Err(Error::InvalidParameter {
            name: "probe.r",
            reason: "probe must be off the vortex",
        });
    }
    let v = probe.center;
    let jump = crate::cover::unit_phase(base.flux.sigma(v));
    let at = |theta: f64| -> Result<Complex64> {
        let p = polar_to_point(
            PolarAround {
                center: v,
                r: probe.r,
                theta,
            },
            &base.cfg,
        );
        Ok(k_closed(&base.clone().with_endpoints(base.x0, p))?.value)
    };
    let mut deltas = [Complex64::new(0.0, 0.0); 2];
    let mut uppers = [Complex64::new(0.0, 0.0); 2];
    for (i, e) in [eps, 0.5 * eps].into_iter().enumerate() {
        let up = at(PI - e)?;
        let down = at(-PI + e)?;
        deltas[i] = up - jump * down;
        uppers[i] = up;
    }
    let d0 = deltas[1] * 2.0 - deltas[0];
    let k0 = uppers[1] * 2.0 - uppers[0];
    let rel = d0.norm() / k0.norm();
    let name = match v {
        Vortex::A => "boundary_condition_a",
        Vortex::B => "boundary_condition_b",
    };
    Ok(CheckReport::new(name, rel, 1e-3)
        .with("eps", eps)
        .with("r", probe.r)
        .with("raw_eps", deltas[0].norm() / uppers[0].norm())
        .with("raw_eps_half", deltas[1].norm() / uppers[1].norm()))
}

/// `e^{−z} I_ν(z)` by its positive power series.
pub fn scaled_bessel_i(nu: f64, z: f64) -> Result<f64> {
    if !(nu >= 0.0 && z >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "nu, z",
            reason: "need nu >= 0 and z >= 0",
        });
    }
    if z == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    let lz = (0.5 * z).ln();
    let mut sum = 0.0;
    let mut k = 0u32;
    loop {
        let kf = k as f64;
        let lt = (2.0 * kf + nu) * lz - libm::lgamma(kf + 1.0) - libm::lgamma(kf + nu + 1.0) - z;
        let t = lt.exp();
        sum += t;
        if kf > 0.5 * z && t <= 1e-18 * sum {
            return Ok(sum);
        }
        k += 1;
        if k > 100_000 {
            return Err(Error::SeriesNonConvergence { tail: t });
        }
    }
}

/// Single-flux heat kernel
/// `(1/4πτ)e^{−(r−r₀)²/4τ} Σ_{|m|≤m_max} e^{−z}I_{|m+α|}(z) e^{i(m+α)Δθ}`,
/// `z = r r₀/2τ`, with `Δθ` the difference of polar angles about the vortex
/// taken in `(−π, π]` each.
pub fn one_vortex_oracle(alpha: f64, tau: f64, x0: PlanePoint, x: PlanePoint, m_max: u32) -> Result<Complex64> {
    let (r0, th0) = (x0.x.hypot(x0.y), x0.y.atan2(x0.x));
    let (r, th) = (x.x.hypot(x.y), x.y.atan2(x.x));
    let th0 = if th0 == -PI { PI } else { th0 };
    let th = if th == -PI { PI } else { th };
    let z = r * r0 / (2.0 * tau);
    let dth = th - th0;
    let mut sum = Complex64::new(0.0, 0.0);
    let m_max = m_max as i64;
    for m in (-m_max..=m_max).rev() {
        let nu = (m as f64 + alpha).abs();
        sum += Complex64::from_polar(scaled_bessel_i(nu, z)?, (m as f64 + alpha) * dth);
    }
    // Tail: e^{−z}I_ν(z) ≤ (z/2)^ν/Γ(ν+1), summed over |m| > m_max.
    let mut tail = 0.0;
    for j in 1..=200 {
        let nu = (m_max + j) as f64 - alpha;
        let t = (nu * (0.5 * z).ln() - libm::lgamma(nu + 1.0)).exp() * 2.0;
        tail += t;
        if t < 1e-30 {
            break;
        }
    }
    if !(tail <= 1e-12 * sum.norm()) {
        return Err(Error::SeriesNonConvergence { tail });
    }
    let pre = (-(r - r0) * (r - r0) / (4.0 * tau)).exp() / (4.0 * PI * tau);
    Ok(sum * pre)
}

/// Smallest `m_max` whose series tail is negligible for `z = r r₀/2τ`.
pub fn oracle_m_max(z: f64) -> u32 {
    (z + 12.0 * z.max(1.0).sqrt() + 40.0).ceil() as u32
}

/// `K_closed` with `β = 0` against [`one_vortex_oracle`], relative deviation
/// with tolerance `1e−6`. Vortex `a` is at the origin of `cfg`.
pub fn check_one_vortex_oracle(
    alpha: f64,
    mode: &EvalMode,
    x0: PlanePoint,
    x: PlanePoint,
    cfg: &VortexConfig,
    m_max: u32,
) -> Result<CheckReport> {
    let EvalMode::Euclidean { tau } = *mode else {
        return Err(Error::InvalidParameter {
            name: "mode",
            reason: "this check needs Euclidean mode",
        });
    };
    let flux = Flux::new(alpha, 0.0)?;
    let req = PropagatorRequest::new(x0, x, *mode, flux, *cfg).with_n_max(1);
    let closed = k_closed(&req)?;
    let c0 = cfg.to_canonical(x0);
    let c1 = cfg.to_canonical(x);
    let oracle = one_vortex_oracle(alpha, tau, c0, c1, m_max)?;
    let rel = (closed.value - oracle).norm() / oracle.norm();
    Ok(CheckReport::new("one_vortex_oracle", rel, 1e-6)
        .with("alpha", alpha)
        .with("tau", tau)
        .with("closed_re", closed.value.re)
        .with("closed_im", closed.value.im)
        .with("oracle_re", oracle.re)
        .with("oracle_im", oracle.im))
}

/// Near integer flux the kernel approaches the twisted free kernel
/// `ζ_a·K₀`; the deviation is of order `sin(π(1−α))`.
pub fn check_integer_flux_limit(alpha: f64, tau: f64, x0: PlanePoint, x: PlanePoint) -> Result<CheckReport> {
    let cfg = VortexConfig::canonical(1.0)?;
    let mode = EvalMode::euclidean(tau)?;
    let req = PropagatorRequest::new(x0, x, mode, Flux::new(alpha, 0.0)?, cfg).with_n_max(1);
    let closed = k_closed(&req)?;
    let direct = closed.terms[0].value;
    let free = free_kernel(&mode, x.dist(x0));
    let rel = (closed.value - direct).norm() / free.norm();
    Ok(
        CheckReport::new("integer_flux_limit", rel, 10.0 * (PI * (1.0 - alpha)).sin())
            .with("alpha", alpha)
            .with("direct_over_free", (direct / free).norm()),
    )
}

/// Cell-centred composition grid: an `n × n` square of half width
/// `half_width` centred at the midpoint of the endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositionGrid {
    pub n: usize,
    pub half_width: f64,
}

impl CompositionGrid {
    /// Covers ±6 Gaussian widths around the endpoints.
    pub fn covering(n: usize, tau: f64, x0: PlanePoint, x: PlanePoint) -> Self {
        CompositionGrid {
            n,
            half_width: 0.5 * x.dist(x0) + 6.0 * (2.0 * tau).sqrt(),
        }
    }
}

/// `K(τ, x, x₀)` against the midpoint-rule composition
/// `∫ K(sτ, x, y) K((1−s)τ, y, x₀) dy`.
pub fn check_chapman_kolmogorov(req: &PropagatorRequest, split: f64, grid: &CompositionGrid) -> Result<CheckReport> {
    check_chapman_kolmogorov_with(req, split, grid, |reqs| {
        reqs.iter().map(|r| k_closed(r).map(|o| o.value)).collect()
    })
}

/// [`check_chapman_kolmogorov`] with a caller-supplied batch evaluator, so
/// that the kernel evaluations can be distributed. `eval` must return one
/// result per request, in order.
pub fn check_chapman_kolmogorov_with<F>(
    req: &PropagatorRequest,
    split: f64,
    grid: &CompositionGrid,
    eval: F,
) -> Result<CheckReport>
where
    F: FnOnce(&[PropagatorRequest]) -> Vec<Result<Complex64>>,
{
    let tau = tau_of(req)?;
    if !(split > 0.0 && split < 1.0) || grid.n < 2 || !(grid.half_width > 0.0) {
        return Err(Error::InvalidParameter {
            name: "split, grid",
            reason: "need 0 < split < 1, n >= 2 and a positive half width",
        });
    }
    let mid = PlanePoint::new(0.5 * (req.x0.x + req.x.x), 0.5 * (req.x0.y + req.x.y));
    let h = 2.0 * grid.half_width / grid.n as f64;
    let first = req.clone().with_mode(EvalMode::euclidean(split * tau)?);
    let second = req.clone().with_mode(EvalMode::euclidean((1.0 - split) * tau)?);
    let mut cells = Vec::new();
    let mut batch = alloc::vec![req.clone()];
    for j in 0..grid.n {
        for i in 0..grid.n {
            let y = PlanePoint::new(
                mid.x - grid.half_width + (i as f64 + 0.5) * h,
                mid.y - grid.half_width + (j as f64 + 0.5) * h,
            );
            if req.cfg.vortex_at(y).is_some() {
                continue;
            }
            cells.push(i == 0 || j == 0 || i + 1 == grid.n || j + 1 == grid.n);
            batch.push(first.clone().with_endpoints(y, req.x));
            batch.push(second.clone().with_endpoints(req.x0, y));
        }
    }
    let values = eval(&batch);
    if values.len() != batch.len() {
        return Err(Error::InvalidParameter {
            name: "eval",
            reason: "batch evaluator returned the wrong number of values",
        });
    }
    let mut it = values.into_iter();
    let direct = it.next().unwrap_or(Err(Error::NonFinite))?;
    let mut total = Complex64::new(0.0, 0.0);
    let mut edge = 0.0;
    let mut mass = 0.0;
    for on_edge in cells {
        let a = it.next().unwrap_or(Err(Error::NonFinite))?;
        let b = it.next().unwrap_or(Err(Error::NonFinite))?;
        let v = a * b * (h * h);
        total += v;
        mass += v.norm();
        if on_edge {
            edge += v.norm();
        }
    }
    let rel = (total - direct).norm() / direct.norm();
    let tol = 5e-2;
    let edge_fraction = edge / mass.max(f64::MIN_POSITIVE);
    Ok(CheckReport::new("chapman_kolmogorov", rel, tol)
        .with("split", split)
        .with("grid_n", grid.n as f64)
        .with("half_width", grid.half_width)
        .with("edge_fraction", edge_fraction)
        .with(
            "support_warning",
            if edge_fraction * grid.n as f64 > 0.1 * tol {
                1.0
            } else {
                0.0
            },
        ))
}

/// `K_closed` against the truncated winding sum. The closed formula is also
/// evaluated with the mixed interior index; its deviation is reported as
/// `mixed_deviation`, and `mixed_agrees` is 1 if it also meets the tolerance.
pub fn check_schulman_agreement(req: &PropagatorRequest, k_max: u32) -> Result<CheckReport> {
    tau_of(req)?;
    let matched = k_closed(&req.clone().with_chain(ChainVariant::Matched))?;
    let mixed = k_closed(&req.clone().with_chain(ChainVariant::Mixed))?;
    // The oracle can't beat its own winding truncation, so ask less of it;
    // near-collinear paths put sharp peaks inside the time simplex, which
    // the graded rule only resolves after many levels.
    let mut spec = req.quad.with_rel_tol(req.quad.rel_tol.max(1e-8));
    spec.max_subdivisions = spec.max_subdivisions.max(40);
    let oracle = k_schulman_truncated(&req.clone().with_quad(spec), k_max)?;
    let scale = matched.value.norm();
    let dev = (matched.value - oracle.value).norm() / scale;
    let mixed_dev = (mixed.value - oracle.value).norm() / scale;
    let tol = 1e-4;
    Ok(CheckReport::new("schulman_agreement", dev, tol)
        .with("k_max", k_max as f64)
        .with("n_max", req.n_max as f64)
        .with("k_tail_bound", oracle.k_tail_bound / scale)
        .with("oracle_quad_err", oracle.quad_err / scale)
        .with("mixed_deviation", mixed_dev)
        .with("mixed_agrees", if mixed_dev <= tol { 1.0 } else { 0.0 }))
}

fn error_budget(r: &PropagatorResult) -> f64 {
    r.quad_err + r.truncation_bound + 1e-14 * r.value.norm()
}

/// `K(x, x₀)` against `conj K(x₀, x)`, to the combined error estimates.
pub fn check_hermiticity(req: &PropagatorRequest) -> Result<CheckReport> {
    let fwd = k_closed(req)?;
    let bwd = k_closed(&req.clone().with_endpoints(req.x, req.x0))?;
    let dev = (fwd.value - bwd.value.conj()).norm();
    Ok(CheckReport::new("hermiticity", dev, error_budget(&fwd) + error_budget(&bwd)).with("abs_k", fwd.value.norm()))
}

/// `|K|` at distances `radii` from `vortex` along the polar angle `theta`;
/// passes if the magnitudes strictly decrease. The discrepancy is the
/// largest ratio of consecutive magnitudes.
pub fn check_vortex_vanishing(
    req: &PropagatorRequest,
    vortex: Vortex,
    theta: f64,
    radii: &[f64],
) -> Result<CheckReport> {
    tau_of(req)?;
    let mut mags = Vec::with_capacity(radii.len());
    for &r in radii {
        let p = polar_to_point(
            PolarAround {
                center: vortex,
                r,
                theta,
            },
            &req.cfg,
        );
        mags.push(k_closed(&req.clone().with_endpoints(req.x0, p))?.value.norm());
    }
    let worst = mags.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let mut rep = CheckReport::new("vortex_vanishing", worst, 1.0 - 1e-9);
    for (i, m) in mags.iter().enumerate() {
        let key = match i {
            0 => "abs_k_0",
            1 => "abs_k_1",
            2 => "abs_k_2",
            3 => "abs_k_3",
            _ => continue,
        };
        rep = rep.with(key, *m);
    }
    Ok(rep)
}

/// Polar angle of `x` about `v`, exposed for probe construction.
pub fn probe_of(p: PlanePoint, v: Vortex, cfg: &VortexConfig) -> Result<PolarAround> {
    polar_around(p, v, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::heat_kernel;

    #[test]
    fn sum_identity_examples() {
        let r = check_sum_identity(0.5, 0.0, 0.0, 10_000).unwrap();
        assert!(r.passed && r.discrepancy < 1e-3, "{r:?}");
        assert!((r.detail("closed_re").unwrap() + 1.0).abs() < 1e-15);
        let r = check_sum_identity(0.3, 0.5, 1.0, 10_000).unwrap();
        assert!(r.passed, "{r:?}");
        let r = check_sum_identity(1e-9, 0.4, 0.2, 1000).unwrap();
        assert!(r.detail("closed_re").unwrap().abs() < 1e-8);
    }

    #[test]
    fn sum_identity_domain() {
        assert_eq!(
            check_sum_identity(0.3, PI, 0.0, 10),
            Err(Error::ValidityDomain { angle: PI })
        );
        assert!(check_sum_identity(0.0, 0.1, 0.0, 10).is_err());
    }

    #[test]
    fn integral_identity_examples() {
        let q = QuadratureSpec::default();
        let r = check_integral_identity(0.5, 0.0, 0.0, &q).unwrap();
        assert!(r.discrepancy < 1e-8, "{r:?}");
        let r = check_integral_identity(0.25, 1.0, -0.5, &q).unwrap();
        assert!(r.discrepancy < 1e-8, "{r:?}");
    }

    #[test]
    fn integral_identity_flags_tail_near_cut() {
        let q = QuadratureSpec::default();
        let r = check_integral_identity(0.5, PI - 1e-4, 0.0, &q).unwrap();
        assert_eq!(r.detail("tail_dominated"), Some(1.0));
    }

    #[test]
    fn auxrel_examples() {
        assert!(check_auxrel_euler(2.0, 1.0, 1.0, 1e-4).unwrap().discrepancy < 1e-6);
        assert!(check_auxrel_euler(1.0, 1.0, PI / 2.0, 1e-4).unwrap().discrepancy < 1e-6);
        assert_eq!(check_auxrel_euler(1.0, 1.0, 0.0, 1e-4), Err(Error::Singularity));
    }

    #[test]
    fn bessel_series_generating_function() {
        // Σ_m e^{−z}I_|m|(z) e^{imφ} = e^{z(cos φ − 1)}.
        let (z, phi) = (1.7, 0.9);
        let mut s = Complex64::new(0.0, 0.0);
        for m in -60i32..=60 {
            s += Complex64::from_polar(scaled_bessel_i(m.unsigned_abs() as f64, z).unwrap(), m as f64 * phi);
        }
        assert!((s.re - (z * (phi.cos() - 1.0)).exp()).abs() < 1e-14);
        assert!(s.im.abs() < 1e-15);
        // I_{1/2}(z) = sqrt(2/πz) sinh z.
        let v = scaled_bessel_i(0.5, 2.0).unwrap();
        assert!((v - (1.0 / PI).sqrt() * (2.0f64).sinh() * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn oracle_reduces_to_free_kernel() {
        let x0 = PlanePoint::new(0.7, 0.4);
        let x = PlanePoint::new(-0.2, 0.9);
        let v = one_vortex_oracle(0.0, 1.0, x0, x, 60).unwrap();
        assert!((v.re - heat_kernel(1.0, x.dist(x0))).abs() < 1e-16);
    }

    #[test]
    fn oracle_example() {
        let cfg = VortexConfig::canonical(4.0).unwrap();
        let th = PI / 3.0;
        let x0 = PlanePoint::new(1.0, 0.0);
        let x = PlanePoint::new(th.cos(), th.sin());
        let mode = EvalMode::euclidean(1.0).unwrap();
        let r = check_one_vortex_oracle(0.5, &mode, x0, x, &cfg, 60).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn report_invariant() {
        let r = CheckReport::new("x", f64::NAN, 1.0);
        assert!(!r.passed);
        assert!(CheckReport::new("x", 1.0, 1.0).passed);
    }
}
