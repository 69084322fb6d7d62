//! Propagator evaluators.
//!
//! * [`k_closed`]: the closed sum over alternating words. Each scattering term
//!   is an integral over log-ratio variables `s ∈ ℝⁿ`; in these variables the
//!   simplex measure `Π dt_j/t_j · δ(Σt − t)` is exactly `Π ds_j` and the
//!   Gaussian chain becomes `exp(iE/4t)` with
//!   `E = (Σ_j r_j e^{−S_j})(Σ_k r_k e^{S_k})`, `S_j = s_1 + ⋯ + s_j`.
//!   The integrand is entire apart from the poles of the end factors, so a
//!   product trapezoid rule on contours shifted away from those poles
//!   converges spectrally.
//! * [`k_path`]: one lift of a broken geodesic, integrated over the time
//!   simplex with [`integrate_simplex`].
//! * [`k_cover_free`]: the free propagator of the cover restricted to a sheet.
//! * [`k_schulman_truncated`]: the winding sum `Σ Λ(g⁻¹) K_γ` truncated at
//!   `|k_j| ≤ k_max`, an independent route to [`k_closed`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::cover::{
    chi_visible, enumerate_alternating_words, enumerate_winding_paths, lift_vertices, path_sheet, segment_word,
    vertex_exponents, AlternatingWord, GroupWord, WindingPath,
};
use crate::error::{Error, Result};
use crate::geometry::{opening_angles, sweep_angle, PlanePoint, Vortex, VortexConfig};
use crate::kernels::{
    end_shape, free_kernel, heat_kernel, interior_shape, kernel_z, vertex_v_unchecked, ChainVariant, EvalMode, Flux,
};
use crate::quadrature::{
    integrate_simplex, lattice_sum_pruned, pruned_node_count, LatticeAxis, QuadratureSpec, SimplexDomain,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Node budget for one scattering term.
const MAX_TERM_NODES: usize = 30_000_000;

/// Largest tolerated magnitude inflation `e^X` from contour shifts.
const MAX_INFLATION: f64 = 2.5;

/// Everything needed to evaluate the propagator at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorRequest {
    pub x0: PlanePoint,
    pub x: PlanePoint,
    pub mode: EvalMode,
    pub flux: Flux,
    pub cfg: VortexConfig,
    pub n_max: usize,
    pub quad: QuadratureSpec,
    pub chain: ChainVariant,
}

impl PropagatorRequest {
    /// Request with `n_max = 4`, default quadrature and matched chain indices.
    pub fn new(x0: PlanePoint, x: PlanePoint, mode: EvalMode, flux: Flux, cfg: VortexConfig) -> Self {
        PropagatorRequest {
            x0,
            x,
            mode,
            flux,
            cfg,
            n_max: 4,
            quad: QuadratureSpec::default(),
            chain: ChainVariant::Matched,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_quad(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn with_chain(mut self, chain: ChainVariant) -> Self {
        self.chain = chain;
        self
    }

    pub fn with_endpoints(mut self, x0: PlanePoint, x: PlanePoint) -> Self {
        self.x0 = x0;
        self.x = x;
        self
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_flux(mut self, flux: Flux) -> Self {
        self.flux = flux;
        self
    }
}

/// Which endpoint a warning refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Source,
    Target,
}

/// Non-fatal conditions attached to a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Warning {
    /// The endpoint lies on a cut; the `θ = +π` one-sided limit was used.
    EndpointOnCut { endpoint: Endpoint, cut: Vortex },
}

/// One word's contribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub word: AlternatingWord,
    pub value: Complex64,
    pub err_est: f64,
    /// A priori bound on `|value|`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorResult {
    pub value: Complex64,
    /// Terms in length-then-lexicographic word order, the free term first.
    pub terms: Vec<Term>,
    /// Bound on the omitted words of length `> n_max`.
    pub truncation_bound: f64,
    /// Sum of the per-term quadrature error estimates.
    pub quad_err: f64,
    pub warnings: Vec<Warning>,
}

impl PropagatorResult {
    pub fn term(&self, word: &AlternatingWord) -> Option<&Term> {
        self.terms.iter().find(|t| &t.word == word)
    }
}

/// A factor of the scattering integrand restricted to one axis.
#[derive(Clone, Copy, Debug)]
enum Part {
    /// `e^{−σ(s−iθ)}/(1+e^{−s+iθ})`.
    End { sigma: f64, theta: f64 },
    /// `e^{−σ s}`.
    Numerator { sigma: f64 },
    /// `1/(1+e^{−s})`.
    Denominator,
}

impl Part {
    fn eval(&self, s: Complex64) -> Complex64 {
        match *self {
            Part::End { sigma, theta } => end_shape(sigma, s, theta),
            Part::Numerator { sigma } => (-s * sigma).exp(),
            Part::Denominator => interior_shape(0.0, s, s),
        }
    }
}

/// Integration plan of one scattering term.
#[derive(Clone, Debug)]
struct TermPlan {
    radii: Vec<f64>,
    parts: Vec<Vec<Part>>,
    /// `(−1)ⁿ Π sin(πσ_j)/π`, times `ζ` for a single vertex.
    pref: Complex64,
    shifts: Vec<f64>,
    inflation: f64,
    scale: f64,
    angle: f64,
}

impl TermPlan {
    fn dims(&self) -> usize {
        self.radii.len() - 1
    }

    fn build(
        word: &AlternatingWord,
        x0: PlanePoint,
        x: PlanePoint,
        flux: &Flux,
        cfg: &VortexConfig,
        mode: &EvalMode,
        chain: ChainVariant,
    ) -> Result<Self> {
        let seq = word.vortices();
        let n = seq.len();
        debug_assert!(n >= 1);
        let mut radii = Vec::with_capacity(n + 1);
        radii.push(x0.dist(cfg.position(seq[0])));
        for _ in 1..n {
            radii.push(cfg.rho());
        }
        radii.push(x.dist(cfg.position(seq[n - 1])));
        let strength: f64 = seq.iter().map(|&c| flux.strength(c)).product();
        let mut parts = vec![Vec::new(); n];
        let pref;
        if n == 1 {
            let c = seq[0];
            let sw = sweep_angle(c, x0, x, cfg)?;
            let zeta = Complex64::from_polar(1.0, flux.sigma(c) * sw.eta);
            parts[0].push(Part::End {
                sigma: flux.sigma(c),
                theta: sw.reduced,
            });
            pref = -zeta * strength;
        } else {
            let (theta0, theta) = opening_angles(word, x0, x, cfg)?;
            parts[0].push(Part::End {
                sigma: flux.sigma(seq[0]),
                theta: theta0,
            });
            for j in 1..n - 1 {
                let sigma = flux.sigma(seq[j]);
                parts[j].push(Part::Numerator { sigma });
                let den = match chain {
                    ChainVariant::Matched => j,
                    ChainVariant::Mixed => j + 1,
                };
                parts[den].push(Part::Denominator);
            }
            parts[n - 1].push(Part::End {
                sigma: flux.sigma(seq[n - 1]),
                theta,
            });
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            pref = Complex64::new(sign * strength, 0.0);
        }
        let mut plan = TermPlan {
            radii,
            parts,
            pref,
            shifts: vec![0.0; n],
            inflation: 0.0,
            scale: mode.scale(),
            angle: mode.angle(),
        };
        plan.choose_shifts();
        Ok(plan)
    }

    /// Shifts the end axes toward the side away from the nearest pole, as far
    /// as decay and magnitude inflation allow.
    fn choose_shifts(&mut self) {
        let base = 0.3 * self.angle;
        let mut wanted = vec![0.0; self.dims()];
        for (d, parts) in self.parts.iter().enumerate() {
            for p in parts {
                if let Part::End { theta, .. } = *p {
                    if PI - theta.abs() < 1.0 {
                        wanted[d] = if theta >= 0.0 { base } else { -base };
                    }
                }
            }
        }
        let mut lambda = 1.0;
        for _ in 0..40 {
            self.shifts = wanted.iter().map(|y| y * lambda).collect();
            self.inflation = self.inflation_of(&self.shifts);
            if self.inflation <= MAX_INFLATION.ln() + 1.0 {
                break;
            }
            lambda *= 0.8;
        }
    }

    fn pair_shift(shifts: &[f64], j: usize, k: usize) -> f64 {
        shifts[j..k].iter().sum::<f64>()
    }

    fn inflation_of(&self, shifts: &[f64]) -> f64 {
        let r = &self.radii;
        let (sphi, phi) = (self.angle.sin(), self.angle);
        let mut x = 0.0;
        for j in 0..r.len() {
            for k in j + 1..r.len() {
                let dy = Self::pair_shift(shifts, j, k).abs();
                x += 2.0 * r[j] * r[k] * (sphi - (phi - dy).sin());
            }
        }
        x / (4.0 * self.scale)
    }

    fn profile(&self, d: usize) -> AxisProfile {
        let y = self.shifts[d];
        let r = &self.radii;
        let t = self.scale;
        let phi = self.angle;
        let mut p = 0.0;
        let mut m = 0.0;
        let mut inv_min = 1.0;
        let mut pole = f64::INFINITY;
        for part in &self.parts[d] {
            match *part {
                Part::End { sigma, theta } => {
                    p += sigma;
                    m += 1.0 - sigma;
                    inv_min /= denominator_floor(theta - y);
                    pole = pole.min(pole_distance(theta, y));
                }
                Part::Numerator { sigma } => {
                    p += sigma;
                    m -= sigma;
                }
                Part::Denominator => {
                    m += 1.0;
                    inv_min /= denominator_floor(-y);
                    pole = pole.min(pole_distance(0.0, y));
                }
            }
        }
        let decay = r[d] * r[d + 1] * (phi - y.abs()).sin() / (2.0 * t);
        let mut curvature = 0.0;
        let mut worst_dy: f64 = 0.0;
        for j in 0..=d {
            for k in d + 1..r.len() {
                curvature += 2.0 * r[j] * r[k];
                worst_dy = worst_dy.max(Self::pair_shift(&self.shifts, j, k).abs());
            }
        }
        curvature /= 4.0 * t;
        let strip = (phi - worst_dy).max(0.0).min(pole) * 0.98;
        AxisProfile {
            decay,
            p,
            m,
            inv_min,
            curvature,
            strip,
        }
    }

    /// A priori bound on the term magnitude, with the per-axis profiles.
    fn bound(&self) -> (f64, Vec<AxisProfile>) {
        let n = self.dims();
        let sum_r: f64 = self.radii.iter().sum();
        let profiles: Vec<AxisProfile> = (0..n).map(|d| self.profile(d)).collect();
        let mut log_b = -self.angle.sin() * sum_r * sum_r / (4.0 * self.scale) + self.inflation;
        let mut b = self.pref.norm() / (4.0 * PI * self.scale);
        for pr in &profiles {
            b *= pr.inv_min * pr.integral();
            log_b += pr.log_peak();
        }
        (b * log_b.exp(), profiles)
    }
}

/// Lower bound of `|1 + ρe^{iψ}|` over `ρ ∈ (0, 1]`.
fn denominator_floor(psi: f64) -> f64 {
    if psi.cos() >= 0.0 {
        1.0
    } else {
        psi.sin().abs()
    }
}

/// Distance from the line `Im s = y` to the poles `s = i(θ − (2m+1)π)`.
fn pole_distance(theta: f64, y: f64) -> f64 {
    let base = theta - PI;
    let mut best = f64::INFINITY;
    for m in -2..=2 {
        best = best.min((y - (base - 2.0 * PI * m as f64)).abs());
    }
    best
}

/// Per-axis envelope `exp(−decay·(cosh x − 1) − p·x)` for `x > 0` and
/// `exp(−decay·(cosh x − 1) + m·x)` for `x < 0`.
#[derive(Clone, Copy, Debug)]
struct AxisProfile {
    decay: f64,
    p: f64,
    m: f64,
    inv_min: f64,
    curvature: f64,
    strip: f64,
}

impl AxisProfile {
    fn log_env(&self, x: f64) -> f64 {
        let base = -self.decay * (x.cosh() - 1.0);
        if x >= 0.0 {
            base - self.p * x
        } else {
            base + self.m * x
        }
    }

    fn argmax(&self) -> (f64, f64) {
        let right = if self.p < 0.0 {
            (-self.p / self.decay).asinh()
        } else {
            0.0
        };
        let left = if self.m < 0.0 {
            (self.m / self.decay).asinh()
        } else {
            0.0
        };
        let (a, b) = (self.log_env(right), self.log_env(left));
        if a >= b {
            (right, a)
        } else {
            (left, b)
        }
    }

    fn log_peak(&self) -> f64 {
        self.argmax().1
    }

    /// Points where the envelope has dropped by `e^{−drop}` from its peak.
    fn range(&self, drop: f64) -> (f64, f64) {
        let (x0, peak) = self.argmax();
        let level = peak - drop;
        let find = |dir: f64| {
            let mut lo = x0;
            let mut hi = x0 + dir;
            while self.log_env(hi) > level && (hi - x0).abs() < 400.0 {
                lo = hi;
                hi = x0 + 2.0 * (hi - x0);
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.log_env(mid) > level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        (find(-1.0), find(1.0))
    }

    /// `∫ exp(log_env(x) − log_peak) dx`, slightly inflated.
    fn integral(&self) -> f64 {
        let (a, b) = self.range(45.0);
        let peak = self.log_peak();
        let steps = 2000;
        let h = (b - a) / steps as f64;
        let mut s = 0.0;
        for i in 0..=steps {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            s += w * (self.log_env(a + h * i as f64) - peak).exp();
        }
        1.02 * s * h
    }

    /// Largest step whose aliasing error is below `e^{−budget}`.
    fn step(&self, budget: f64) -> f64 {
        let strip = self.strip.max(1e-6);
        let c = self.curvature;
        let gain = |h: f64| {
            let w = 2.0 * PI / h;
            let v = if c > 0.0 && w < c {
                (w / c).asin().min(strip)
            } else {
                strip
            };
            w * v - c * (1.0 - v.cos())
        };
        let (mut lo, mut hi) = (1e-4, 2.0);
        if gain(hi) >= budget {
            return hi;
        }
        for _ in 0..80 {
            let mid = (lo * hi).sqrt();
            if gain(mid) >= budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Evaluates one scattering term to the absolute accuracy `target`.
fn integrate_term(
    plan: &TermPlan,
    mode: &EvalMode,
    target: f64,
    quad: &QuadratureSpec,
) -> Result<(Complex64, f64, f64)> {
    let (bound, profiles) = plan.bound();
    if plan.pref.norm() == 0.0 {
        return Ok((Complex64::new(0.0, 0.0), 0.0, 0.0));
    }
    // The whole term is inside the error budget.
    if bound <= target {
        return Ok((Complex64::new(0.0, 0.0), bound, bound));
    }
    let n = plan.dims();
    let tc = mode.contour_time();
    let kappa = I / (tc * 4.0);
    let sum_r: f64 = plan.radii.iter().sum();
    let e0 = sum_r * sum_r;
    let front = plan.pref * (kappa * e0).exp() / (I * tc * (4.0 * PI));
    let budget = ((bound / target.max(f64::MIN_POSITIVE)).ln() + 1.0).clamp(4.0, 42.0);
    let drop = budget + 2.0 + (n as f64).ln();
    let ranges: Vec<(f64, f64)> = profiles.iter().map(|p| p.range(drop)).collect();
    let mut steps: Vec<f64> = profiles.iter().map(|p| p.step(budget + 4.0)).collect();
    let halvings = quad.max_subdivisions.min(5);
    let mut best: Option<(Complex64, f64)> = None;
    for _ in 0..=halvings {
        let axes: Vec<LatticeAxis> = (0..n)
            .map(|d| LatticeAxis {
                step: steps[d],
                shift: plan.shifts[d],
                k_lo: (ranges[d].0 / steps[d]).floor() as i64,
                k_hi: (ranges[d].1 / steps[d]).ceil() as i64,
            })
            .collect();
        let mut weights = Vec::with_capacity(n);
        let mut ep = Vec::with_capacity(n);
        let mut en = Vec::with_capacity(n);
        let mut logw = Vec::with_capacity(n);
        for (d, axis) in axes.iter().enumerate() {
            let peak = profiles[d].log_peak();
            let mut w = Vec::with_capacity(axis.len());
            let mut p = Vec::with_capacity(axis.len());
            let mut q = Vec::with_capacity(axis.len());
            let mut l = Vec::with_capacity(axis.len());
            for i in 0..axis.len() {
                let s = axis.node(i);
                let mut v = Complex64::new(1.0, 0.0);
                for part in &plan.parts[d] {
                    v *= part.eval(s);
                }
                w.push(v);
                p.push(s.exp());
                q.push((-s).exp());
                l.push(profiles[d].log_env(s.re) - peak);
            }
            weights.push(w);
            ep.push(p);
            en.push(q);
            logw.push(l);
        }
        if pruned_node_count(&axes, &logw, -drop, MAX_TERM_NODES + 1) > MAX_TERM_NODES {
            break;
        }
        let r = &plan.radii;
        let sum = lattice_sum_pruned(&axes, &logw, -drop, |idx| {
            let mut fwd = Complex64::new(1.0, 0.0);
            let mut bwd = Complex64::new(1.0, 0.0);
            let mut a = Complex64::new(r[0], 0.0);
            let mut b = Complex64::new(r[0], 0.0);
            let mut w = Complex64::new(1.0, 0.0);
            for d in 0..n {
                let i = idx[d];
                fwd *= ep[d][i];
                bwd *= en[d][i];
                a += bwd * r[d + 1];
                b += fwd * r[d + 1];
                w *= weights[d][i];
            }
            w * (kappa * (a * b - e0)).exp()
        });
        let value = front * sum.fine;
        let err = front.norm() * sum.err_est();
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        best = Some((value, err));
        if err <= target {
            return Ok((value, err, bound));
        }
        for h in steps.iter_mut() {
            *h *= 0.7;
        }
    }
    let (v, e) = best.unwrap_or((Complex64::new(0.0, 0.0), f64::INFINITY));
    Err(Error::NonConvergence {
        re: v.re,
        im: v.im,
        err_est: e,
    })
}

fn endpoint_warnings(req: &PropagatorRequest) -> Vec<Warning> {
    let mut out = Vec::new();
    for (endpoint, p) in [(Endpoint::Source, req.x0), (Endpoint::Target, req.x)] {
        if let Some(cut) = req.cfg.cut_at(p) {
            out.push(Warning::EndpointOnCut { endpoint, cut });
        }
    }
    out
}

/// Crossing phase `ζ_a ζ_b` of the direct term, using the on-cut tie-break.
fn direct_phase(req: &PropagatorRequest) -> Result<Complex64> {
    let mut zeta = Complex64::new(1.0, 0.0);
    for v in [Vortex::A, Vortex::B] {
        let sw = sweep_angle(v, req.x0, req.x, &req.cfg)?;
        zeta *= Complex64::from_polar(1.0, req.flux.sigma(v) * sw.eta);
    }
    Ok(zeta)
}

fn validate(req: &PropagatorRequest) -> Result<()> {
    req.cfg.check_endpoint(req.x0, "x0")?;
    req.cfg.check_endpoint(req.x, "x")?;
    req.quad.validate()
}

/// The closed word sum truncated at `req.n_max`.
pub fn k_closed(req: &PropagatorRequest) -> Result<PropagatorResult> {
    validate(req)?;
    let direct = direct_phase(req)? * free_kernel(&req.mode, req.x.dist(req.x0));
    let words = enumerate_alternating_words(req.n_max);
    let mut terms = Vec::with_capacity(words.len());
    terms.push(Term {
        word: AlternatingWord::empty(),
        value: direct,
        err_est: 0.0,
        bound: direct.norm(),
    });
    let mut reference = direct.norm();
    let n_long = words.iter().filter(|w| w.len() >= 2).count().max(1) as f64;
    for word in words.into_iter().skip(1) {
        let plan = TermPlan::build(&word, req.x0, req.x, &req.flux, &req.cfg, &req.mode, req.chain)?;
        let target = if word.len() == 1 {
            let (b, _) = plan.bound();
            0.5 * req.quad.rel_tol * direct.norm().max(1e-3 * b)
        } else {
            req.quad.rel_tol * reference / n_long
        };
        let target = target.max(req.quad.abs_tol);
        let (value, err_est, bound) = integrate_term(&plan, &req.mode, target, &req.quad)?;
        if word.len() == 1 {
            reference = reference.max(value.norm());
        }
        terms.push(Term {
            word,
            value,
            err_est,
            bound,
        });
    }
    let value = terms.iter().map(|t| t.value).sum();
    let quad_err = terms.iter().map(|t| t.err_est).sum();
    let truncation_bound = truncation_bound(req)?;
    Ok(PropagatorResult {
        value,
        terms,
        truncation_bound,
        quad_err,
        warnings: endpoint_warnings(req),
    })
}

/// Sum of a priori bounds of the words longer than `req.n_max`.
pub fn truncation_bound(req: &PropagatorRequest) -> Result<f64> {
    let mut total = 0.0;
    let mut first = None;
    for n in req.n_max + 1..req.n_max + 60 {
        let mut level = 0.0;
        for c in [Vortex::A, Vortex::B] {
            let word = AlternatingWord::starting_at(c, n);
            let plan = TermPlan::build(&word, req.x0, req.x, &req.flux, &req.cfg, &req.mode, req.chain)?;
            level += plan.bound().0;
        }
        total += level;
        let f = *first.get_or_insert(level);
        if level <= 1e-20 * f || level < 1e-300 {
            break;
        }
    }
    Ok(total)
}

/// Vertex angles of a lift: `θ₀+2πk₁, 2πk₂, …, θ+2πkₙ`, or the reduced
/// sweep angle plus `2πk` for a single vertex.
fn vertex_angles(path: &WindingPath, x0: PlanePoint, x: PlanePoint, cfg: &VortexConfig) -> Result<Vec<f64>> {
    let seq = path.word.vortices();
    let n = seq.len();
    let k = &path.windings;
    if n == 1 {
        let sw = sweep_angle(seq[0], x0, x, cfg)?;
        return Ok(vec![sw.reduced + 2.0 * PI * k[0] as f64]);
    }
    let (theta0, theta) = opening_angles(&path.word, x0, x, cfg)?;
    Ok((0..n)
        .map(|j| {
            let base = if j == 0 {
                theta0
            } else if j == n - 1 {
                theta
            } else {
                0.0
            };
            base + 2.0 * PI * k[j] as f64
        })
        .collect())
}

fn path_radii(word: &AlternatingWord, x0: PlanePoint, x: PlanePoint, cfg: &VortexConfig) -> Vec<f64> {
    let seq = word.vortices();
    let n = seq.len();
    let mut r = Vec::with_capacity(n + 1);
    r.push(x0.dist(cfg.position(seq[0])));
    for _ in 1..n {
        r.push(cfg.rho());
    }
    r.push(x.dist(cfg.position(seq[n - 1])));
    r
}

/// `Π_j Z(t_j e^{−iφ}, r_j)` on the contour.
fn z_product(mode: &EvalMode, times: &[f64], radii: &[f64]) -> Complex64 {
    if mode.is_euclidean() {
        let mut p = 1.0;
        for (&t, &r) in times.iter().zip(radii) {
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            p *= heat_kernel(t, r);
        }
        Complex64::new(p, 0.0)
    } else {
        let rot = mode.rotation();
        let mut p = Complex64::new(1.0, 0.0);
        for (&t, &r) in times.iter().zip(radii) {
            if t <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            p *= kernel_z(rot * t, r, true).unwrap_or(Complex64::new(0.0, 0.0));
        }
        p
    }
}

fn log_ratio(times: &[f64], radii: &[f64], m: usize) -> f64 {
    ((times[m] * radii[m - 1]) / (times[m - 1] * radii[m])).ln()
}

/// Checks that consecutive vertices of the lift see each other.
fn check_lift(path: &WindingPath, x0: PlanePoint, x: PlanePoint, cfg: &VortexConfig) -> Result<()> {
    let lift = lift_vertices(path, x0, x, cfg)?;
    for (segment, w) in lift.windows(2).enumerate() {
        if !chi_visible(&w[0], &w[1], cfg) {
            return Err(Error::Visibility { segment });
        }
    }
    Ok(())
}

/// Per-path term `K_γ`: the simplex integral of `Π V · Π Z` along the lift
/// fixed by `path`.
pub fn k_path(
    mode: &EvalMode,
    path: &WindingPath,
    x0: PlanePoint,
    x: PlanePoint,
    cfg: &VortexConfig,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    check_lift(path, x0, x, cfg)?;
    let n = path.word.len();
    if n == 0 {
        return kernel_z(mode.contour_time(), x.dist(x0), true);
    }
    let angles = vertex_angles(path, x0, x, cfg)?;
    let radii = path_radii(&path.word, x0, x, cfg);
    let domain = SimplexDomain::new(n, mode.scale())?;
    let out = integrate_simplex(
        |t| {
            let z = z_product(mode, t, &radii);
            if z == Complex64::new(0.0, 0.0) {
                return z;
            }
            let mut v = Complex64::new(1.0, 0.0);
            for m in 1..=n {
                v *= vertex_v_unchecked(angles[m - 1], log_ratio(t, &radii, m), 0.0);
            }
            v * z
        },
        &domain,
        quad,
    )?;
    Ok(out.value * mode.rotation().powi(n as i32))
}

/// Free propagator of the cover from `x₀` on the identity sheet to `x` on
/// `sheet`, summed over lifts with `|word| ≤ n_max` and `|k_j| ≤ k_max`.
#[allow(clippy::too_many_arguments)]
pub fn k_cover_free(
    mode: &EvalMode,
    x0: PlanePoint,
    x: PlanePoint,
    sheet: &GroupWord,
    cfg: &VortexConfig,
    n_max: usize,
    k_max: u32,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    cfg.check_endpoint(x0, "x0")?;
    cfg.check_endpoint(x, "x")?;
    let mut total = Complex64::new(0.0, 0.0);
    for word in enumerate_alternating_words(n_max) {
        for path in enumerate_winding_paths(&word, k_max) {
            if path_sheet(&path, x0, x, cfg)? == *sheet {
                total += k_path(mode, &path, x0, x, cfg, quad)?;
            }
        }
    }
    Ok(total)
}

/// Truncated winding sum with its error budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchulmanOutcome {
    pub value: Complex64,
    pub quad_err: f64,
    /// Bound on the omitted windings `|k_j| > k_max`.
    pub k_tail_bound: f64,
}

/// `Σ_γ Λ(g_γ⁻¹) K_γ` over words `|γ̄| ≤ n_max` and windings `|k_j| ≤ k_max`.
///
/// The winding sum factorizes over vertices, so it is carried out inside
/// the simplex integrand: vertex `j` contributes
/// `Σ_k e^{−2πiσ_j m_j(k)} V(Θ_j + 2πk, L_j)`.
pub fn k_schulman_truncated(req: &PropagatorRequest, k_max: u32) -> Result<SchulmanOutcome> {
    validate(req)?;
    if k_max < 2 {
        return Err(Error::InvalidParameter {
            name: "k_max",
            reason: "the factorized winding sum needs k_max >= 2",
        });
    }
    let (x0, x, cfg, mode) = (req.x0, req.x, &req.cfg, &req.mode);
    let seg = segment_word(x0, x, cfg).ok_or(Error::VortexOnSegment(Vortex::A))?;
    let mut value = seg.inverse().character(&req.flux) * kernel_z(mode.contour_time(), x.dist(x0), true)?;
    let mut quad_err = 0.0;
    let mut k_tail = 0.0;
    let kk = k_max as i64;
    let delta = 2.0 / (PI * (kk - 1) as f64);
    for word in enumerate_alternating_words(req.n_max).into_iter().skip(1) {
        let seq = word.vortices().to_vec();
        let n = seq.len();
        if seq.iter().any(|&c| req.flux.sigma(c) == 0.0) {
            continue;
        }
        let zero = WindingPath::new(word.clone(), vec![0; n])?;
        check_lift(&zero, x0, x, cfg)?;
        let base = vertex_angles(&zero, x0, x, cfg)?;
        let offsets = vertex_exponents(&zero, x0, x, cfg)?;
        let radii = path_radii(&word, x0, x, cfg);
        // Phase of winding k at vertex j: Λ(g_{c_j}^{-m}) with m = k + offset.
        let phases: Vec<Vec<Complex64>> = (0..n)
            .map(|j| {
                let sigma = req.flux.sigma(seq[j]);
                (-kk..=kk)
                    .map(|k| crate::cover::unit_phase(-sigma * (k + offsets[j]) as f64))
                    .collect()
            })
            .collect();
        let domain = SimplexDomain::new(n, mode.scale())?;
        let weight_sum = |t: &[f64], j: usize| -> (Complex64, f64) {
            let l = log_ratio(t, &radii, j + 1);
            let mut w = Complex64::new(0.0, 0.0);
            let mut a = 0.0;
            for (i, k) in (-kk..=kk).enumerate() {
                let v = vertex_v_unchecked(base[j] + 2.0 * PI * k as f64, l, 0.0);
                w += phases[j][i] * v;
                a += v.norm();
            }
            (w, a)
        };
        let out = integrate_simplex(
            |t| {
                let z = z_product(mode, t, &radii);
                if z == Complex64::new(0.0, 0.0) {
                    return z;
                }
                let mut w = Complex64::new(1.0, 0.0);
                for j in 0..n {
                    w *= weight_sum(t, j).0;
                }
                w * z
            },
            &domain,
            &req.quad,
        )?;
        let rot = mode.rotation().powi(n as i32);
        value += out.value * rot;
        quad_err += out.err_est;
        let coarse = req.quad.with_rel_tol(1e-3);
        let tail = integrate_simplex(
            |t| {
                let z = z_product(mode, t, &radii).norm();
                if z == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let mut with = 1.0;
                let mut without = 1.0;
                for j in 0..n {
                    let a = weight_sum(t, j).1;
                    with *= a + delta;
                    without *= a;
                }
                Complex64::new(z * (with - without), 0.0)
            },
            &domain,
            &coarse,
        )
        .map(|o| o.value.re * 1.01)
        .unwrap_or(f64::INFINITY);
        k_tail += tail;
    }
    Ok(SchulmanOutcome {
        value,
        quad_err,
        k_tail_bound: k_tail,
    })
}

/// The same truncated sum computed path by path with [`k_path`] and
/// [`GroupWord::character`] weights; cost grows like `(2k_max+1)ⁿ`.
pub fn k_schulman_enumerated(req: &PropagatorRequest, k_max: u32) -> Result<Complex64> {
    validate(req)?;
    let mut total = Complex64::new(0.0, 0.0);
    for word in enumerate_alternating_words(req.n_max) {
        for path in enumerate_winding_paths(&word, k_max) {
            let g = path_sheet(&path, req.x0, req.x, &req.cfg)?;
            let w = g.inverse().character(&req.flux);
            total += w * k_path(&req.mode, &path, req.x0, req.x, &req.cfg, &req.quad)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::heat_kernel;

    fn cfg() -> VortexConfig {
        VortexConfig::canonical(1.0).unwrap()
    }

    fn req(x0: PlanePoint, x: PlanePoint, alpha: f64, beta: f64, tau: f64) -> PropagatorRequest {
        PropagatorRequest::new(
            x0,
            x,
            EvalMode::euclidean(tau).unwrap(),
            Flux::new(alpha, beta).unwrap(),
            cfg(),
        )
    }

    #[test]
    fn zero_flux_is_free_kernel() {
        let r = req(PlanePoint::new(-0.5, 0.7), PlanePoint::new(1.7, -0.4), 0.0, 0.0, 0.8);
        let out = k_closed(&r).unwrap();
        let free = heat_kernel(0.8, r.x.dist(r.x0));
        assert!((out.value - Complex64::new(free, 0.0)).norm() < 1e-15);
        assert_eq!(out.terms.len(), 9);
        assert_eq!(out.truncation_bound, 0.0);
    }

    #[test]
    fn value_is_sum_of_terms() {
        let r = req(PlanePoint::new(0.3, 0.6), PlanePoint::new(0.8, -0.5), 0.4, 0.7, 1.0);
        let out = k_closed(&r).unwrap();
        let s: Complex64 = out.terms.iter().map(|t| t.value).sum();
        assert!((s - out.value).norm() <= 1e-15 * out.value.norm());
        for t in &out.terms[1..] {
            assert!(
                t.value.norm() <= t.bound * (1.0 + 1e-9),
                "{}: {} > {}",
                t.word,
                t.value.norm(),
                t.bound
            );
        }
    }

    #[test]
    fn single_vertex_term_matches_line_integral() {
        // Term for (a) written in t₀ ∈ (0, τ) and integrated in one dimension.
        let x0 = PlanePoint::new(0.4, 0.9);
        let x = PlanePoint::new(-0.3, -0.6);
        let (alpha, tau) = (0.35, 0.9);
        let r = req(x0, x, alpha, 0.0, tau);
        let out = k_closed(&r).unwrap();
        let word = AlternatingWord::starting_at(Vortex::A, 1);
        let term = out.term(&word).unwrap().value;
        let sw = sweep_angle(Vortex::A, x0, x, &r.cfg).unwrap();
        let (r0, r1) = (x0.dist(PlanePoint::new(0.0, 0.0)), x.dist(PlanePoint::new(0.0, 0.0)));
        let zeta = Complex64::from_polar(1.0, alpha * sw.eta);
        let spec = QuadratureSpec::default();
        let line = crate::quadrature::integrate_line(
            |u| {
                // t₀ = τ/(1+e^{−u}) maps ℝ onto (0, τ).
                let t0 = tau / (1.0 + (-u).exp());
                let t1 = tau - t0;
                let jac = t0 * t1 / tau;
                let s = Complex64::new(((t1 * r0) / (t0 * r1)).ln(), 0.0);
                let g = (-(r1 * r1 / t1 + r0 * r0 / t0) / 4.0).exp();
                if g == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                // ds = τ dt₀/(t₀t₁).
                Complex64::new(g * jac * tau / (t0 * t1), 0.0) * end_shape(alpha, s, sw.reduced)
            },
            60.0,
            &spec,
        )
        .unwrap();
        let expect = -zeta * (PI * alpha).sin() / (4.0 * PI * PI * tau) * line.value;
        assert!((term - expect).norm() < 1e-9 * expect.norm(), "{term} vs {expect}");
    }

    #[test]
    fn k_path_trivial_word_is_z() {
        let mode = EvalMode::euclidean(0.7).unwrap();
        let x0 = PlanePoint::new(0.2, 0.5);
        let x = PlanePoint::new(0.6, -0.5);
        let p = WindingPath::new(AlternatingWord::empty(), vec![]).unwrap();
        let v = k_path(&mode, &p, x0, x, &cfg(), &QuadratureSpec::default()).unwrap();
        assert_eq!(v, Complex64::new(heat_kernel(0.7, x.dist(x0)), 0.0));
    }

    #[test]
    fn k_path_rejects_blocked_segments() {
        let mode = EvalMode::euclidean(0.7).unwrap();
        // From a point on L_b the segment to a passes through b.
        let x0 = PlanePoint::new(2.0, 0.0);
        let x = PlanePoint::new(0.6, -0.5);
        let p = WindingPath::new(AlternatingWord::starting_at(Vortex::A, 1), vec![0]).unwrap();
        let e = k_path(&mode, &p, x0, x, &cfg(), &QuadratureSpec::default());
        assert_eq!(e, Err(Error::Visibility { segment: 0 }));
    }

    #[test]
    fn factorized_and_enumerated_winding_sums_agree() {
        let r = req(PlanePoint::new(0.3, 0.8), PlanePoint::new(0.6, -0.7), 0.3, 0.6, 1.0)
            .with_n_max(2)
            .with_quad(QuadratureSpec::default().with_rel_tol(1e-9));
        let a = k_schulman_truncated(&r, 2).unwrap().value;
        let b = k_schulman_enumerated(&r, 2).unwrap();
        assert!((a - b).norm() < 1e-8 * a.norm());
    }

    #[test]
    fn cover_free_identity_sheet_small_n() {
        let mode = EvalMode::euclidean(0.5).unwrap();
        let x0 = PlanePoint::new(0.3, 0.8);
        let x = PlanePoint::new(0.5, 0.6);
        let v = k_cover_free(
            &mode,
            x0,
            x,
            &GroupWord::identity(),
            &cfg(),
            0,
            0,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_eq!(v, Complex64::new(heat_kernel(0.5, x.dist(x0)), 0.0));
    }

    #[test]
    fn shadow_tie_break_is_the_upper_limit() {
        let x0 = PlanePoint::new(0.6, 0.7);
        let r = req(x0, PlanePoint::new(-0.8, 0.0), 0.4, 0.3, 1.0);
        let on = k_closed(&r).unwrap();
        assert_eq!(on.warnings.len(), 1);
        let near = k_closed(&r.clone().with_endpoints(x0, PlanePoint::new(-0.8, 1e-7))).unwrap();
        assert!((on.value - near.value).norm() < 1e-5 * on.value.norm());
    }
}
