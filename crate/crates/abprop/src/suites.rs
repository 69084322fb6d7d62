//! The named verification suites run by `abprop verify`.
//!
//! Checks over parameter grids are folded into one report per grid slice:
//! the reported case is the one with the largest discrepancy relative to its
//! tolerance, and `cases`/`failed` count the slice.

use std::f64::consts::PI;

use abprop_core::geometry::{PlanePoint, PolarAround, Vortex, VortexConfig};
use abprop_core::kernels::{EvalMode, Flux};
use abprop_core::propagator::{k_closed, PropagatorRequest};
use abprop_core::quadrature::QuadratureSpec;
use abprop_core::verify::{
    check_auxrel_euler, check_boundary_condition, check_chapman_kolmogorov_with, check_hermiticity,
    check_integer_flux_limit, check_integral_identity, check_one_vortex_oracle, check_pde_order,
    check_schulman_agreement, check_sum_identity, check_vortex_vanishing, oracle_m_max, CheckReport, CompositionGrid,
};
use abprop_core::{Complex64, Error};
use rayon::prelude::*;

pub const SUITES: [&str; 5] = ["identities", "oracles", "pde", "boundary", "composition"];

/// Partial-sum cutoff for the winding-sum identity.
pub const IDENTITY_K_MAX: u64 = 10_000;

/// Composition grid resolution.
pub const COMPOSITION_N: usize = 60;

/// Parameters shared by the propagator-level suites.
#[derive(Clone, Debug)]
pub struct Setup {
    /// Vortex separation; probe points scale with it and times with its square.
    pub rho: f64,
    pub flux: Flux,
    pub n_max: usize,
    pub k_max: u32,
    pub quad: QuadratureSpec,
    /// Replaces every check tolerance when set.
    pub tol: Option<f64>,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            rho: 1.0,
            flux: Flux::new(0.5, 0.5).expect("valid flux"),
            n_max: 4,
            k_max: 400,
            quad: QuadratureSpec::default(),
            tol: None,
        }
    }
}

impl Setup {
    fn cfg(&self) -> VortexConfig {
        VortexConfig::canonical(self.rho).expect("positive separation")
    }

    fn point(&self, x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x * self.rho, y * self.rho)
    }

    fn mode(&self, tau: f64) -> EvalMode {
        EvalMode::euclidean(tau * self.rho * self.rho).expect("positive time")
    }

    fn request(&self, x0: PlanePoint, x: PlanePoint, tau: f64) -> PropagatorRequest {
        PropagatorRequest::new(x0, x, self.mode(tau), self.flux, self.cfg())
            .with_n_max(self.n_max)
            .with_quad(self.quad)
    }

    fn finish(&self, r: CheckReport) -> CheckReport {
        let r = r.with("alpha", self.flux.alpha()).with("beta", self.flux.beta());
        match self.tol {
            Some(t) => r.with_tolerance(t),
            None => r,
        }
    }
}

/// One line of a verification bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub suite: &'static str,
    pub name: String,
    pub result: Result<CheckReport, String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(&self.result, Ok(r) if r.passed)
    }
}

fn ratio(r: &CheckReport) -> f64 {
    let q = r.discrepancy / r.tolerance;
    if q.is_nan() {
        f64::INFINITY
    } else {
        q
    }
}

/// Folds a slice of cases into its worst case.
fn fold(name: &str, cases: Vec<Result<CheckReport, Error>>, tol: Option<f64>) -> Result<CheckReport, String> {
    let n = cases.len();
    let mut worst: Option<CheckReport> = None;
    let mut failed = 0usize;
    for c in cases {
        let c = c.map_err(|e| format!("{name}: {e}"))?;
        let c = match tol {
            Some(t) => c.with_tolerance(t),
            None => c,
        };
        if !c.passed {
            failed += 1;
        }
        if worst.as_ref().map_or(true, |w| ratio(&c) > ratio(w)) {
            worst = Some(c);
        }
    }
    let w = worst.ok_or_else(|| format!("{name}: no cases"))?;
    Ok(w.with("cases", n as f64).with("failed", failed as f64))
}

fn outcome(suite: &'static str, name: &str, result: Result<CheckReport, String>) -> Outcome {
    Outcome {
        suite,
        name: name.to_string(),
        result,
    }
}

/// The `(α, θ, s)` grid of the identity checks: 9 fluxes, 9 angles, 5 slopes.
pub fn identity_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(405);
    for i in 1..=9 {
        for j in 0..9 {
            for s in [-3.0, -1.5, 0.0, 1.5, 3.0] {
                out.push((0.1 * i as f64, PI * (-0.9 + 0.225 * j as f64), s));
            }
        }
    }
    out
}

pub fn identities(setup: &Setup) -> Vec<Outcome> {
    let grid = identity_grid();
    let mut out = Vec::new();
    for i in 1..=9 {
        let alpha = 0.1 * i as f64;
        let slice: Vec<_> = grid.iter().filter(|c| c.0 == alpha).collect();
        let sums = slice
            .iter()
            .map(|&&(a, th, s)| check_sum_identity(a, th, s, IDENTITY_K_MAX))
            .collect();
        out.push(outcome(
            "identities",
            "sum_identity",
            fold("sum_identity", sums, setup.tol),
        ));
        let ints = slice
            .iter()
            .map(|&&(a, th, s)| check_integral_identity(a, th, s, &setup.quad))
            .collect();
        out.push(outcome(
            "identities",
            "integral_identity",
            fold("integral_identity", ints, setup.tol),
        ));
    }
    let mut euler = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        for r in [0.5, 1.5] {
            for th in [-2.0, 0.5, 2.5] {
                euler.push(check_auxrel_euler(t, r, th, 1e-4));
            }
        }
    }
    out.push(outcome(
        "identities",
        "auxrel_euler",
        fold("auxrel_euler", euler, setup.tol),
    ));
    out
}

/// Twenty endpoint pairs within distance 2 of vortex `a`, off its cut.
pub fn oracle_pairs() -> Vec<(PlanePoint, PlanePoint)> {
    (1..=20)
        .map(|i| {
            let f = |k: f64| (i as f64 * k).fract();
            let polar = |r: f64, th: f64| PlanePoint::new(r * th.cos(), r * th.sin());
            (
                polar(0.3 + 1.7 * f(0.618_034), 0.95 * PI * (2.0 * f(0.754_878) - 1.0)),
                polar(0.3 + 1.7 * f(0.569_840), 0.95 * PI * (2.0 * f(0.414_214) - 1.0)),
            )
        })
        .collect()
}

pub const ORACLE_ALPHAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const ORACLE_TAUS: [f64; 3] = [0.5, 1.0, 2.0];

/// Single-vortex comparison for one `(α, τ)` over [`oracle_pairs`]. Vortex
/// `b` sits far away and carries no flux.
pub fn one_vortex_slice(alpha: f64, tau: f64, tol: Option<f64>) -> Result<CheckReport, String> {
    let cfg = VortexConfig::canonical(4.0).expect("valid");
    let mode = EvalMode::euclidean(tau).expect("valid");
    let cases = oracle_pairs()
        .into_iter()
        .map(|(x0, x)| {
            let m = oracle_m_max(x0.x.hypot(x0.y) * x.x.hypot(x.y) / (2.0 * tau));
            check_one_vortex_oracle(alpha, &mode, x0, x, &cfg, m)
        })
        .collect();
    fold("one_vortex_oracle", cases, tol)
}

/// Ten endpoint pairs for the winding-sum comparison, in units of the
/// separation.
pub const WINDING_PAIRS: [((f64, f64), (f64, f64)); 10] = [
    ((-0.5, 0.6), (1.4, -0.5)),
    ((0.3, 0.8), (0.7, -0.9)),
    ((-0.8, -0.4), (1.8, 0.3)),
    ((0.5, 0.3), (0.5, -0.3)),
    ((-0.3, 0.2), (-0.3, -0.2)),
    ((1.3, 0.2), (1.3, -0.2)),
    ((0.2, 1.0), (0.9, 1.1)),
    ((-1.0, 0.7), (2.0, -0.7)),
    ((0.6, -0.7), (-0.6, 0.9)),
    ((1.6, 0.9), (-0.2, -1.1)),
];

/// `K_closed` against the truncated winding sum at `n_max = 2`, `τ = 1`.
pub fn winding_sum_slice(setup: &Setup, k_max: u32) -> Result<CheckReport, String> {
    let cases = WINDING_PAIRS
        .iter()
        .map(|&((a, b), (c, d))| {
            let req = setup.request(setup.point(a, b), setup.point(c, d), 1.0).with_n_max(2);
            check_schulman_agreement(&req, k_max).map(|r| setup.finish(r))
        })
        .collect();
    fold("schulman_agreement", cases, setup.tol)
}

pub fn oracles(setup: &Setup) -> Vec<Outcome> {
    let mut out = Vec::new();
    for alpha in ORACLE_ALPHAS {
        for tau in ORACLE_TAUS {
            out.push(outcome(
                "oracles",
                "one_vortex_oracle",
                one_vortex_slice(alpha, tau, setup.tol),
            ));
        }
    }
    let limit = [0.99, 0.999]
        .into_iter()
        .map(|a| check_integer_flux_limit(a, 1.0, PlanePoint::new(0.8, 0.5), PlanePoint::new(-0.4, 1.1)))
        .collect();
    out.push(outcome(
        "oracles",
        "integer_flux_limit",
        fold("integer_flux_limit", limit, setup.tol),
    ));
    out.push(outcome(
        "oracles",
        "schulman_agreement",
        winding_sum_slice(setup, setup.k_max),
    ));
    out
}

/// Source point and ten interior probes of the heat-equation residual, in
/// units of the separation. The residual is relative to `|K|`, so probes
/// stay clear of the vortices and of near-zeros of the kernel.
pub const PDE_SOURCE: (f64, f64) = (-0.6, 0.7);
pub const PDE_PROBES: [(f64, f64); 10] = [
    (0.5, 0.4),
    (-0.2, -0.8),
    (-0.5, -0.3),
    (1.5, 0.3),
    (1.4, -0.6),
    (0.2, 0.9),
    (0.5, 0.8),
    (-0.3, 0.5),
    (1.1, 0.6),
    (0.4, -1.0),
];

/// Quadrature tolerance of the residual check; the five-point stencil
/// amplifies evaluation errors by `h⁻²`.
pub const PDE_REL_TOL: f64 = 1e-12;

/// Finite-difference step of the residual check.
pub const PDE_STEP: f64 = 1e-2;

/// Residual and order reports at one probe.
pub fn pde_probe(setup: &Setup, probe: (f64, f64)) -> Result<(CheckReport, CheckReport), Error> {
    let quad = setup.quad.with_rel_tol(setup.quad.rel_tol.min(PDE_REL_TOL));
    let req = setup
        .request(
            setup.point(PDE_SOURCE.0, PDE_SOURCE.1),
            setup.point(probe.0, probe.1),
            1.0,
        )
        .with_quad(quad);
    let h = PDE_STEP * setup.rho;
    let order = setup.finish(check_pde_order(&req, h)?);
    let res_h = order.detail("residual_h").unwrap_or(f64::INFINITY);
    let residual = setup.finish(CheckReport::new("pde_residual", res_h, 1e-3).with("h", h));
    Ok((residual, order.with("x", req.x.x).with("y", req.x.y)))
}

pub fn pde(setup: &Setup) -> Vec<Outcome> {
    let mut res = Vec::new();
    let mut ord = Vec::new();
    for p in PDE_PROBES {
        match pde_probe(setup, p) {
            Ok((r, o)) => {
                res.push(Ok(r));
                ord.push(Ok(o));
            }
            Err(e) => {
                res.push(Err(e.clone()));
                ord.push(Err(e));
            }
        }
    }
    vec![
        outcome("pde", "pde_residual", fold("pde_residual", res, setup.tol)),
        outcome("pde", "pde_order", fold("pde_order", ord, setup.tol)),
    ]
}

/// Source point of the boundary checks, in units of the separation.
pub const BOUNDARY_SOURCE: (f64, f64) = (1.3, 0.6);

/// Cut-jump check around `v` at radius `0.7ρ`, `τ = ρ²`.
pub fn boundary_check(setup: &Setup, v: Vortex) -> Result<CheckReport, Error> {
    let base = setup.request(
        setup.point(BOUNDARY_SOURCE.0, BOUNDARY_SOURCE.1),
        setup.point(0.0, 1.0),
        1.0,
    );
    let probe = PolarAround {
        center: v,
        r: 0.7 * setup.rho,
        theta: PI,
    };
    check_boundary_condition(&base, probe, 1e-2).map(|r| setup.finish(r))
}

pub fn boundary(setup: &Setup) -> Vec<Outcome> {
    let mut out = Vec::new();
    for v in [Vortex::A, Vortex::B] {
        let r = boundary_check(setup, v).map_err(|e| e.to_string());
        let name = r
            .as_ref()
            .map(|r| r.name.clone())
            .unwrap_or_else(|_| format!("boundary_condition_{}", v.label()));
        out.push(outcome("boundary", &name, r));
    }
    for v in [Vortex::A, Vortex::B] {
        let base = setup.request(
            setup.point(BOUNDARY_SOURCE.0, BOUNDARY_SOURCE.1),
            setup.point(0.0, 1.0),
            1.0,
        );
        let radii = [0.1, 0.05, 0.025].map(|r| r * setup.rho);
        let r = check_vortex_vanishing(&base, v, 1.0, &radii)
            .map(|r| setup.finish(r.with("vortex", if v == Vortex::A { 0.0 } else { 1.0 })))
            .map_err(|e| e.to_string());
        out.push(outcome("boundary", "vortex_vanishing", r));
    }
    out
}

/// Hermiticity over [`WINDING_PAIRS`] at `τ = ρ²`.
pub fn hermiticity_slice(setup: &Setup) -> Result<CheckReport, String> {
    let cases = WINDING_PAIRS
        .iter()
        .map(|&((a, b), (c, d))| {
            let req = setup.request(setup.point(a, b), setup.point(c, d), 1.0);
            check_hermiticity(&req).map(|r| setup.finish(r))
        })
        .collect();
    fold("hermiticity", cases, setup.tol)
}

/// Endpoints of the composition check, in units of the separation.
pub const COMPOSITION_PAIR: ((f64, f64), (f64, f64)) = ((-0.4, 0.5), (1.3, -0.4));

/// Semigroup composition on a [`COMPOSITION_N`]² grid, split at `τ/2`,
/// with the kernel evaluations spread over `pool`.
pub fn composition_check(setup: &Setup, pool: &rayon::ThreadPool) -> Result<CheckReport, Error> {
    let ((a, b), (c, d)) = COMPOSITION_PAIR;
    let quad = setup.quad.with_rel_tol(setup.quad.rel_tol.max(1e-6));
    let req = setup
        .request(setup.point(a, b), setup.point(c, d), 1.0)
        .with_n_max(setup.n_max.min(3))
        .with_quad(quad);
    let tau = req.mode.scale();
    let grid = CompositionGrid::covering(COMPOSITION_N, tau, req.x0, req.x);
    let eval = |batch: &[PropagatorRequest]| -> Vec<abprop_core::Result<Complex64>> {
        pool.install(|| batch.par_iter().map(|r| k_closed(r).map(|o| o.value)).collect())
    };
    check_chapman_kolmogorov_with(&req, 0.5, &grid, eval).map(|r| setup.finish(r))
}

pub fn composition(setup: &Setup, pool: &rayon::ThreadPool) -> Vec<Outcome> {
    vec![
        outcome("composition", "hermiticity", hermiticity_slice(setup)),
        outcome(
            "composition",
            "chapman_kolmogorov",
            composition_check(setup, pool).map_err(|e| e.to_string()),
        ),
    ]
}

/// Runs one named suite.
pub fn run_suite(name: &str, setup: &Setup, pool: &rayon::ThreadPool) -> Option<Vec<Outcome>> {
    Some(match name {
        "identities" => identities(setup),
        "oracles" => oracles(setup),
        "pde" => pde(setup),
        "boundary" => boundary(setup),
        "composition" => composition(setup, pool),
        _ => return None,
    })
}

/// Expands `all` and removes duplicates, keeping first-seen order.
pub fn expand_selection(names: &[String]) -> Result<Vec<&'static str>, String> {
    let mut out: Vec<&'static str> = Vec::new();
    for n in names {
        let add: Vec<&'static str> = if n == "all" {
            SUITES.to_vec()
        } else {
            match SUITES.iter().find(|s| **s == n.as_str()) {
                Some(s) => vec![*s],
                None => {
                    return Err(format!(
                        "unknown suite {n:?}; expected one of {}, all",
                        SUITES.join(", ")
                    ))
                }
            }
        };
        for s in add {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = identity_grid();
        assert_eq!(g.len(), 405);
        assert!(g.iter().all(|c| c.1.abs() < PI));
        assert_eq!(oracle_pairs().len(), 20);
        assert!(oracle_pairs().iter().all(|(p, q)| p.y != 0.0 && q.y != 0.0));
    }

    #[test]
    fn selection() {
        let all = expand_selection(&["oracles".into(), "all".into()]).unwrap();
        assert_eq!(all, vec!["oracles", "identities", "pde", "boundary", "composition"]);
        assert!(expand_selection(&[]).unwrap().is_empty());
        assert!(expand_selection(&["nope".into()]).is_err());
    }

    #[test]
    fn fold_keeps_worst() {
        let cases = vec![
            Ok(CheckReport::new("c", 1.0, 10.0)),
            Ok(CheckReport::new("c", 3.0, 2.0)),
            Ok(CheckReport::new("c", 5.0, 100.0)),
        ];
        let r = fold("c", cases, None).unwrap();
        assert_eq!(r.discrepancy, 3.0);
        assert!(!r.passed);
        assert_eq!(r.detail("failed"), Some(1.0));
        let strict = fold("c", vec![Ok(CheckReport::new("c", 1.0, 10.0))], Some(1e-300)).unwrap();
        assert!(!strict.passed);
    }

    #[test]
    fn identities_pass() {
        let out = identities(&Setup::default());
        assert_eq!(out.len(), 19);
        for o in &out {
            assert!(o.passed(), "{o:?}");
        }
    }

    #[test]
    fn boundary_pass() {
        for o in boundary(&Setup::default()) {
            assert!(o.passed(), "{o:?}");
        }
    }
}
