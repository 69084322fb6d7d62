use std::time::Instant;

use abprop_core::geometry::PlanePoint;
use abprop_core::propagator::{k_closed, PropagatorRequest, PropagatorResult};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{GridSpec, ModeKind, RunConfig};
use crate::error::AppError;
use crate::output::{self, GridRow};
use crate::suites::{self, Outcome, Setup};

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<ModeKind>,
    pub phi: Option<f64>,
    pub n_max: Option<usize>,
    pub k_max: Option<u32>,
    /// Quadrature relative tolerance for evaluations; check tolerance for
    /// `verify`.
    pub tol: Option<f64>,
}

impl Overrides {
    /// Applies everything but `tol`, which the caller routes by command.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), AppError> {
        if let Some(m) = self.mode {
            cfg.mode_kind = m;
        }
        if self.phi.is_some() {
            cfg.phi = self.phi;
        }
        if let Some(n) = self.n_max {
            cfg.n_max = n;
        }
        if let Some(k) = self.k_max {
            cfg.k_max = k;
        }
        cfg.mode()?;
        Ok(())
    }

    pub fn apply_quad_tol(&self, cfg: &mut RunConfig) -> Result<(), AppError> {
        if let Some(t) = self.tol {
            let q = cfg.quad.with_rel_tol(t);
            q.validate().map_err(|e| AppError::config("--tol", e.to_string()))?;
            cfg.quad = q;
        }
        Ok(())
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, AppError> {
    if threads == Some(0) {
        return Err(AppError::config("--threads", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| AppError::config("--threads", e.to_string()))
}

/// Canonical image of a user point. Images within rounding of the cut line
/// are put on it, so that cut detection survives the rigid motion.
pub fn canonical(cfg: &RunConfig, p: PlanePoint) -> PlanePoint {
    let c = cfg.vortices.to_canonical(p);
    let scale = p.x.abs().max(p.y.abs()).max(cfg.vortices.rho());
    if c.y.abs() <= 8.0 * f64::EPSILON * scale {
        PlanePoint::new(c.x, 0.0)
    } else {
        c
    }
}

fn request(cfg: &RunConfig, x0: PlanePoint, x: PlanePoint, t: f64) -> Result<PropagatorRequest, AppError> {
    let mode = cfg.mode_at(t)?;
    Ok(
        PropagatorRequest::new(canonical(cfg, x0), canonical(cfg, x), mode, cfg.flux, cfg.vortices)
            .with_n_max(cfg.n_max)
            .with_quad(cfg.quad),
    )
}

/// Evaluates at one point; `x0` and `x` are in the user's frame.
pub fn evaluate(cfg: &RunConfig, x0: PlanePoint, x: PlanePoint, t: f64) -> Result<PropagatorResult, AppError> {
    Ok(k_closed(&request(cfg, x0, x, t)?)?)
}

pub fn run_eval(cfg: &RunConfig, x0: PlanePoint, x: PlanePoint, t: f64) -> Result<Value, AppError> {
    let res = evaluate(cfg, x0, x, t)?;
    Ok(output::eval_record(x0, x, &cfg.mode_at(t)?, cfg.n_max, &res))
}

/// Grid rows, time outermost, then `y`, then `x`.
pub fn run_grid(cfg: &RunConfig, grid: &GridSpec, pool: &rayon::ThreadPool) -> Result<Vec<GridRow>, AppError> {
    let c0 = canonical(cfg, grid.x0);
    if let Some(v) = cfg.vortices.vortex_at(c0) {
        return Err(AppError::config("grid.x0", format!("source coincides with vortex {v}")));
    }
    for &t in &grid.times {
        cfg.mode_at(t).map_err(|e| match e {
            AppError::Config { reason, .. } => AppError::config("grid.times", reason),
            other => other,
        })?;
    }
    let (xs, ys) = (grid.xs(), grid.ys());
    let mut points = Vec::with_capacity(grid.times.len() * xs.len() * ys.len());
    for &t in &grid.times {
        for &y in &ys {
            for &x in &xs {
                points.push((x, y, t));
            }
        }
    }
    let row = |&(x, y, t): &(f64, f64, f64)| -> GridRow {
        let mut r = GridRow {
            x,
            y,
            t,
            value: None,
            trunc_bound: None,
            quad_err: None,
            skipped: false,
            error: String::new(),
        };
        let c = canonical(cfg, PlanePoint::new(x, y));
        if cfg.vortices.cut_at(c).is_some() || cfg.vortices.vortex_at(c).is_some() {
            r.skipped = true;
            return r;
        }
        match evaluate(cfg, grid.x0, PlanePoint::new(x, y), t) {
            Ok(res) => {
                r.value = Some((res.value.re, res.value.im));
                r.trunc_bound = Some(res.truncation_bound);
                r.quad_err = Some(res.quad_err);
            }
            Err(e) => r.error = e.to_string(),
        }
        r
    };
    Ok(pool.install(|| points.par_iter().map(row).collect()))
}

/// Suite parameters from the configuration. A configuration without flux
/// falls back to `α = β = 1/2`, where every check is nontrivial.
pub fn verify_setup(cfg: &RunConfig, tol: Option<f64>) -> Setup {
    let d = Setup::default();
    let flux = if cfg.flux.alpha() == 0.0 && cfg.flux.beta() == 0.0 {
        d.flux
    } else {
        cfg.flux
    };
    Setup {
        rho: cfg.vortices.rho(),
        flux,
        n_max: cfg.n_max,
        k_max: cfg.k_max,
        quad: cfg.quad,
        tol,
    }
}

pub fn run_verify(setup: &Setup, names: &[String], pool: &rayon::ThreadPool) -> Result<Vec<Outcome>, AppError> {
    let selection = suites::expand_selection(names).map_err(|e| AppError::config("verify.suites", e))?;
    let mut out = Vec::new();
    for s in selection {
        out.extend(suites::run_suite(s, setup, pool).expect("known suite"));
    }
    Ok(out)
}

/// Verification records: one per outcome, then the summary.
pub fn verify_records(outcomes: &[Outcome]) -> (Vec<Value>, usize) {
    let mut recs = Vec::with_capacity(outcomes.len() + 1);
    let mut failed = 0;
    for o in outcomes {
        if !o.passed() {
            failed += 1;
        }
        recs.push(match &o.result {
            Ok(r) => output::report_json(o.suite, r),
            Err(msg) => output::failed_check_json(o.suite, &o.name, msg),
        });
    }
    recs.push(output::summary_json(outcomes.len(), failed));
    (recs, failed)
}

/// Median wall time of `repeat` evaluations for each truncation order up to
/// the configured one.
pub fn run_bench(
    cfg: &RunConfig,
    x0: PlanePoint,
    x: PlanePoint,
    t: f64,
    repeat: usize,
) -> Result<Vec<Value>, AppError> {
    let repeat = repeat.max(1);
    let mut out = Vec::new();
    for n in 0..=cfg.n_max {
        let req = request(cfg, x0, x, t)?.with_n_max(n);
        let mut times = Vec::with_capacity(repeat);
        let mut last = None;
        for _ in 0..repeat {
            let start = Instant::now();
            last = Some(k_closed(&req)?);
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        let res = last.expect("repeat >= 1");
        out.push(json!({
            "schema": output::BENCH_SCHEMA,
            "n_max": n,
            "terms": res.terms.len(),
            "repeat": repeat,
            "median_seconds": times[times.len() / 2],
            "min_seconds": times[0],
            "abs": res.value.norm(),
            "truncation_bound": res.truncation_bound,
        }));
    }
    Ok(out)
}
