use std::path::PathBuf;

use abprop_core::geometry::PlanePoint;
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_mode_kind, ModeKind, RunConfig};
use crate::error::AppError;
use crate::output::{self, Sink};
use crate::run::{self, Overrides};

#[derive(Debug, Parser)]
#[command(name = "abprop", version, about = "Two-vortex Aharonov-Bohm propagator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file, appended to; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<ModeKind>,
    /// Contour angle in radians, in (0, pi/2].
    #[arg(long, global = true, value_name = "RAD")]
    pub phi: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    pub nmax: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub kmax: Option<u32>,
    /// Quadrature relative tolerance; for `verify`, the tolerance of every check.
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Point {
    /// Source point `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x0: Option<PlanePoint>,
    /// Target point `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x: Option<PlanePoint>,
    /// Time modulus.
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the propagator at one point.
    Eval(Point),
    /// Evaluate over the configured grid.
    Grid,
    /// Run verification suites.
    Verify {
        /// identities, oracles, pde, boundary, composition or all; repeatable.
        #[arg(long)]
        suite: Vec<String>,
    },
    /// Time evaluations for each truncation order.
    Bench {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 3)]
        repeat: usize,
    },
}

fn parse_mode(s: &str) -> Result<ModeKind, String> {
    parse_mode_kind(s).ok_or_else(|| "expected euclidean or rotated".to_string())
}

fn parse_point(s: &str) -> Result<PlanePoint, String> {
    let (a, b) = s.split_once(',').ok_or("expected x,y")?;
    let x: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let y: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err("coordinates must be finite".into());
    }
    Ok(PlanePoint::new(x, y))
}

fn load(common: &Common) -> Result<RunConfig, AppError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    overrides(common).apply(&mut cfg)?;
    Ok(cfg)
}

fn overrides(common: &Common) -> Overrides {
    Overrides {
        mode: common.mode,
        phi: common.phi,
        n_max: common.nmax,
        k_max: common.kmax,
        tol: common.tol,
    }
}

fn sink(common: &Common, cfg: &RunConfig) -> Sink {
    Sink::new(common.out.as_deref().or(cfg.output.as_deref()))
}

fn endpoints(p: &Point, cfg: &RunConfig, fallback: bool) -> Result<(PlanePoint, PlanePoint, f64), AppError> {
    let default = if fallback {
        let r = cfg.vortices.rho();
        Some((
            cfg.vortices.from_canonical(PlanePoint::new(-0.5 * r, 0.5 * r)),
            cfg.vortices.from_canonical(PlanePoint::new(1.5 * r, -0.5 * r)),
        ))
    } else {
        None
    };
    let x0 =
        p.x0.or(cfg.eval.as_ref().map(|e| e.x0))
            .or(default.map(|d| d.0))
            .ok_or_else(|| AppError::config("eval.x0", "missing; give --x0 or an [eval] section"))?;
    let x =
        p.x.or(cfg.eval.as_ref().map(|e| e.x))
            .or(default.map(|d| d.1))
            .ok_or_else(|| AppError::config("eval.x", "missing; give --x or an [eval] section"))?;
    Ok((x0, x, p.t.unwrap_or(cfg.time)))
}

pub fn execute(cli: &Cli) -> Result<(), AppError> {
    let common = &cli.common;
    let mut cfg = load(common)?;
    match &cli.command {
        Command::Eval(p) => {
            overrides(common).apply_quad_tol(&mut cfg)?;
            let (x0, x, t) = endpoints(p, &cfg, false)?;
            let rec = run::run_eval(&cfg, x0, x, t)?;
            sink(common, &cfg).write_records(&[rec])?;
        }
        Command::Grid => {
            overrides(common).apply_quad_tol(&mut cfg)?;
            let grid = cfg
                .grid
                .clone()
                .ok_or_else(|| AppError::config("grid", "missing [grid] section"))?;
            let pool = run::thread_pool(common.threads)?;
            let rows = run::run_grid(&cfg, &grid, &pool)?;
            let sink = sink(common, &cfg);
            let bytes = output::grid_csv(&rows, !sink.has_content()?)?;
            sink.write_bytes(&bytes)?;
        }
        Command::Verify { suite } => {
            let names = if suite.is_empty() {
                cfg.suites.clone()
            } else {
                suite.clone()
            };
            if let Some(t) = common.tol {
                if !(t >= 0.0) {
                    return Err(AppError::config("--tol", "must be nonnegative"));
                }
            }
            let pool = run::thread_pool(common.threads)?;
            let setup = run::verify_setup(&cfg, common.tol);
            let outcomes = run::run_verify(&setup, &names, &pool)?;
            let (recs, failed) = run::verify_records(&outcomes);
            sink(common, &cfg).write_records(&recs)?;
            if failed > 0 {
                return Err(AppError::VerifyFailed {
                    failed,
                    total: outcomes.len(),
                });
            }
        }
        Command::Bench { point, repeat } => {
            overrides(common).apply_quad_tol(&mut cfg)?;
            let (x0, x, t) = endpoints(point, &cfg, true)?;
            let recs = run::run_bench(&cfg, x0, x, t, *repeat)?;
            sink(common, &cfg).write_records(&recs)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("1.5,-2").unwrap(), PlanePoint::new(1.5, -2.0));
        assert_eq!(parse_point(" -1 , 0 ").unwrap(), PlanePoint::new(-1.0, 0.0));
        assert!(parse_point("1").is_err());
        assert!(parse_point("nan,0").is_err());
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "abprop", "eval", "--x0", "-1,1", "--x", "1,1", "--nmax", "2", "--mode", "rotated",
        ])
        .unwrap();
        assert_eq!(cli.common.nmax, Some(2));
        assert_eq!(cli.common.mode, Some(ModeKind::Rotated));
        let Command::Eval(p) = cli.command else { panic!() };
        assert_eq!(p.x0, Some(PlanePoint::new(-1.0, 1.0)));
    }
}
