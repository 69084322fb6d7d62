//! Run configuration: a TOML file with the sections `vortices`, `flux`,
//! `mode`, `truncation`, `quadrature`, `output`, `eval`, `grid` and `verify`.
//! Every section and key is optional. Unknown keys are rejected, and errors
//! name the offending key path.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use abprop_core::geometry::{PlanePoint, VortexConfig};
use abprop_core::kernels::{EvalMode, Flux};
use abprop_core::quadrature::QuadratureSpec;
use toml::{Table, Value};

use crate::error::AppError;

/// Contour selection as written in the file, before validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    Euclidean,
    Rotated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub x0: PlanePoint,
    pub times: Vec<f64>,
}

impl GridSpec {
    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![range.0];
        }
        let step = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|i| range.0 + step * i as f64).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_range, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        Self::axis(self.y_range, self.ny)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint {
    pub x0: PlanePoint,
    pub x: PlanePoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub vortices: VortexConfig,
    pub flux: Flux,
    pub mode_kind: ModeKind,
    pub time: f64,
    pub phi: Option<f64>,
    pub n_max: usize,
    pub k_max: u32,
    pub quad: QuadratureSpec,
    pub output: Option<PathBuf>,
    pub eval: Option<EvalPoint>,
    pub grid: Option<GridSpec>,
    pub suites: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            vortices: VortexConfig::canonical(1.0).expect("unit separation is valid"),
            flux: Flux::zero(),
            mode_kind: ModeKind::Euclidean,
            time: 1.0,
            phi: None,
            n_max: 4,
            k_max: 400,
            quad: QuadratureSpec::default(),
            output: None,
            eval: None,
            grid: None,
            suites: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, AppError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| AppError::config("", e.message().trim().to_string()))?;
        let mut cfg = RunConfig::default();
        let mut root = Section::new("", &table);
        if let Some(s) = root.section("vortices")? {
            let mut s = s;
            let a = s.point("a")?.unwrap_or(PlanePoint::new(0.0, 0.0));
            let b = s.point("b")?.unwrap_or(PlanePoint::new(1.0, 0.0));
            cfg.vortices = VortexConfig::new(a, b).map_err(|e| AppError::config("vortices.b", e.to_string()))?;
            s.finish()?;
        }
        if let Some(mut s) = root.section("flux")? {
            let alpha = s.float("alpha")?.unwrap_or(0.0);
            let beta = s.float("beta")?.unwrap_or(0.0);
            cfg.flux = Flux::new(alpha, beta).map_err(|e| AppError::config(s.key_of("alpha"), e.to_string()))?;
            s.finish()?;
        }
        if let Some(mut s) = root.section("mode")? {
            if let Some(kind) = s.string("kind")? {
                cfg.mode_kind = parse_mode_kind(&kind).ok_or_else(|| {
                    AppError::config(
                        "mode.kind",
                        format!("expected \"euclidean\" or \"rotated\", got {kind:?}"),
                    )
                })?;
            }
            if let Some(t) = s.float("time")? {
                cfg.time = t;
            }
            cfg.phi = s.float("phi")?;
            s.finish()?;
        }
        if let Some(mut s) = root.section("truncation")? {
            if let Some(n) = s.uint("n_max")? {
                cfg.n_max = n as usize;
            }
            if let Some(k) = s.uint("k_max")? {
                cfg.k_max = u32::try_from(k).map_err(|_| AppError::config("truncation.k_max", "too large"))?;
            }
            s.finish()?;
        }
        if let Some(mut s) = root.section("quadrature")? {
            let d = QuadratureSpec::default();
            let rel = s.float("rel_tol")?.unwrap_or(d.rel_tol);
            let abs = s.float("abs_tol")?.unwrap_or(d.abs_tol);
            let subdiv = s.uint("max_subdivisions")?.unwrap_or(d.max_subdivisions as u64);
            let ppp = s.uint("points_per_panel")?.unwrap_or(d.points_per_panel as u64);
            let subdiv =
                u32::try_from(subdiv).map_err(|_| AppError::config("quadrature.max_subdivisions", "too large"))?;
            cfg.quad = QuadratureSpec::new(rel, abs, subdiv, ppp as usize)
                .map_err(|e| AppError::config("quadrature", e.to_string()))?;
            s.finish()?;
        }
        if let Some(mut s) = root.section("output")? {
            cfg.output = s.string("path")?.map(PathBuf::from);
            s.finish()?;
        }
        if let Some(mut s) = root.section("eval")? {
            let x0 = s.point("x0")?.ok_or_else(|| AppError::config("eval.x0", "missing"))?;
            let x = s.point("x")?.ok_or_else(|| AppError::config("eval.x", "missing"))?;
            cfg.eval = Some(EvalPoint { x0, x });
            s.finish()?;
        }
        if let Some(mut s) = root.section("grid")? {
            let x_range = s
                .pair("x_range")?
                .ok_or_else(|| AppError::config("grid.x_range", "missing"))?;
            let y_range = s
                .pair("y_range")?
                .ok_or_else(|| AppError::config("grid.y_range", "missing"))?;
            let nx = s.uint("nx")?.unwrap_or(1) as usize;
            let ny = s.uint("ny")?.unwrap_or(1) as usize;
            let x0 = s.point("x0")?.ok_or_else(|| AppError::config("grid.x0", "missing"))?;
            let times = match s.floats("times")? {
                Some(t) => t,
                None => vec![cfg.time],
            };
            if nx < 1 {
                return Err(AppError::config("grid.nx", "must be at least 1"));
            }
            if ny < 1 {
                return Err(AppError::config("grid.ny", "must be at least 1"));
            }
            if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(AppError::config("grid.times", "need at least one positive finite time"));
            }
            cfg.grid = Some(GridSpec {
                x_range,
                y_range,
                nx,
                ny,
                x0,
                times,
            });
            s.finish()?;
        }
        if let Some(mut s) = root.section("verify")? {
            if let Some(list) = s.strings("suites")? {
                cfg.suites = list;
            }
            s.finish()?;
        }
        root.finish()?;
        cfg.mode()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::config("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Evaluation mode at the configured time.
    pub fn mode(&self) -> Result<EvalMode, AppError> {
        self.mode_at(self.time)
    }

    pub fn mode_at(&self, time: f64) -> Result<EvalMode, AppError> {
        match self.mode_kind {
            ModeKind::Euclidean => EvalMode::euclidean(time).map_err(|e| AppError::config("mode.time", e.to_string())),
            ModeKind::Rotated => {
                let phi = self.phi.unwrap_or(FRAC_PI_2);
                EvalMode::rotated(time, phi).map_err(|e| {
                    let key = if time > 0.0 && time.is_finite() {
                        "mode.phi"
                    } else {
                        "mode.time"
                    };
                    AppError::config(key, e.to_string())
                })
            }
        }
    }
}

pub fn parse_mode_kind(s: &str) -> Option<ModeKind> {
    match s {
        "euclidean" => Some(ModeKind::Euclidean),
        "rotated" => Some(ModeKind::Rotated),
        _ => None,
    }
}

/// A table plus its key path, tracking which keys were read.
struct Section<'a> {
    path: String,
    table: &'a Table,
    seen: Vec<&'a str>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: &'a Table) -> Self {
        Section {
            path: path.to_string(),
            table,
            seen: Vec::new(),
        }
    }

    fn key_of(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.path, key)
        }
    }

    fn get(&mut self, key: &'a str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.get(key)
    }

    fn section(&mut self, key: &'a str) -> Result<Option<Section<'a>>, AppError> {
        let path = self.key_of(key);
        match self.get(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(&path, t))),
            Some(_) => Err(AppError::config(path, "expected a table")),
        }
    }

    fn float(&mut self, key: &'a str) -> Result<Option<f64>, AppError> {
        let path = self.key_of(key);
        match self.get(key) {
            None => Ok(None),
            Some(v) => as_f64(v)
                .map(Some)
                .ok_or_else(|| AppError::config(path, "expected a number")),
        }
    }

    fn uint(&mut self, key: &'a str) -> Result<Option<u64>, AppError> {
        let path = self.key_of(key);
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(AppError::config(path, "expected a nonnegative integer")),
        }
    }

    fn string(&mut self, key: &'a str) -> Result<Option<String>, AppError> {
        let path = self.key_of(key);
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(AppError::config(path, "expected a string")),
        }
    }

    fn strings(&mut self, key: &'a str) -> Result<Option<Vec<String>>, AppError> {
        let path = self.key_of(key);
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| AppError::config(path, "expected an array of strings")),
            Some(_) => Err(AppError::config(path, "expected an array of strings")),
        }
    }

    fn floats(&mut self, key: &'a str) -> Result<Option<Vec<f64>>, AppError> {
        let path = self.key_of(key);
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(as_f64)
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| AppError::config(path, "expected an array of numbers")),
            Some(_) => Err(AppError::config(path, "expected an array of numbers")),
        }
    }

    fn pair(&mut self, key: &'a str) -> Result<Option<(f64, f64)>, AppError> {
        let path = self.key_of(key);
        match self.floats(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => Ok(Some((v[0], v[1]))),
            Some(_) => Err(AppError::config(path, "expected two finite numbers")),
        }
    }

    fn point(&mut self, key: &'a str) -> Result<Option<PlanePoint>, AppError> {
        Ok(self.pair(key)?.map(|(x, y)| PlanePoint::new(x, y)))
    }

    fn finish(self) -> Result<(), AppError> {
        for key in self.table.keys() {
            if !self.seen.contains(&key.as_str()) {
                return Err(AppError::config(self.key_of(key), "unknown key"));
            }
        }
        Ok(())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn full_file() {
        let c = RunConfig::from_toml_str(
            r#"
            [vortices]
            a = [0.0, 0.0]
            b = [0.0, 2.0]
            [flux]
            alpha = 0.5
            beta = 0.25
            [mode]
            kind = "rotated"
            time = 2
            phi = 1.2
            [truncation]
            n_max = 3
            k_max = 20
            [quadrature]
            rel_tol = 1e-8
            [eval]
            x0 = [1.0, 1.0]
            x = [-1.0, 0.5]
            [grid]
            x_range = [-1, 1]
            y_range = [-1, 1]
            nx = 3
            ny = 2
            x0 = [0.5, 0.5]
            times = [0.5, 1.0]
            [verify]
            suites = ["identities"]
            "#,
        )
        .unwrap();
        assert_eq!(c.vortices.rho(), 2.0);
        assert_eq!(c.flux.beta(), 0.25);
        assert_eq!(c.mode().unwrap(), EvalMode::rotated(2.0, 1.2).unwrap());
        assert_eq!(c.n_max, 3);
        assert_eq!(c.quad.rel_tol, 1e-8);
        let g = c.grid.unwrap();
        assert_eq!(g.xs(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(g.ys(), vec![-1.0, 1.0]);
        assert_eq!(c.suites, vec!["identities".to_string()]);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("[flux]\nalpha = 1.5", "flux.alpha"),
            ("[flux]\ngamma = 0.1", "flux.gamma"),
            ("[mode]\nkind = \"imaginary\"", "mode.kind"),
            ("[mode]\nkind = \"rotated\"\nphi = 3.0", "mode.phi"),
            ("[truncation]\nn_max = -1", "truncation.n_max"),
            (
                "[grid]\nx_range = [0, 1]\ny_range = [0, 1]\nnx = 0\nx0 = [1, 1]",
                "grid.nx",
            ),
            ("[eval]\nx0 = [1]\nx = [0, 0]", "eval.x0"),
            ("stray = 1", "stray"),
            ("flux = 3", "flux"),
        ];
        for (text, key) in cases {
            match RunConfig::from_toml_str(text) {
                Err(AppError::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
