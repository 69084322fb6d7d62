//! Serialization. Single evaluations, check reports, bench timings and
//! errors are JSON Lines records carrying a `schema` field. Grids are CSV
//! files whose first line is `# schema=abprop-grid/1`. All files are opened
//! for appending; a grid header is written only into an empty file.

use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;

use abprop_core::geometry::PlanePoint;
use abprop_core::kernels::EvalMode;
use abprop_core::propagator::{Endpoint, PropagatorResult, Warning};
use abprop_core::verify::CheckReport;
use serde_json::{json, Map, Value};

pub const EVAL_SCHEMA: &str = "abprop-eval/1";
pub const VERIFY_SCHEMA: &str = "abprop-verify/1";
pub const ERROR_SCHEMA: &str = "abprop-error/1";
pub const BENCH_SCHEMA: &str = "abprop-bench/1";
pub const GRID_SCHEMA: &str = "abprop-grid/1";

pub const GRID_COLUMNS: [&str; 10] = [
    "x",
    "y",
    "t",
    "re",
    "im",
    "abs",
    "trunc_bound",
    "quad_err",
    "skipped",
    "error",
];

pub fn mode_json(mode: &EvalMode) -> Value {
    match *mode {
        EvalMode::Euclidean { tau } => json!({ "kind": "euclidean", "time": tau, "contour_angle": mode.angle() }),
        EvalMode::Rotated { t, phi } => {
            json!({ "kind": "rotated", "time": t, "phi": phi, "contour_angle": mode.angle() })
        }
    }
}

fn point_json(p: PlanePoint) -> Value {
    json!([p.x, p.y])
}

pub fn warning_json(w: &Warning) -> Value {
    match *w {
        Warning::EndpointOnCut { endpoint, cut } => {
            let which = match endpoint {
                Endpoint::Source => "x0",
                Endpoint::Target => "x",
            };
            json!({
                "kind": "endpoint_on_cut",
                "endpoint": which,
                "cut": cut.label().to_string(),
                "message": format!("{which} lies on cut L_{}; the upper-edge limit theta = +pi was used", cut.label()),
            })
        }
    }
}

/// One evaluation record. `x0` and `x` are in the user's frame.
pub fn eval_record(x0: PlanePoint, x: PlanePoint, mode: &EvalMode, n_max: usize, res: &PropagatorResult) -> Value {
    let terms: Vec<Value> = res
        .terms
        .iter()
        .map(|t| {
            json!({
                "word": t.word.to_string(),
                "re": t.value.re,
                "im": t.value.im,
                "err_est": t.err_est,
                "bound": t.bound,
            })
        })
        .collect();
    json!({
        "schema": EVAL_SCHEMA,
        "x0": point_json(x0),
        "x": point_json(x),
        "mode": mode_json(mode),
        "n_max": n_max,
        "re": res.value.re,
        "im": res.value.im,
        "abs": res.value.norm(),
        "truncation_bound": res.truncation_bound,
        "quad_err": res.quad_err,
        "terms": terms,
        "warnings": res.warnings.iter().map(warning_json).collect::<Vec<_>>(),
    })
}

pub fn report_json(suite: &str, report: &CheckReport) -> Value {
    let details: Map<String, Value> = report.details.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "schema": VERIFY_SCHEMA,
        "suite": suite,
        "name": report.name,
        "passed": report.passed,
        "discrepancy": report.discrepancy,
        "tolerance": report.tolerance,
        "details": details,
    })
}

pub fn failed_check_json(suite: &str, name: &str, message: &str) -> Value {
    json!({
        "schema": VERIFY_SCHEMA,
        "suite": suite,
        "name": name,
        "passed": false,
        "error": message,
    })
}

pub fn summary_json(total: usize, failed: usize) -> Value {
    json!({
        "schema": VERIFY_SCHEMA,
        "summary": { "total": total, "passed": total - failed, "failed": failed },
    })
}

/// One grid row; `value` is `None` for skipped or failed points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub value: Option<(f64, f64)>,
    pub trunc_bound: Option<f64>,
    pub quad_err: Option<f64>,
    pub skipped: bool,
    pub error: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV body for `rows`, preceded by the schema line and column header when
/// `with_header` is set.
pub fn grid_csv(rows: &[GridRow], with_header: bool) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    if with_header {
        writeln!(buf, "# schema={GRID_SCHEMA}")?;
    }
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        if with_header {
            w.write_record(GRID_COLUMNS)?;
        }
        for r in rows {
            let (re, im, abs) = match r.value {
                Some((re, im)) => (re.to_string(), im.to_string(), re.hypot(im).to_string()),
                None => Default::default(),
            };
            w.write_record([
                r.x.to_string(),
                r.y.to_string(),
                r.t.to_string(),
                re,
                im,
                abs,
                opt(r.trunc_bound),
                opt(r.quad_err),
                (r.skipped as u8).to_string(),
                r.error.clone(),
            ])?;
        }
        w.flush()?;
    }
    Ok(buf)
}

/// Where records go: an append-only file, or stdout.
#[derive(Clone, Debug)]
pub enum Sink {
    Stdout,
    File(std::path::PathBuf),
}

impl Sink {
    pub fn new(path: Option<&Path>) -> Self {
        match path {
            Some(p) => Sink::File(p.to_path_buf()),
            None => Sink::Stdout,
        }
    }

    /// True when the destination already holds data.
    pub fn has_content(&self) -> io::Result<bool> {
        match self {
            Sink::Stdout => Ok(false),
            Sink::File(p) => match std::fs::metadata(p) {
                Ok(m) => Ok(m.len() > 0),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
                Err(e) => Err(e),
            },
        }
    }

    pub fn write_bytes(&self, bytes: &[u8]) -> io::Result<()> {
        match self {
            Sink::Stdout => {
                let mut out = io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()
            }
            Sink::File(p) => {
                let mut f = OpenOptions::new().create(true).append(true).open(p)?;
                f.write_all(bytes)?;
                f.flush()
            }
        }
    }

    pub fn write_records(&self, records: &[Value]) -> io::Result<()> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        self.write_bytes(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = [
            GridRow {
                x: 0.5,
                y: -1.0,
                t: 1.0,
                value: Some((3e-2, 0.0)),
                trunc_bound: Some(1e-9),
                quad_err: Some(0.0),
                skipped: false,
                error: String::new(),
            },
            GridRow {
                x: -1.0,
                y: 0.0,
                t: 1.0,
                value: None,
                trunc_bound: None,
                quad_err: None,
                skipped: true,
                error: String::new(),
            },
        ];
        let text = String::from_utf8(grid_csv(&rows, true).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema=abprop-grid/1");
        assert_eq!(lines[1], "x,y,t,re,im,abs,trunc_bound,quad_err,skipped,error");
        assert_eq!(lines[2], "0.5,-1,1,0.03,0,0.03,0.000000001,0,0,");
        assert_eq!(lines[3], "-1,0,1,,,,,,1,");
        let body = String::from_utf8(grid_csv(&rows, false).unwrap()).unwrap();
        assert_eq!(body.lines().count(), 2);
    }

    #[test]
    fn records_carry_schema() {
        let r = CheckReport::new("x", 1.0, 2.0).with("k", 3.0);
        let v = report_json("s", &r);
        assert_eq!(v["schema"], VERIFY_SCHEMA);
        assert_eq!(v["details"]["k"], 3.0);
        assert_eq!(summary_json(3, 1)["summary"]["passed"], 2);
    }

    #[test]
    fn file_sink_appends() {
        let dir = tempfile::tempdir().unwrap();
        let sink = Sink::new(Some(&dir.path().join("o.jsonl")));
        assert!(!sink.has_content().unwrap());
        sink.write_records(&[json!({"a": 1})]).unwrap();
        sink.write_records(&[json!({"a": 2})]).unwrap();
        assert!(sink.has_content().unwrap());
        let Sink::File(p) = &sink else { unreachable!() };
        assert_eq!(std::fs::read_to_string(p).unwrap(), "{\"a\":1}\n{\"a\":2}\n");
    }
}
