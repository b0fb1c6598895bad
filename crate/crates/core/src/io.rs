//! CSV and JSON artifacts. Every file carries the tool version and the resolved
//! configuration; floats are written with 12 significant digits.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::boundary::{BoundaryCurve, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::fixedpoint::IterationTrace;
use crate::scalar::Real;
use crate::solver::SolutionSurface;
use crate::volterra::VolterraResult;
use crate::VERSION;

/// Provenance written at the top of every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub tool: String,
    /// Resolved configuration (any JSON value).
    pub config: Value,
}

impl Provenance {
    pub fn new(config: Value) -> Self {
        Self { tool: VERSION.to_string(), config }
    }
}

/// 12 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt_float)
}

fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt_float(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(round12).and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Unsupported(format!("write failed: {e}"))
}

fn header(w: &mut impl Write, prov: &Provenance, columns: &str) -> Result<()> {
    let cfg = serde_json::to_string(&round_json(prov.config.clone())).map_err(|e| Error::Unsupported(e.to_string()))?;
    writeln!(w, "# tool: {}", prov.tool).map_err(io_err)?;
    writeln!(w, "# config: {cfg}").map_err(io_err)?;
    writeln!(w, "{columns}").map_err(io_err)
}

fn row(w: &mut impl Write, cells: &[String]) -> Result<()> {
    writeln!(w, "{}", cells.join(",")).map_err(io_err)
}

/// `t,x,u,exercised` for every node.
pub fn write_surface_csv<T: Real>(w: &mut impl Write, surface: &SolutionSurface<T>, prov: &Provenance) -> Result<()> {
    header(w, prov, "t,x,u,exercised")?;
    let g = &surface.grid;
    for n in 0..=g.nt {
        let (u, m) = (surface.row(n), surface.mask_row(n));
        for i in 0..g.n_cols() {
            row(w, &[fmt_float(g.t(n).as_f64()), fmt_float(g.x(i).as_f64()), fmt_float(u[i].as_f64()), u8::from(m[i]).to_string()])?;
        }
    }
    Ok(())
}

/// `t,b` for an extracted curve.
pub fn write_boundary_csv<T: Real>(w: &mut impl Write, curve: &BoundaryCurve<T>, prov: &Provenance) -> Result<()> {
    header(w, prov, "t,b")?;
    for (t, b) in curve.t.iter().zip(&curve.b) {
        row(w, &[fmt_float(t.as_f64()), fmt_float(b.as_f64())])?;
    }
    Ok(())
}

/// `n,sup_diff,b_at_T,b_at_eps` with `eps = 5 dt`.
pub fn write_trace_csv<T: Real>(w: &mut impl Write, trace: &IterationTrace<T>, prov: &Provenance) -> Result<()> {
    header(w, prov, "n,sup_diff,b_at_T,b_at_eps")?;
    for (k, (d, c)) in trace.sup_diffs.iter().zip(&trace.boundaries).enumerate() {
        let nt = trace.surfaces[k].grid.nt;
        let at = |n: usize| c.at_level(n).map(|b| b.as_f64());
        row(w, &[(k + 1).to_string(), fmt_float(d.as_f64()), opt(at(nt)), opt(at(5))])?;
    }
    Ok(())
}

/// `t,b,B,smooth_fit_residual,uxx_gap,bprime_formula,bprime_fd` (`b` from the smooth-fit extraction).
pub fn write_diagnostics_csv<T: Real>(w: &mut impl Write, report: &DiagnosticsReport<T>, prov: &Provenance) -> Result<()> {
    header(w, prov, "t,b,B,smooth_fit_residual,uxx_gap,bprime_formula,bprime_fd")?;
    for l in &report.levels {
        row(
            w,
            &[
                fmt_float(l.t.as_f64()),
                fmt_float(l.b_smooth.as_f64()),
                opt(l.big_b.map(|b| b.as_f64())),
                fmt_float(l.smooth_fit_residual.as_f64()),
                fmt_float(l.uxx_gap.as_f64()),
                fmt_float(l.bprime_formula.as_f64()),
                opt(l.bprime_fd.map(|b| b.as_f64())),
            ],
        )?;
    }
    Ok(())
}

/// `t,v,v_fd,bprime_from_v,bprime_fd`.
pub fn write_volterra_csv<T: Real>(w: &mut impl Write, res: &VolterraResult<T>, prov: &Provenance) -> Result<()> {
    header(w, prov, "t,v,v_fd,bprime_from_v,bprime_fd")?;
    for k in 0..res.t.len() {
        row(
            w,
            &[
                fmt_float(res.t[k].as_f64()),
                fmt_float(res.v[k].as_f64()),
                fmt_float(res.v_fd[k].as_f64()),
                fmt_float(res.bprime_from_v[k].as_f64()),
                opt(res.bprime_fd[k].map(|b| b.as_f64())),
            ],
        )?;
    }
    Ok(())
}

/// `{"tool", "config", "<key>": body}` with floats rounded, pretty-printed.
pub fn write_json(w: &mut impl Write, key: &str, body: &impl Serialize, prov: &Provenance) -> Result<()> {
    let body = serde_json::to_value(body).map_err(|e| Error::Unsupported(e.to_string()))?;
    let mut doc = serde_json::Map::new();
    doc.insert("tool".into(), Value::String(prov.tool.clone()));
    doc.insert("config".into(), prov.config.clone());
    doc.insert(key.into(), body);
    serde_json::to_writer_pretty(&mut *w, &round_json(Value::Object(doc))).map_err(|e| Error::Unsupported(e.to_string()))?;
    writeln!(w).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_twelve_digits() {
        assert_eq!(fmt_float(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(round_json(serde_json::json!({"a": [1.0 / 3.0]}))["a"][0], serde_json::json!(0.333333333333));
    }

    #[test]
    fn csv_header_embeds_config() {
        let c = BoundaryCurve::synthetic(vec![0.0, 0.5], vec![4.6, 4.5], 0.01);
        let mut out = Vec::new();
        write_boundary_csv(&mut out, &c, &Provenance::new(serde_json::json!({"seed": 7}))).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# tool: freebound "));
        assert_eq!(lines[1], "# config: {\"seed\":7}");
        assert_eq!(lines[2], "t,b");
        assert_eq!(lines.len(), 5);
    }
}
