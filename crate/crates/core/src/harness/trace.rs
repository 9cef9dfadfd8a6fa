use super::{atomic_write, HarnessError};
use crate::solver::SolveTrace;
use std::path::Path;

/// One line of a trace file. Iteration 0 is the initial residual.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub fg_rel: f64,
    pub bound: f64,
    /// Relative FFOM residual; `None` where FFOM is undefined.
    pub ff_rel: Option<f64>,
    /// `‖r_j^P‖`; `None` on row 0.
    pub p_residual: Option<f64>,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceRecord {
    /// Free-form `key = value` lines written into the header.
    pub meta: Vec<String>,
    pub rows: Vec<TraceRow>,
}

pub const COLUMNS: &str = "iteration fg_rel_residual bound ff_rel_residual p_residual inner_iters";
const NAN_NOTE: &str = " ('nan' = undefined: FFOM singular, or no inner solve on row 0)";

/// Builds the record for a solve; `bound(j)` gives the bound column.
pub fn trace_record(trace: &SolveTrace, meta: Vec<String>, bound: impl Fn(usize) -> f64) -> TraceRecord {
    let r0 = trace.initial_resnorm;
    let mut rows = vec![TraceRow {
        iteration: 0,
        fg_rel: 1.0,
        bound: bound(0),
        ff_rel: Some(1.0),
        p_residual: None,
        inner_iters: 0,
    }];
    for (i, s) in trace.steps.iter().enumerate() {
        rows.push(TraceRow {
            iteration: i + 1,
            fg_rel: s.fg_resnorm / r0,
            bound: bound(i + 1),
            ff_rel: s.ff_resnorm.map(|f| f / r0),
            p_residual: Some(s.p_resnorm),
            inner_iters: s.inner_iterations,
        });
    }
    TraceRecord { meta, rows }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format!("{v:.16e}"))
}

pub fn write_trace_dat(record: &TraceRecord, path: &Path) -> Result<(), HarnessError> {
    if record.rows.is_empty() {
        return Err(HarnessError::Config("trace record is empty".into()));
    }
    atomic_write(path, |w| {
        for m in &record.meta {
            writeln!(w, "# {m}")?;
        }
        writeln!(w, "# {COLUMNS}{NAN_NOTE}")?;
        for r in &record.rows {
            writeln!(
                w,
                "{} {:.16e} {:.16e} {} {} {}",
                r.iteration,
                r.fg_rel,
                r.bound,
                fmt_opt(r.ff_rel),
                fmt_opt(r.p_residual),
                r.inner_iters
            )?;
        }
        Ok(())
    })
}

pub fn read_trace_dat(path: &Path) -> Result<TraceRecord, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let err = |line: usize, message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
    let mut record = TraceRecord::default();
    for (i, l) in text.lines().enumerate() {
        let no = i + 1;
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(h) = t.strip_prefix('#') {
            let h = h.trim();
            if !h.starts_with(COLUMNS) {
                record.meta.push(h.to_string());
            }
            continue;
        }
        let tok: Vec<&str> = t.split_whitespace().collect();
        if tok.len() != 6 {
            return Err(err(no, format!("expected 6 columns, found {}", tok.len())));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| err(no, format!("bad number '{s}'")));
        let opt = |s: &str| f(s).map(|v| (!v.is_nan()).then_some(v));
        let u = |s: &str| s.parse::<usize>().map_err(|_| err(no, format!("bad integer '{s}'")));
        record.rows.push(TraceRow {
            iteration: u(tok[0])?,
            fg_rel: f(tok[1])?,
            bound: f(tok[2])?,
            ff_rel: opt(tok[3])?,
            p_residual: opt(tok[4])?,
            inner_iters: u(tok[5])?,
        });
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize, x: f64) -> TraceRow {
        TraceRow { iteration: i, fg_rel: x, bound: x.sqrt(), ff_rel: None, p_residual: Some(1.0 / 3.0), inner_iters: 7 }
    }

    #[test]
    fn single_row_is_header_plus_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.dat");
        write_trace_dat(&TraceRecord { meta: vec![], rows: vec![row(0, 1.0)] }, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert!(data[0].contains("nan"));
    }

    #[test]
    fn roundtrip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.dat");
        let rec = TraceRecord {
            meta: vec!["experiment = test".into()],
            rows: (0..5).map(|i| row(i, 0.1f64.powi(i as i32) * std::f64::consts::PI)).collect(),
        };
        write_trace_dat(&rec, &p).unwrap();
        assert_eq!(read_trace_dat(&p).unwrap(), rec);
    }

    #[test]
    fn empty_record_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_trace_dat(&TraceRecord::default(), &dir.path().join("x.dat")).is_err());
    }
}
