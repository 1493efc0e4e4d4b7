//! Per-iteration trace files: `iter,elapsed_s,objective,isnr_db`.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! parsing a file gives back the exact `f64` values. A missing ISNR is an
//! empty field; LF line endings throughout.

use std::io::{Read, Write};

use salsa_core::{SolverTrace, TraceRecord};
use thiserror::Error;

pub const HEADER: [&str; 4] = ["iter", "elapsed_s", "objective", "isnr_db"];

#[derive(Debug, Error)]
pub enum TraceCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad trace header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: bad {column} value {value:?}")]
    Field {
        line: u64,
        column: &'static str,
        value: String,
    },
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

pub fn write_trace<W: Write>(trace: &SolverTrace, out: W) -> Result<(), TraceCsvError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            format_float(r.elapsed_seconds),
            format_float(r.objective),
            r.isnr_db.map(format_float).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn trace_to_string(trace: &SolverTrace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("trace CSV is ASCII")
}

pub fn read_trace<R: Read>(input: R) -> Result<SolverTrace, TraceCsvError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(input);
    let header = rd.headers()?;
    if header.iter().ne(HEADER) {
        return Err(TraceCsvError::Header(header.iter().map(String::from).collect()));
    }
    let mut trace = SolverTrace::default();
    for row in rd.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let float = |i: usize| {
            field(i).parse::<f64>().map_err(|_| TraceCsvError::Field {
                line,
                column: HEADER[i],
                value: field(i).to_owned(),
            })
        };
        let iter = field(0).parse().map_err(|_| TraceCsvError::Field {
            line,
            column: HEADER[0],
            value: field(0).to_owned(),
        })?;
        let isnr_db = if field(3).is_empty() { None } else { Some(float(3)?) };
        trace.records.push(TraceRecord {
            iter,
            elapsed_seconds: float(1)?,
            objective: float(2)?,
            isnr_db,
        });
    }
    Ok(trace)
}
