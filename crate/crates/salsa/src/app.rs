//! Executes parsed commands and writes their output files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use salsa_core::bench::{run_experiment, run_on_observation, synthetic_scene, ExperimentReport};
use salsa_core::build_psf;

use crate::cli::{Command, DeblurConfig, PsfDumpConfig, RunConfig};
use crate::clock::WallClock;
use crate::pgm::{read_pgm, write_pgm};
use crate::report::{reconstruction_file, trace_file, Report, OBSERVATION_FILE, REPORT_FILE};
use crate::trace_csv::{format_float, write_trace};

pub const SYNTHETIC_SIDE: usize = 256;

#[derive(Debug)]
pub struct Outcome {
    pub report: Option<ExperimentReport>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    /// 0 when no solver failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match &self.report {
            Some(r) if !r.all_succeeded() => 1,
            _ => 0,
        }
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Run(c) => run(c),
        Command::Deblur(c) => deblur(c),
        Command::PsfDump(c) => psf_dump(c),
    }
}

fn run(c: &RunConfig) -> Result<Outcome> {
    let x = match &c.image {
        Some(p) => read_pgm(p)?,
        None => synthetic_scene(SYNTHETIC_SIDE, SYNTHETIC_SIDE),
    };
    let report = run_experiment(&c.spec, &x, &WallClock::new())?;
    let files = write_outputs(&c.out, &report, c.image.as_deref(), true)?;
    Ok(Outcome {
        report: Some(report),
        files,
    })
}

fn deblur(c: &DeblurConfig) -> Result<Outcome> {
    let y = read_pgm(&c.image)?;
    let reference = c.reference.as_ref().map(read_pgm).transpose()?;
    let report = run_on_observation(&c.spec, &y, reference.as_ref(), &WallClock::new())?;
    let files = write_outputs(&c.out, &report, Some(&c.image), false)?;
    Ok(Outcome {
        report: Some(report),
        files,
    })
}

/// Writes reconstructions, traces and `report.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    report: &ExperimentReport,
    source: Option<&Path>,
    with_observation: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    if with_observation {
        let p = dir.join(OBSERVATION_FILE);
        write_pgm(&report.observation, &p)?;
        files.push(p);
    }
    for run in &report.runs {
        let Some(o) = run.output() else { continue };
        let p = dir.join(reconstruction_file(run.solver));
        write_pgm(&o.image, &p)?;
        files.push(p);
        let p = dir.join(trace_file(run.solver));
        let f = fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        write_trace(&o.trace, io::BufWriter::new(f)).with_context(|| format!("writing {}", p.display()))?;
        files.push(p);
    }
    let p = dir.join(REPORT_FILE);
    let json = Report::new(report, source, with_observation).to_json();
    fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?;
    files.push(p);
    Ok(files)
}

pub fn psf_csv(c: &PsfDumpConfig) -> Result<String> {
    let psf = build_psf(c.blur, &c.params)?;
    let (rows, cols) = psf.support();
    let mut s = String::new();
    for r in 0..rows {
        let line: Vec<String> = psf.taps()[r * cols..(r + 1) * cols]
            .iter()
            .map(|&v| format_float(v))
            .collect();
        s += &line.join(",");
        s.push('\n');
    }
    Ok(s)
}

fn psf_dump(c: &PsfDumpConfig) -> Result<Outcome> {
    let csv = psf_csv(c)?;
    let files = match &c.out {
        Some(p) => {
            fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
            vec![p.clone()]
        }
        None => {
            io::stdout().write_all(csv.as_bytes())?;
            Vec::new()
        }
    };
    Ok(Outcome { report: None, files })
}
