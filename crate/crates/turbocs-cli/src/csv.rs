//! CSV serialization of experiment results.
//!
//! Layout: `#`-prefixed metadata lines, then the fixed header
//! `iter,mse_sim,mse_stderr,mse_se`, then one row per iteration. Floats use
//! 17 significant digits (`{:.16e}`), so parsing a file recovers the arrays
//! bit-exactly; absent values (no simulation columns in prediction-only
//! output, no SE column for AMP on partial DFT) are empty fields. Output is
//! a pure function of the result, hence byte-stable across reruns.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::experiment::{ExperimentMetadata, ExperimentResult};
use crate::{HarnessError, Result};

pub const CSV_HEADER: &str = "iter,mse_sim,mse_stderr,mse_se";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

fn write_metadata<W: Write>(w: &mut W, meta: &ExperimentMetadata) -> io::Result<()> {
    writeln!(w, "# turbocs {}", meta.version)?;
    writeln!(
        w,
        "# algorithm={} n={} m={} lambda={} snr_db={} seed={} trials={} max_iters={} rel_tol={}",
        meta.algorithm.name(),
        meta.n,
        meta.m,
        meta.lambda,
        meta.snr_db,
        meta.seed,
        meta.trials,
        meta.max_iters,
        meta.rel_tol,
    )?;
    writeln!(w, "# excluded_trials={}", meta.excluded_trials)
}

/// Writes one experiment as CSV. Handles ragged lengths: rows cover the
/// longer of the simulation and prediction columns.
pub fn write_csv<W: Write>(w: &mut W, result: &ExperimentResult) -> io::Result<()> {
    write_metadata(w, &result.metadata)?;
    writeln!(w, "{CSV_HEADER}")?;
    let sim_len = result.per_iteration_mse.len();
    let se_len = result.se_prediction.as_ref().map_or(0, Vec::len);
    for i in 0..sim_len.max(se_len) {
        let sim = result.per_iteration_mse.get(i).copied();
        let err = result.per_iteration_stderr.get(i).copied();
        let se = result.se_prediction.as_ref().and_then(|c| c.get(i)).copied();
        writeln!(w, "{},{},{},{}", i + 1, fmt_opt(sim), fmt_opt(err), fmt_opt(se))?;
    }
    Ok(())
}

/// Joint CSV for the `compare` subcommand: same columns plus a leading
/// `algorithm` column, one block per algorithm.
pub fn write_compare_csv<W: Write>(w: &mut W, results: &[ExperimentResult]) -> io::Result<()> {
    for result in results {
        write_metadata(w, &result.metadata)?;
    }
    writeln!(w, "algorithm,{CSV_HEADER}")?;
    for result in results {
        let sim_len = result.per_iteration_mse.len();
        let se_len = result.se_prediction.as_ref().map_or(0, Vec::len);
        for i in 0..sim_len.max(se_len) {
            let sim = result.per_iteration_mse.get(i).copied();
            let err = result.per_iteration_stderr.get(i).copied();
            let se = result.se_prediction.as_ref().and_then(|c| c.get(i)).copied();
            writeln!(
                w,
                "{},{},{},{},{}",
                result.metadata.algorithm.name(),
                i + 1,
                fmt_opt(sim),
                fmt_opt(err),
                fmt_opt(se)
            )?;
        }
    }
    Ok(())
}

fn io_error(path: &Path, e: io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// Writes the CSV to a file, mapping failures to the I/O exit class.
pub fn write_csv_file(path: &Path, result: &ExperimentResult) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, result).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_compare_csv_file(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    write_compare_csv(&mut w, results).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

/// One parsed data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub iter: usize,
    pub mse_sim: Option<f64>,
    pub mse_stderr: Option<f64>,
    pub mse_se: Option<f64>,
}

fn parse_opt(field: &str, line_no: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| HarnessError::Io(format!("line {line_no}: bad float {field:?}: {e}")))
}

/// Parses a single-experiment CSV back into metadata lines and rows.
pub fn parse_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<CsvRow>)> {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io(format!("line {}: {e}", idx + 1)))?;
        if line.starts_with('#') {
            comments.push(line);
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(HarnessError::Io(format!("line {}: unexpected header {line:?}", idx + 1)));
            }
            saw_header = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarnessError::Io(format!("line {}: expected 4 fields", idx + 1)));
        }
        let iter = fields[0]
            .parse::<usize>()
            .map_err(|e| HarnessError::Io(format!("line {}: bad iter: {e}", idx + 1)))?;
        rows.push(CsvRow {
            iter,
            mse_sim: parse_opt(fields[1], idx + 1)?,
            mse_stderr: parse_opt(fields[2], idx + 1)?,
            mse_se: parse_opt(fields[3], idx + 1)?,
        });
    }
    if !saw_header {
        return Err(HarnessError::Io("missing header".into()));
    }
    Ok((comments, rows))
}
