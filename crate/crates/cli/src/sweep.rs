//! Ordered, flushed emission of rows computed in parallel, and the generic
//! quantity sweep.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use crate::config::{Config, Model};
use crate::csv_out::{CsvWriter, Header};
use crate::error::{CliError, CliResult};
use crate::quantities::Plan;

/// One row for each open writer, plus a convergence flag.
pub struct RowSet {
    pub rows: Vec<Vec<String>>,
    pub converged: bool,
}

impl RowSet {
    pub fn single(row: Vec<String>, converged: bool) -> Self {
        RowSet {
            rows: vec![row],
            converged,
        }
    }
}

/// Evaluates `keys` in parallel blocks and writes each block's rows in key
/// order, flushing after every block so an interrupted run keeps what it
/// finished. Returns whether every row converged.
pub fn stream<T, F>(keys: &[T], writers: &mut [CsvWriter], eval: F) -> CliResult<bool>
where
    T: Sync,
    F: Fn(&T) -> CliResult<RowSet> + Sync,
{
    let block = (2 * rayon::current_num_threads()).max(1);
    let mut converged = true;
    for keys in keys.chunks(block) {
        let results: Vec<CliResult<RowSet>> = keys.par_iter().map(&eval).collect();
        for result in results {
            let set = result?;
            debug_assert_eq!(set.rows.len(), writers.len());
            for (w, row) in writers.iter_mut().zip(&set.rows) {
                w.row(row)?;
            }
            converged &= set.converged;
        }
        for w in writers.iter_mut() {
            w.flush()?;
        }
    }
    Ok(converged)
}

/// Files written by a command and whether all numerics converged.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<(PathBuf, usize)>,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl Report {
    pub fn add(&mut self, w: &CsvWriter) {
        self.files.push((w.path().to_path_buf(), w.rows()));
    }
}

/// Provenance header shared by every command.
pub fn provenance(command: &str, timestamp: &str, config: &Config, model: Model) -> Header {
    let mut h = Header::new(command, timestamp);
    let s = &config.scenario;
    let kappa_key = if model == Model::Fixed {
        "kappa"
    } else {
        "kappa_bar"
    };
    h.push(
        "params",
        json!({ "model": model.name(), "n_s": s.n_s, "n_e": s.n_e, kappa_key: s.kappa })
            .to_string(),
    );
    h.push(
        "numerics",
        serde_json::to_string(&config.numerics).expect("numerics serialise"),
    );
    h
}

pub fn run_sweep(config: &Config, timestamp: &str) -> CliResult<Report> {
    let output = config
        .output
        .as_ref()
        .ok_or_else(|| CliError::validation("sweep: config needs `output`"))?;
    let model = config.scenario.model_or(Model::Fixed);
    config.scenario.validate(model)?;
    let grid = config
        .m_grid
        .as_ref()
        .ok_or_else(|| CliError::validation("sweep: config needs `m_grid`"))?;
    let ms = grid.values()?;
    let plan = Plan::new(&config.quantities, model, config.linear)?;

    let mut header = provenance("sweep", timestamp, config, model);
    header.push(
        "m_grid",
        serde_json::to_string(grid).expect("grid serialises"),
    );
    header.push(
        "quantities",
        plan.quantities
            .iter()
            .map(|q| q.name())
            .collect::<Vec<_>>()
            .join(" "),
    );
    header.push("units", "log_* natural log of error probability; p_* linear; r_* = -ln P / M; empty cell = undefined or underflow");
    let mut writers = [CsvWriter::create(output, &header, &plan.columns())?];
    let converged = stream(&ms, &mut writers, |&m| {
        let (row, ok) = plan.evaluate(&config.scenario, m, &config.numerics)?;
        Ok(RowSet::single(row, ok))
    })?;
    let mut report = Report {
        converged,
        ..Report::default()
    };
    report.add(&writers[0]);
    Ok(report)
}
