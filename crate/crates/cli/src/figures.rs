//! Data files behind each figure id, at the reference scenario unless
//! overridden.

use std::path::{Path, PathBuf};

use qi_cd_core::baselines::{ci_helstrom_with, geometric_grid};
use qi_cd_core::cd_module::{
    converge_exponent, pcd_exact_with, pcd_large_m_with, pcd_qcb, pcd_threshold,
};
use qi_cd_core::{
    asymptotics, ci_error_exponent, ci_roc, idler_stats, pcd_poisson_threshold, ScenarioParams,
};

use crate::config::{Config, MGrid, Model};
use crate::csv_out::{fmt_f64, CsvWriter, Header};
use crate::error::{CliError, CliResult};
use crate::quantities::{Plan, Quantity};
use crate::sweep::{provenance, stream, Report, RowSet};

pub const FIGURES: [&str; 7] = ["fig1", "fig2a", "fig2b", "fig2c", "fig5", "fig7", "fig8"];

/// Thresholds drawn as individual curves in the staircase figure.
const FIG1_THRESHOLDS: usize = 4;

pub fn run_figure(id: &str, config: &Config, out_dir: &Path, timestamp: &str) -> CliResult<Report> {
    let mut report = match id {
        "fig1" => fig1(config, out_dir, timestamp),
        "fig2a" => plan_figure(
            "fig2a",
            config,
            out_dir,
            timestamp,
            Model::Fixed,
            &[
                Quantity::PcdExact,
                Quantity::PcdLargeM,
                Quantity::PcdAsy,
                Quantity::Threshold,
                Quantity::Qcb,
                Quantity::Ng,
                Quantity::CiHelstrom,
            ],
            MGrid::Geometric {
                start: 1e5,
                stop: 1e10,
                points: 26,
            },
            &[],
        ),
        "fig2b" => plan_figure(
            "fig2b",
            config,
            out_dir,
            timestamp,
            Model::Fixed,
            &[
                Quantity::PcdLargeM,
                Quantity::PcdAsy,
                Quantity::Qcb,
                Quantity::Ng,
                Quantity::CiHelstrom,
                Quantity::Exponents,
            ],
            MGrid::Geometric {
                start: 1e5,
                stop: 1e11,
                points: 25,
            },
            &[],
        ),
        "fig2c" => fig2c(config, out_dir, timestamp),
        "fig5" => fig5(config, out_dir, timestamp),
        "fig7" => fig7(config, out_dir, timestamp),
        "fig8" => fig8(config, out_dir, timestamp),
        other => Err(CliError::validation(format!(
            "unknown figure `{other}`; valid figures: {}",
            FIGURES.join(", ")
        ))),
    }?;
    if !config.quantities.is_empty() {
        report
            .notes
            .push("`quantities` applies to sweep only and was ignored".into());
    }
    Ok(report)
}

fn grid_or(config: &Config, default: MGrid) -> MGrid {
    config.m_grid.clone().unwrap_or(default)
}

fn header(id: &str, timestamp: &str, config: &Config, model: Model, grid: &MGrid) -> Header {
    let mut h = provenance(&format!("figure {id}"), timestamp, config, model);
    h.push(
        "m_grid",
        serde_json::to_string(grid).expect("grid serialises"),
    );
    h
}

fn log_cell(log_p: f64) -> String {
    fmt_f64(log_p)
}

#[allow(clippy::too_many_arguments)]
fn plan_figure(
    id: &str,
    config: &Config,
    out_dir: &Path,
    timestamp: &str,
    model: Model,
    quantities: &[Quantity],
    default_grid: MGrid,
    notes: &[(&str, &str)],
) -> CliResult<Report> {
    config.scenario.require_model(id, model)?;
    config.scenario.validate(model)?;
    let grid = grid_or(config, default_grid);
    let ms = grid.values()?;
    let plan = Plan::new(quantities, model, config.linear)?;
    let mut h = header(id, timestamp, config, model, &grid);
    h.push("units", "log_* natural log of error probability; p_* linear; r_* = -ln P / M; empty cell = undefined or underflow");
    for (k, v) in notes {
        h.push(k, *v);
    }
    let mut writers = [CsvWriter::create(
        &out_dir.join(format!("{id}.csv")),
        &h,
        &plan.columns(),
    )?];
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

fn fig1(config: &Config, out_dir: &Path, timestamp: &str) -> CliResult<Report> {
    config.scenario.require_model("fig1", Model::Fixed)?;
    config.scenario.validate(Model::Fixed)?;
    let grid = grid_or(
        config,
        MGrid::Linear {
            start: 1e6,
            stop: 6e7,
            points: 300,
        },
    );
    let ms = grid.values()?;
    let h = header("fig1", timestamp, config, Model::Fixed, &grid);

    let mut staircase = h.clone();
    staircase.push(
        "series",
        "optimal photon-count threshold of the large-M pair",
    );
    let mut curves = h;
    curves.push(
        "series",
        "log_pcd_large_m Helstrom; log_threshold_nK exact threshold-K error; log_poisson_nK Poisson approximation",
    );
    let mut cols = vec![
        "m".to_string(),
        "log_pcd_large_m".into(),
        "threshold".into(),
    ];
    cols.extend((0..FIG1_THRESHOLDS).map(|k| format!("log_threshold_n{k}")));
    cols.extend((0..FIG1_THRESHOLDS).map(|k| format!("log_poisson_n{k}")));

    let mut writers = [
        CsvWriter::create(
            &out_dir.join("fig1_threshold.csv"),
            &staircase,
            &["m".into(), "threshold".into()],
        )?,
        CsvWriter::create(&out_dir.join("fig1_error.csv"), &curves, &cols)?,
    ];
    let converged = stream(&ms, &mut writers, |&m| {
        let p = config.scenario.params(Model::Fixed, m);
        let hel = pcd_large_m_with(&p, &config.numerics)?;
        let n = hel
            .optimal_threshold
            .expect("large-M result carries its threshold");
        let mut row = vec![m.to_string(), log_cell(hel.ln_p()), n.to_string()];
        for k in 0..FIG1_THRESHOLDS {
            row.push(log_cell(pcd_threshold(&p, k)?.ln_p()));
        }
        for k in 0..FIG1_THRESHOLDS {
            row.push(log_cell(pcd_poisson_threshold(&p, k)?.ln_p()));
        }
        Ok(RowSet {
            rows: vec![vec![m.to_string(), n.to_string()], row],
            converged: true,
        })
    })?;
    let mut report = Report {
        converged,
        ..Report::default()
    };
    writers.iter().for_each(|w| report.add(w));
    Ok(report)
}

fn fig2c(config: &Config, out_dir: &Path, timestamp: &str) -> CliResult<Report> {
    config.scenario.require_model("fig2c", Model::Fixed)?;
    let n_s_grid = config
        .n_s_grid
        .clone()
        .unwrap_or_else(|| (1..=7).rev().map(|k| 10f64.powi(-k)).collect());
    if n_s_grid.is_empty() {
        return Err(CliError::validation("n_s_grid is empty"));
    }
    for &ns in &n_s_grid {
        let mut s = config.scenario.clone();
        s.n_s = ns;
        s.validate(Model::Fixed)?;
    }
    let mut h = provenance("figure fig2c", timestamp, config, Model::Fixed);
    h.push(
        "n_s_grid",
        serde_json::to_string(&n_s_grid).expect("grid serialises"),
    );
    h.push(
        "exponent_grids",
        "doubling grids of 12 points; CI from M0 = 64*4*n_e/(kappa*n_s), QCB from M0 = 64/(2*xi); \
         converged when successive doublings change the exponent by < 0.5%",
    );
    h.push(
        "series",
        "data rows per n_s; reference_6db row carries the factor-4 exponent ratio",
    );
    h.push(
        "units",
        "r_* error exponents; empty cell = undefined (asymptote needs n_s < 1)",
    );
    let cols: Vec<String> = [
        "series",
        "n_s",
        "epsilon",
        "r_asy",
        "r_qcb",
        "r_ci",
        "ratio_asy_ci",
        "ratio_qcb_ci",
        "r_qcb_converged",
        "r_ci_converged",
        "r_ci_last_rel_change",
        "r_ci_m",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut writers = [CsvWriter::create(&out_dir.join("fig2c.csv"), &h, &cols)?];
    let converged = stream(&n_s_grid, &mut writers, |&ns| {
        let mut s = config.scenario.clone();
        s.n_s = ns;
        let p = s.params(Model::Fixed, 1);
        let asy = asymptotics(&p, 1).ok();

        let m_ci = (64.0 * 4.0 * s.n_e / (s.kappa * ns)).round().max(1.0) as u64;
        let ci = ci_error_exponent(&p, &geometric_grid(m_ci, 2.0, 12))?;
        let xi = idler_stats(&p, s.kappa)?.xi;
        let m_q = (64.0 / (2.0 * xi)).round().max(1.0) as u64;
        let qcb = converge_exponent(&geometric_grid(m_q, 2.0, 12), 0.005, |m| {
            Ok(pcd_qcb(&p.with_m(m))?.log_p_error)
        })?;

        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let r_asy = asy.map(|a| a.r_asy);
        let row = vec![
            "data".into(),
            fmt_f64(ns),
            opt(asy.map(|a| a.epsilon)),
            opt(r_asy),
            fmt_f64(qcb.value),
            fmt_f64(ci.value),
            opt(r_asy.map(|r| r / ci.value)),
            fmt_f64(qcb.value / ci.value),
            qcb.converged.to_string(),
            ci.converged.to_string(),
            fmt_f64(ci.last_rel_change),
            ci.sequence
                .last()
                .map(|x| x.0.to_string())
                .unwrap_or_default(),
        ];
        Ok(RowSet::single(row, ci.converged && qcb.converged))
    })?;
    let four = fmt_f64(4.0);
    let mut reference = vec![String::new(); cols.len()];
    reference[0] = "reference_6db".into();
    reference[6] = four.clone();
    reference[7] = four;
    writers[0].row(&reference)?;
    writers[0].flush()?;
    let mut report = Report {
        converged,
        ..Report::default()
    };
    report.add(&writers[0]);
    Ok(report)
}

fn fig5(config: &Config, out_dir: &Path, timestamp: &str) -> CliResult<Report> {
    let mut report = plan_figure(
        "fig5",
        config,
        out_dir,
        timestamp,
        Model::Rayleigh,
        &[Quantity::RayleighLb, Quantity::RayleighAchievable, Quantity::CiHelstrom, Quantity::CiRoc],
        MGrid::Geometric { start: 1e6, stop: 1e8, points: 21 },
        &[(
            "interpretation",
            "rayleigh_achievable uses the Helstrom-optimal count threshold of the reflectivity mixture, chosen per M",
        )],
    )?;
    if let Some(path) = &config.sfg_overlay {
        let w = sfg_overlay(path, &out_dir.join("fig5_sfg.csv"), timestamp)?;
        report.files.push(w);
    }
    Ok(report)
}

/// Copies user-supplied digitised `m,p` pairs into the CSV dialect.
fn sfg_overlay(src: &Path, dst: &Path, timestamp: &str) -> CliResult<(PathBuf, usize)> {
    let text = std::fs::read_to_string(src).map_err(|e| CliError::io(src, e))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let parsed = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((m, p)) if m > 0.0 && p > 0.0 && p <= 1.0 => points.push((m, p)),
            Some(_) => {
                return Err(CliError::validation(format!(
                    "{}:{}: need m > 0 and 0 < p <= 1",
                    src.display(),
                    i + 1
                )))
            }
            // A single non-numeric line is taken as the column header.
            None if points.is_empty() && i == 0 => {}
            None => {
                return Err(CliError::validation(format!(
                    "{}:{}: expected `m,p`",
                    src.display(),
                    i + 1
                )))
            }
        }
    }
    let mut h = Header::new("figure fig5 overlay", timestamp);
    h.push("source", src.display().to_string());
    h.push(
        "series",
        "externally digitised receiver curve, not computed here",
    );
    let mut w = CsvWriter::create(dst, &h, &["m".into(), "log_sfg".into()])?;
    for (m, p) in points {
        w.row(&[fmt_f64(m), fmt_f64(p.ln())])?;
    }
    w.flush()?;
    Ok((dst.to_path_buf(), w.rows()))
}

fn rel_diff(log_a: f64, log_b: f64) -> f64 {
    (log_b - log_a).exp_m1().abs()
}

fn fig7(config: &Config, out_dir: &Path, timestamp: &str) -> CliResult<Report> {
    if config.scenario.model.is_some() {
        return Err(CliError::validation(
            "fig7 evaluates both reflectivity models; remove `model` from the config",
        ));
    }
    config.scenario.validate(Model::Fixed)?;
    config.scenario.validate(Model::Rayleigh)?;
    let grid = grid_or(
        config,
        MGrid::Geometric {
            start: 1e5,
            stop: 1e8,
            points: 16,
        },
    );
    let ms = grid.values()?;
    let mut h = header("fig7", timestamp, config, Model::Fixed, &grid);
    h.push(
        "models",
        "fixed kappa and Rayleigh with mean kappa; rel_diff = |P_roc / P_helstrom - 1|",
    );
    let cols: Vec<String> = [
        "m",
        "log_ci_helstrom_fixed",
        "log_ci_roc_fixed",
        "rel_diff_fixed",
        "log_ci_helstrom_rayleigh",
        "log_ci_roc_rayleigh",
        "rel_diff_rayleigh",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut writers = [CsvWriter::create(&out_dir.join("fig7.csv"), &h, &cols)?];
    let converged = stream(&ms, &mut writers, |&m| {
        let mut row = vec![m.to_string()];
        for model in [Model::Fixed, Model::Rayleigh] {
            let p: ScenarioParams = config.scenario.params(model, m);
            let hel = ci_helstrom_with(&p, &config.numerics)?.ln_p();
            let roc = ci_roc(&p)?.ln_p();
            row.extend([log_cell(hel), log_cell(roc), fmt_f64(rel_diff(hel, roc))]);
        }
        Ok(RowSet::single(row, true))
    })?;
    let mut report = Report {
        converged,
        ..Report::default()
    };
    report.add(&writers[0]);
    Ok(report)
}

fn fig8(config: &Config, out_dir: &Path, timestamp: &str) -> CliResult<Report> {
    config.scenario.require_model("fig8", Model::Fixed)?;
    config.scenario.validate(Model::Fixed)?;
    let grid = grid_or(
        config,
        MGrid::Geometric {
            start: 1e6,
            stop: 6e7,
            points: 30,
        },
    );
    let ms = grid.values()?;
    let mut h = header("fig8", timestamp, config, Model::Fixed, &grid);
    h.push("series", "chi-square averaged (exact) against the y = 2M approximation; rel_deviation relative to exact");
    let cols: Vec<String> = [
        "m",
        "log_pcd_exact",
        "log_pcd_large_m",
        "rel_deviation",
        "pcd_exact_nodes",
        "pcd_exact_converged",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let path = out_dir.join("fig8.csv");
    let mut writers = [CsvWriter::create(&path, &h, &cols)?];
    let converged = stream(&ms, &mut writers, |&m| {
        let p = config.scenario.params(Model::Fixed, m);
        let exact = pcd_exact_with(&p, &config.numerics)?;
        let large = pcd_large_m_with(&p, &config.numerics)?.ln_p();
        let ex = exact.result.ln_p();
        let row = vec![
            m.to_string(),
            log_cell(ex),
            log_cell(large),
            fmt_f64(rel_diff(ex, large)),
            exact.quadrature.nodes.to_string(),
            exact.quadrature.converged.to_string(),
        ];
        Ok(RowSet::single(row, exact.quadrature.converged))
    })?;
    let (max_dev, at_m) = max_deviation(&path)?;
    writers[0].comment(
        "summary",
        &format!("max_rel_deviation={} at_m={at_m}", fmt_f64(max_dev)),
    )?;
    writers[0].flush()?;
    let mut report = Report {
        converged,
        ..Report::default()
    };
    report.add(&writers[0]);
    report.notes.push(format!(
        "fig8: max relative deviation {max_dev:.3e} at M = {at_m}"
    ));
    Ok(report)
}

/// Reads the deviation column back from the emitted file so the summary
/// describes exactly what was written.
fn max_deviation(path: &Path) -> CliResult<(f64, u64)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut best = (0.0, 0);
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let dev: f64 = cells[3].parse().unwrap_or(0.0);
        if dev >= best.0 {
            best = (dev, cells[0].parse().unwrap_or(0));
        }
    }
    Ok(best)
}
