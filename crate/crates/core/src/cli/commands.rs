use std::path::{Path, PathBuf};

use num_rational::BigRational;

use super::config::{scheme_label, ExperimentConfig};
use super::plot::{convergence_svg, Series};
use super::table::{Cell, ResultTable};
use crate::coeffs::{file_checksum, minimal_q, save_cache, CoeffTensor, ResidualKind, DEFAULT_SEARCH_CAP};
use crate::error::{Error, Result};
use crate::ito::residual_study;
use crate::spde::{
    simulate_path, steps_in, strong_error_estimate, ConvergenceSetup, GalerkinModel, Scheme, StepContext,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn header(t: &mut ResultTable, command: &str, cfg: &ExperimentConfig) {
    t.meta("command", command).meta("version", VERSION).meta("seed", cfg.seed);
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom() == &1.into() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Output of `coeffs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffsOutcome {
    pub path: PathBuf,
    pub entries: usize,
    pub checksum: String,
    pub written: bool,
    /// Rows `j = 0..=6` of `Cbar_{3 j k}`, `k = 0..=6`, as printed fractions.
    pub table2: Option<Vec<Vec<String>>>,
}

impl CoeffsOutcome {
    pub fn render(&self) -> String {
        let mut s = format!(
            "cache: {}\nentries: {}\nchecksum: {}\nstatus: {}\n",
            self.path.display(),
            self.entries,
            self.checksum,
            if self.written { "written" } else { "unchanged" }
        );
        if let Some(rows) = &self.table2 {
            s.push_str("\nCbar_3jk (rows j, columns k)\n");
            s.push_str(&format!("{:>3}", "j\\k"));
            for k in 0..rows.len() {
                s.push_str(&format!(" {k:>12}"));
            }
            s.push('\n');
            for (j, row) in rows.iter().enumerate() {
                s.push_str(&format!("{j:>3}"));
                for v in row {
                    s.push_str(&format!(" {v:>12}"));
                }
                s.push('\n');
            }
        }
        s
    }
}

pub fn cmd_coeffs(k: usize, q: usize, out: &Path, table2: bool) -> Result<CoeffsOutcome> {
    if !(k == 2 || k == 3) {
        return Err(Error::InvalidArgument(format!("order k must be 2 or 3, got {k}")));
    }
    if table2 && (k != 3 || q < 6) {
        return Err(Error::InvalidArgument("--table2 needs k = 3 and q >= 6".into()));
    }
    let tensor = CoeffTensor::build(k, q)?;
    let written = save_cache(&tensor, out)?;
    let table2 = if table2 {
        let mut rows = Vec::with_capacity(7);
        for j in 0..=6 {
            rows.push(
                (0..=6)
                    .map(|kk| tensor.get(&[3, j, kk]).map(fmt_rational))
                    .collect::<Result<_>>()?,
            );
        }
        Some(rows)
    } else {
        None
    };
    Ok(CoeffsOutcome {
        path: out.to_path_buf(),
        entries: tensor.len(),
        checksum: file_checksum(&tensor),
        written,
        table2,
    })
}

pub fn cmd_minimal_q(cfg: &ExperimentConfig, steps: &[f64]) -> Result<ResultTable> {
    let mut t = ResultTable::new(&[
        "step",
        "q",
        "q1",
        "residual_q",
        "residual_q1",
        "threshold",
        "boundary_q",
        "boundary_q1",
    ]);
    header(&mut t, "minimal-q", cfg);
    t.meta("criterion", "smallest index with residual <= step^4");
    t.meta("units", "step in time units; residuals in time^2 (q) and time^3 (q1)");
    for &step in steps {
        let p = minimal_q(step, ResidualKind::Pairwise, DEFAULT_SEARCH_CAP)?;
        let r = minimal_q(step, ResidualKind::Triple, DEFAULT_SEARCH_CAP)?;
        t.push(vec![
            step.into(),
            p.q.into(),
            r.q.into(),
            p.residual.into(),
            r.residual.into(),
            p.threshold.into(),
            p.boundary.into(),
            r.boundary.into(),
        ]);
    }
    Ok(t)
}

pub fn cmd_simulate_integrals(cfg: &ExperimentConfig, step: f64, paths: usize) -> Result<ResultTable> {
    let trunc = cfg.truncation(cfg.q, cfg.q1, step)?;
    let study = residual_study(step, (trunc.q, trunc.q1), (cfg.q_ref, cfg.q1_ref), paths, cfg.seed)?;
    let mut t = ResultTable::new(&["quantity", "empirical", "std_err", "analytic", "rel_error", "z_score"]);
    header(&mut t, "simulate-integrals", cfg);
    t.meta("step", step)
        .meta("paths", paths)
        .meta("q", trunc.q)
        .meta("q1", trunc.q1)
        .meta("q_ref", cfg.q_ref)
        .meta("q1_ref", cfg.q1_ref)
        .meta("tensor_checksum", file_checksum(&CoeffTensor::build(3, cfg.q1_ref)?))
        .meta("components", "double integrals on (1,2), triple integrals on (1,2,3)")
        .meta("units", "mean squares in time^2 (pairwise) and time^3 (triple)");
    for c in &study.checks {
        t.push(vec![
            c.name.into(),
            c.empirical.into(),
            c.std_err.into(),
            c.analytic.into(),
            c.rel_error().into(),
            c.z_score().into(),
        ]);
    }
    t.push(vec![
        "identity_violations".into(),
        study.identity_violations.into(),
        0.0.into(),
        0.0.into(),
        0.0.into(),
        0.0.into(),
    ]);
    Ok(t)
}

fn tensor_for(scheme: Scheme, q1: usize) -> Result<Option<CoeffTensor>> {
    Ok(match scheme {
        Scheme::WagnerPlaten(_) => Some(CoeffTensor::build(3, q1)?),
        Scheme::Milstein => None,
    })
}

pub fn cmd_solve(cfg: &ExperimentConfig, step: f64) -> Result<ResultTable> {
    let model = cfg.build_model()?;
    let trunc = cfg.truncation(cfg.q, cfg.q1, step)?;
    let n_steps = steps_in(cfg.horizon, step)?;
    let tensor = tensor_for(cfg.scheme, trunc.q1)?;
    let ctx = StepContext::new(&model, cfg.scheme, step, trunc, tensor.as_ref())?;
    let path = simulate_path(&model, &ctx, n_steps, cfg.seed, cfg.path_index)?;

    let n = model.dim();
    let mut cols = vec!["step_index".to_string(), "time".to_string()];
    cols.extend((1..=n).map(|k| format!("y_{k}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = ResultTable::new(&col_refs);
    header(&mut t, "solve", cfg);
    t.meta("model", cfg.model)
        .meta("scheme", scheme_label(cfg.scheme))
        .meta("step", step)
        .meta("n_steps", n_steps)
        .meta("m", trunc.m)
        .meta("q", trunc.q)
        .meta("q1", trunc.q1)
        .meta("path_index", cfg.path_index)
        .meta("units", "time in model time units; y_k is the k-th spectral coordinate");
    if let Some(tensor) = &tensor {
        t.meta("tensor_checksum", file_checksum(tensor));
    }
    for (p, (time, y)) in path.times().zip(&path.states).enumerate() {
        let keep = p == n_steps || (cfg.snapshot_every > 0 && p % cfg.snapshot_every == 0);
        if keep {
            let mut row: Vec<Cell> = vec![p.into(), time.into()];
            row.extend(y.iter().map(|v| Cell::Real(*v)));
            t.push(row);
        }
    }
    Ok(t)
}

/// Strong-error table and slope per scheme.
pub fn cmd_convergence(
    cfg: &ExperimentConfig,
    steps: &[f64],
    paths: usize,
    plot: Option<&Path>,
) -> Result<ResultTable> {
    let model = cfg.build_model()?;
    let finest = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let trunc = cfg.truncation(cfg.convergence_q, cfg.convergence_q1, finest)?;
    let mut t = ResultTable::new(&["scheme", "step", "rms", "rms_se"]);
    header(&mut t, "convergence", cfg);
    t.meta("model", cfg.model)
        .meta("horizon", cfg.horizon)
        .meta("step_ref", cfg.step_ref)
        .meta("paths", paths)
        .meta("m", trunc.m)
        .meta("q", trunc.q)
        .meta("q1", trunc.q1)
        .meta("units", "rms of the Euclidean endpoint distance in spectral coordinates");
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for &scheme in &cfg.convergence_schemes {
        let setup = ConvergenceSetup {
            scheme,
            trunc,
            ref_trunc: trunc,
            steps: steps.to_vec(),
            step_ref: cfg.step_ref,
            horizon: cfg.horizon,
            paths,
            seed: cfg.seed,
        };
        let table = strong_error_estimate(&model, &setup)?;
        let label = scheme_label(scheme);
        t.meta(
            &format!("slope_{}", label.replace('-', "_")),
            format!("{:.4} +- {:.4}", table.slope, table.slope_se),
        );
        for r in &table.rows {
            t.push(vec![label.into(), r.step.into(), r.rms.into(), r.rms_se.into()]);
        }
        if model.noise_free() {
            continue;
        }
        labels.push(format!("{label} (slope {:.2})", table.slope));
        series.push(table.rows.iter().map(|r| (r.step, r.rms)).collect::<Vec<_>>());
    }
    if let Some(p) = plot {
        let s: Vec<Series> = labels
            .iter()
            .zip(series)
            .map(|(l, points)| Series { label: l, points })
            .collect();
        convergence_svg(p, "strong error", &s)?;
    }
    Ok(t)
}
