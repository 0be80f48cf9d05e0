use rayon::prelude::*;

use super::{approx_i01, approx_i1, approx_i10, approx_i11, approx_i111, draw_basis};
use crate::coeffs::{pairwise_residual, triple_residual, CoeffTensor};
use crate::error::{Error, Result};
use crate::rng::StreamFactory;

/// Monte Carlo mean next to its analytic value.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub name: &'static str,
    pub empirical: f64,
    pub std_err: f64,
    pub analytic: f64,
}

impl MomentCheck {
    pub fn rel_error(&self) -> f64 {
        (self.empirical - self.analytic).abs() / self.analytic.abs()
    }

    /// Distance to the analytic value in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.analytic).abs() / self.std_err
    }
}

/// Empirical mean-square truncation errors of the double and triple integrals
/// on distinct components.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStudy {
    pub step: f64,
    pub q: usize,
    pub q1: usize,
    pub q_ref: usize,
    pub q1_ref: usize,
    pub paths: usize,
    pub checks: Vec<MomentCheck>,
    /// Samples breaking the increment-product or low-order sum identity.
    pub identity_violations: usize,
}

/// The truncation error at `q` is measured against the same draws at `q_ref`,
/// so its mean square is `residual(q) - residual(q_ref)` exactly.
pub fn residual_study(
    step: f64,
    (q, q1): (usize, usize),
    (q_ref, q1_ref): (usize, usize),
    paths: usize,
    seed: u64,
) -> Result<ResidualStudy> {
    if q_ref <= q || q1_ref <= q1 {
        return Err(Error::InvalidArgument(format!(
            "reference truncation ({q_ref}, {q1_ref}) must exceed ({q}, {q1})"
        )));
    }
    if paths < 2 {
        return Err(Error::InsufficientPaths {
            required: 2,
            found: paths,
        });
    }
    let tensor = CoeffTensor::build(3, q1_ref)?;
    let c_q = tensor.scaled(q1, step)?;
    let c_ref = tensor.scaled(q1_ref, step)?;
    let q_max = q_ref.max(q1_ref);
    let factory = StreamFactory::new(seed);

    let samples: Vec<([f64; 4], bool)> = (0..paths as u64)
        .into_par_iter()
        .map(|p| -> Result<([f64; 4], bool)> {
            let d = draw_basis(&mut factory.stream(p), 3, q_max);
            let i11 = approx_i11(&d, 0, 1, q, step)?;
            let i11_ref = approx_i11(&d, 0, 1, q_ref, step)?;
            let i111 = approx_i111(&d, 0, 1, 2, &c_q)?;
            let i111_ref = approx_i111(&d, 0, 1, 2, &c_ref)?;
            let prod = step * d.get(0, 0) * d.get(1, 0);
            let swap = approx_i11(&d, 1, 0, q, step)?;
            let mut ok = (i11 + swap - prod).abs() <= 1e-12 * (1.0 + prod.abs());
            let low = approx_i01(&d, 0, step)? + approx_i10(&d, 0, step)? - step * approx_i1(&d, 0, step)?;
            ok &= low.abs() <= 1e-12;
            Ok((
                [(i11_ref - i11).powi(2), i11 * i11, (i111_ref - i111).powi(2), i111 * i111],
                ok,
            ))
        })
        .collect::<Result<_>>()?;

    let n = paths as f64;
    let column = |i: usize| -> (f64, f64) {
        let mean = samples.iter().map(|s| s.0[i]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s.0[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let pr = pairwise_residual(q, step);
    let tr = triple_residual(q1, step, &tensor)?;
    let analytic = [
        pr - pairwise_residual(q_ref, step),
        step * step / 2.0 - pr,
        tr - triple_residual(q1_ref, step, &tensor)?,
        step.powi(3) / 6.0 - tr,
    ];
    let names = [
        "pairwise_truncation_ms",
        "pairwise_second_moment",
        "triple_truncation_ms",
        "triple_second_moment",
    ];
    let checks = (0..4)
        .map(|i| {
            let (empirical, std_err) = column(i);
            MomentCheck {
                name: names[i],
                empirical,
                std_err,
                analytic: analytic[i],
            }
        })
        .collect();
    Ok(ResidualStudy {
        step,
        q,
        q1,
        q_ref,
        q1_ref,
        paths,
        checks,
        identity_violations: samples.iter().filter(|s| !s.1).count(),
    })
}
