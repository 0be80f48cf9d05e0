use rayon::prelude::*;

use super::model::GalerkinModel;
use super::scheme::{Scheme, StepContext};
use crate::coeffs::CoeffTensor;
use crate::error::{Error, Result};
use crate::ito::{draw_basis, AggregationMap, BundleSpec, GaussianBasisDraws, ItoIntegralBundle};
use crate::qwiener::{assemble_i1, assemble_j1, truncate_spectrum, ImageSet, TruncationParams};
use crate::rng::{PathRng, StreamFactory};

/// Fewest paths accepted by [`strong_error_estimate`].
pub const MIN_PATHS: usize = 100;

/// States at `t = p step`, `p = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |p| p as f64 * self.step)
    }

    pub fn endpoint(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Number of whole steps of size `step` in `span`, or an error if it does not divide.
pub fn steps_in(span: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !(span >= 0.0) {
        return Err(Error::InvalidArgument(format!("cannot tile {span} with step {step}")));
    }
    let n = (span / step).round();
    if (n * step - span).abs() > 1e-9 * span.max(step) {
        return Err(Error::InvalidArgument(format!("step {step} does not divide {span}")));
    }
    Ok(n as usize)
}

/// One path from `ctx`, drawing every step from substream `path` of `seed`.
pub fn simulate_path<M: GalerkinModel + ?Sized>(
    model: &M,
    ctx: &StepContext,
    n_steps: usize,
    seed: u64,
    path: u64,
) -> Result<Trajectory> {
    let mut rng = StreamFactory::new(seed).stream(path);
    simulate_with(model, ctx, n_steps, &mut rng)
}

pub fn simulate_with<M: GalerkinModel + ?Sized>(
    model: &M,
    ctx: &StepContext,
    n_steps: usize,
    rng: &mut PathRng,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(model.initial().to_vec());
    let mut draws = GaussianBasisDraws::zeros(ctx.trunc().m, ctx.q_max());
    for p in 0..n_steps {
        draws.refill(rng);
        let next = ctx.advance(model, &states[p], &draws)?;
        states.push(next);
    }
    Ok(Trajectory {
        step: ctx.step(),
        states,
    })
}

/// Setup of a coupled strong-error study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSetup {
    pub scheme: Scheme,
    pub trunc: TruncationParams,
    /// Truncation of the reference run; `q` and `q1` must not be below `trunc`.
    pub ref_trunc: TruncationParams,
    pub steps: Vec<f64>,
    pub step_ref: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
}

/// One row of a strong-error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub step: f64,
    pub rms: f64,
    /// Standard error of `rms` (delta method).
    pub rms_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub scheme: Scheme,
    pub rows: Vec<ErrorRow>,
    /// Least-squares slope of `log rms` against `log step`.
    pub slope: f64,
    pub slope_se: f64,
    pub paths: usize,
}

/// Least-squares line through `(x, y)`: `(slope, slope standard error, intercept)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se, intercept)
}

fn check_ref_trunc(setup: &ConvergenceSetup) -> Result<()> {
    let (t, r) = (setup.trunc, setup.ref_trunc);
    if r.m != t.m || r.q < t.q || r.q1 < t.q1 {
        return Err(Error::InvalidArgument(format!(
            "reference truncation (M={}, q={}, q1={}) must share M and dominate (M={}, q={}, q1={})",
            r.m, r.q, r.q1, t.m, t.q, t.q1
        )));
    }
    Ok(())
}

/// RMS endpoint error of `setup.scheme` at each step against a reference run
/// at `step_ref`, all levels driven by the same fine Brownian draws.
pub fn strong_error_estimate<M: GalerkinModel + ?Sized>(model: &M, setup: &ConvergenceSetup) -> Result<ErrorTable> {
    if setup.paths < MIN_PATHS {
        return Err(Error::InsufficientPaths {
            required: MIN_PATHS,
            found: setup.paths,
        });
    }
    if setup.steps.len() < 2 {
        return Err(Error::InvalidArgument("need at least two step sizes".into()));
    }
    check_ref_trunc(setup)?;
    let n_ref = steps_in(setup.horizon, setup.step_ref)?;
    let tensor = match setup.scheme {
        Scheme::WagnerPlaten(_) => Some(CoeffTensor::build(3, setup.ref_trunc.q1)?),
        Scheme::Milstein => None,
    };
    let ref_ctx = StepContext::new(model, setup.scheme, setup.step_ref, setup.ref_trunc, tensor.as_ref())?;
    let mut levels = Vec::with_capacity(setup.steps.len());
    for &step in &setup.steps {
        let n_sub = steps_in(step, setup.step_ref)?;
        let n_steps = steps_in(setup.horizon, step)?;
        let ctx = StepContext::new(model, setup.scheme, step, setup.trunc, tensor.as_ref())?;
        let map = AggregationMap::new(n_sub, ctx.q_max())?;
        levels.push((ctx, map, n_steps));
    }
    let m = setup.trunc.m;
    let fine_q = ref_ctx.q_max();
    let factory = StreamFactory::new(setup.seed);

    let per_path: Vec<Vec<f64>> = (0..setup.paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut rng = factory.stream(p);
            let fine: Vec<GaussianBasisDraws> = (0..n_ref).map(|_| draw_basis(&mut rng, m, fine_q)).collect();
            let mut y = model.initial().to_vec();
            for d in &fine {
                y = ref_ctx.advance(model, &y, d)?;
            }
            let mut errs = Vec::with_capacity(levels.len());
            for (ctx, map, n_steps) in &levels {
                let n_sub = map.substeps();
                let mut coarse = GaussianBasisDraws::zeros(m, map.q_max());
                let mut z = model.initial().to_vec();
                for s in 0..*n_steps {
                    map.aggregate_into(&fine[s * n_sub..(s + 1) * n_sub], &mut coarse)?;
                    z = ctx.advance(model, &z, &coarse)?;
                }
                errs.push(z.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum());
            }
            Ok(errs)
        })
        .collect::<Result<_>>()?;

    let n = setup.paths as f64;
    let mut rows = Vec::with_capacity(levels.len());
    for (i, &step) in setup.steps.iter().enumerate() {
        let mean = per_path.iter().map(|e| e[i]).sum::<f64>() / n;
        let var = per_path.iter().map(|e| (e[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let rms = mean.sqrt();
        let rms_se = if rms > 0.0 { (var / n).sqrt() / (2.0 * rms) } else { 0.0 };
        rows.push(ErrorRow { step, rms, rms_se });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.step.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.rms.ln()).collect();
    let (slope, slope_se, _) = fit_line(&lx, &ly);
    Ok(ErrorTable {
        scheme: setup.scheme,
        rows,
        slope,
        slope_se,
        paths: setup.paths,
    })
}

/// Mean-square effect of dropping noise components `M+1..4M` from `J1` and `I1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub m: usize,
    /// `lambda_{M+1}`
    pub lambda_next: f64,
    pub j1_ms: f64,
    pub i1_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailStudy {
    pub rows: Vec<TailRow>,
    /// Slopes of `log ms` against `log lambda_{M+1}`.
    pub j1_slope: f64,
    pub i1_slope: f64,
}

/// Compares `J1`, `I1` at `M` with the same quantities at `4M` on shared draws,
/// with the state frozen at the model's initial value.
pub fn tail_decay_study<M: GalerkinModel + ?Sized>(
    model: &M,
    ms: &[usize],
    step: f64,
    q: usize,
    samples: usize,
    seed: u64,
) -> Result<TailStudy> {
    if ms.len() < 2 {
        return Err(Error::InvalidArgument("need at least two values of M".into()));
    }
    let m_top = 4 * ms.iter().copied().max().unwrap_or(0);
    if m_top > model.max_components() {
        return Err(Error::InvalidArgument(format!(
            "reference M = {m_top} exceeds the {} noise components of the model",
            model.max_components()
        )));
    }
    let z = model.initial();
    let n = model.dim();
    let lambdas_top = truncate_spectrum(model.qspec(), m_top)?.eigenvalues;
    let mut b = ImageSet::zeros(m_top, n);
    for r in 0..m_top {
        model.noise(z, r, b.row_mut(r));
    }
    // image sets for each M and 4M, indexed r1 * M + r2
    let sub_bb = |mm: usize| -> ImageSet {
        let mut out = ImageSet::zeros(mm * mm, n);
        for r1 in 0..mm {
            for r2 in 0..mm {
                model.noise_derivative(z, b.row(r1), r2, out.row_mut(r1 * mm + r2));
            }
        }
        out
    };
    let sub_b = |mm: usize| -> ImageSet {
        let rows: Vec<Vec<f64>> = (0..mm).map(|r| b.row(r).to_vec()).collect();
        ImageSet::from_rows(&rows).expect("rows share a length")
    };
    let mut pairs = Vec::new();
    for &m in ms {
        let big = 4 * m;
        pairs.push((m, sub_b(m), sub_bb(m), big, sub_b(big), sub_bb(big)));
    }
    let factory = StreamFactory::new(seed);
    let spec = BundleSpec::pairs_only(q);
    let per_sample: Vec<Vec<(f64, f64)>> = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<Vec<(f64, f64)>> {
            let draws = draw_basis(&mut factory.stream(s), m_top, spec.required_q_max());
            let bundle = ItoIntegralBundle::build(&draws, step, spec, None)?;
            let mut out = Vec::with_capacity(pairs.len());
            for (m, b_m, bb_m, big, b_big, bb_big) in &pairs {
                let lm = &lambdas_top[..*m];
                let lb = &lambdas_top[..*big];
                let dj = diff_sq(&assemble_j1(b_big, &draws, lb, step)?, &assemble_j1(b_m, &draws, lm, step)?);
                let di = diff_sq(&assemble_i1(bb_big, &bundle, lb)?, &assemble_i1(bb_m, &bundle, lm)?);
                out.push((dj, di));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let ns = samples as f64;
    let rows: Vec<TailRow> = ms
        .iter()
        .enumerate()
        .map(|(i, &m)| TailRow {
            m,
            lambda_next: model.qspec().eigenvalue(m + 1),
            j1_ms: per_sample.iter().map(|v| v[i].0).sum::<f64>() / ns,
            i1_ms: per_sample.iter().map(|v| v[i].1).sum::<f64>() / ns,
        })
        .collect();
    let lx: Vec<f64> = rows.iter().map(|r| r.lambda_next.ln()).collect();
    let j1: Vec<f64> = rows.iter().map(|r| r.j1_ms.ln()).collect();
    let i1: Vec<f64> = rows.iter().map(|r| r.i1_ms.ln()).collect();
    Ok(TailStudy {
        j1_slope: fit_line(&lx, &j1).0,
        i1_slope: fit_line(&lx, &i1).0,
        rows,
    })
}

fn diff_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::super::model::{DiagnosticParams, Noise, SpectralModel};
    use super::*;

    fn trunc(m: usize) -> TruncationParams {
        TruncationParams::new(m, 2, 1, 0.5).unwrap()
    }

    #[test]
    fn noise_off_path_is_analytic() {
        let model = SpectralModel::diagnostic(DiagnosticParams {
            drift: super::super::model::Drift::Zero,
            noise: Noise::Zero,
            ..Default::default()
        })
        .unwrap();
        let ctx = StepContext::new(&model, Scheme::wagner_platen(), 0.05, trunc(3), None).unwrap();
        let tr = simulate_path(&model, &ctx, 40, 1, 0).unwrap();
        assert_eq!(tr.states.len(), 41);
        for (p, (t, y)) in tr.times().zip(&tr.states).enumerate() {
            for (k, v) in y.iter().enumerate() {
                let exact = (model.a_spectrum()[k] * t).exp() * model.initial()[k];
                assert!((v - exact).abs() < 1e-12, "p={p} k={k}");
            }
        }
    }

    #[test]
    fn same_seed_same_path() {
        let model = SpectralModel::diagnostic(DiagnosticParams::default()).unwrap();
        let ctx = StepContext::new(&model, Scheme::Milstein, 0.1, trunc(4), None).unwrap();
        let a = simulate_path(&model, &ctx, 10, 3, 2).unwrap();
        let b = simulate_path(&model, &ctx, 10, 3, 2).unwrap();
        let c = simulate_path(&model, &ctx, 10, 3, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.endpoint(), c.endpoint());
    }

    #[test]
    fn step_division() {
        assert_eq!(steps_in(0.5, 1.0 / 32.0).unwrap(), 16);
        assert_eq!(steps_in(1.0 / 32.0, 1.0 / 2048.0).unwrap(), 64);
        assert!(steps_in(0.5, 0.3).is_err());
        assert!(steps_in(0.5, 0.0).is_err());
    }

    #[test]
    fn line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 2.0).collect();
        let (s, se, c) = fit_line(&x, &y);
        assert!((s - 1.5).abs() < 1e-14 && se < 1e-7 && (c + 2.0).abs() < 1e-14);
    }

    #[test]
    fn setup_validation() {
        let model = SpectralModel::diagnostic(DiagnosticParams::default()).unwrap();
        let mut setup = ConvergenceSetup {
            scheme: Scheme::Milstein,
            trunc: trunc(2),
            ref_trunc: trunc(2),
            steps: vec![0.25, 0.125],
            step_ref: 0.0625,
            horizon: 0.5,
            paths: 99,
            seed: 0,
        };
        assert!(matches!(
            strong_error_estimate(&model, &setup),
            Err(Error::InsufficientPaths { required: 100, found: 99 })
        ));
        setup.paths = 100;
        setup.ref_trunc = TruncationParams::new(2, 1, 1, 0.5).unwrap();
        assert!(strong_error_estimate(&model, &setup).is_err());
        setup.ref_trunc = trunc(2);
        setup.step_ref = 0.1;
        assert!(strong_error_estimate(&model, &setup).is_err());
        setup.step_ref = 0.0625;
        let t = strong_error_estimate(&model, &setup).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[0].rms > t.rows[1].rms);
    }

    #[test]
    fn reference_level_has_no_error() {
        let model = SpectralModel::diagnostic(DiagnosticParams::default()).unwrap();
        let setup = ConvergenceSetup {
            scheme: Scheme::wagner_platen(),
            trunc: trunc(2),
            ref_trunc: trunc(2),
            steps: vec![0.125, 0.0625],
            step_ref: 0.0625,
            horizon: 0.25,
            paths: 100,
            seed: 1,
        };
        let t = strong_error_estimate(&model, &setup).unwrap();
        assert!(t.rows[1].rms < 1e-12);
    }
}
