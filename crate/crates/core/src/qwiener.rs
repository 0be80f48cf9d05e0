//! Spectral truncation of the Q-Wiener process and assembly of the
//! operator-valued iterated integrals used by the exponential schemes.
//!
//! Operator images enter as precomputed coordinate vectors, one per basis index
//! (or index pair/triple), so the assembly is independent of any concrete model.

use crate::error::{Error, Result};
use crate::ito::{GaussianBasisDraws, ItoIntegralBundle};

/// Eigenvalue law of the covariance operator `Q` (indices start at 1).
#[derive(Debug, Clone, PartialEq)]
pub enum EigenLaw {
    /// `lambda_i = scale * i^{-rho}`, `rho > 1`.
    Power { scale: f64, rho: f64 },
    /// `lambda_i = scale * ratio^i`, `0 < ratio < 1`.
    Geometric { scale: f64, ratio: f64 },
    /// A finite non-increasing list; eigenvalues past its end are zero (outside `J`).
    Explicit(Vec<f64>),
}

/// Covariance spectrum of the driving noise.
#[derive(Debug, Clone, PartialEq)]
pub struct QWienerSpec {
    law: EigenLaw,
}

impl QWienerSpec {
    pub fn new(law: EigenLaw) -> Result<Self> {
        match &law {
            EigenLaw::Power { scale, rho } => {
                if !(*scale > 0.0 && *rho > 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "power law needs scale > 0 and rho > 1, got {scale}, {rho}"
                    )));
                }
            }
            EigenLaw::Geometric { scale, ratio } => {
                if !(*scale > 0.0 && *ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "geometric law needs scale > 0 and ratio in (0, 1), got {scale}, {ratio}"
                    )));
                }
            }
            EigenLaw::Explicit(values) => {
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidArgument(
                        "explicit eigenvalues must be positive and finite".into(),
                    ));
                }
                if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
                    return Err(Error::NonIncreasing { index: i + 2 });
                }
            }
        }
        Ok(Self { law })
    }

    /// `lambda_i = i^{-2}`.
    pub fn default_power() -> Self {
        Self {
            law: EigenLaw::Power { scale: 1.0, rho: 2.0 },
        }
    }

    pub fn law(&self) -> &EigenLaw {
        &self.law
    }

    /// `lambda_i` for `i >= 1`; zero outside `J`.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        assert!(i >= 1, "eigenvalues are indexed from 1");
        match &self.law {
            EigenLaw::Power { scale, rho } => scale * (i as f64).powf(-rho),
            EigenLaw::Geometric { scale, ratio } => scale * ratio.powi(i as i32),
            EigenLaw::Explicit(v) => v.get(i - 1).copied().unwrap_or(0.0),
        }
    }

    /// `tr Q = sum_i lambda_i`.
    pub fn trace(&self) -> f64 {
        match &self.law {
            EigenLaw::Power { scale, rho } => scale * zeta(*rho),
            EigenLaw::Geometric { scale, ratio } => scale * ratio / (1.0 - ratio),
            EigenLaw::Explicit(v) => v.iter().sum(),
        }
    }

    /// `sum_{i > m} lambda_i`.
    pub fn tail_trace(&self, m: usize) -> f64 {
        let head: f64 = (1..=m).map(|i| self.eigenvalue(i)).sum();
        (self.trace() - head).max(0.0)
    }
}

/// Riemann zeta for `s > 1` by direct summation plus an Euler-Maclaurin tail.
fn zeta(s: f64) -> f64 {
    const N: usize = 64;
    let head: f64 = (1..N).map(|i| (i as f64).powf(-s)).sum();
    let n = N as f64;
    let f = n.powf(-s);
    let f1 = -s * n.powf(-s - 1.0);
    let f3 = -s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0);
    head + n.powf(1.0 - s) / (s - 1.0) + f / 2.0 - f1 / 12.0 + f3 / 720.0
}

/// First `M` eigenvalues and the supremum of the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTruncation {
    pub eigenvalues: Vec<f64>,
    pub tail_sup: f64,
}

impl SpectrumTruncation {
    pub fn sqrt_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.sqrt()).collect()
    }
}

pub fn truncate_spectrum(spec: &QWienerSpec, m: usize) -> Result<SpectrumTruncation> {
    if m == 0 {
        return Err(Error::InvalidArgument("spectral truncation M must be at least 1".into()));
    }
    if let EigenLaw::Explicit(v) = spec.law() {
        if m > v.len() {
            return Err(Error::InvalidArgument(format!(
                "M = {m} exceeds the {} explicit eigenvalues",
                v.len()
            )));
        }
    }
    let eigenvalues = (1..=m).map(|i| spec.eigenvalue(i)).collect();
    Ok(SpectrumTruncation {
        eigenvalues,
        // every built-in law is non-increasing, so the supremum is the next eigenvalue
        tail_sup: spec.eigenvalue(m + 1),
    })
}

/// Truncation parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    /// Number of retained noise components, `J_M = {1..M}`.
    pub m: usize,
    pub q: usize,
    pub q1: usize,
    /// Regularity exponent in the tail bound.
    pub alpha: f64,
}

impl TruncationParams {
    pub fn new(m: usize, q: usize, q1: usize, alpha: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("M must be at least 1".into()));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { m, q, q1, alpha })
    }
}

/// A list of coordinate vectors of a common length `n_h`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    n_h: usize,
    data: Vec<f64>,
}

impl ImageSet {
    pub fn zeros(count: usize, n_h: usize) -> Self {
        Self {
            n_h,
            data: vec![0.0; count * n_h],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_h = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_h);
        for r in rows {
            if r.len() != n_h {
                return Err(Error::Dimension {
                    expected: n_h,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n_h, data })
    }

    pub fn from_flat(n_h: usize, data: Vec<f64>) -> Result<Self> {
        if n_h == 0 || data.len() % n_h != 0 {
            return Err(Error::Dimension {
                expected: n_h,
                found: data.len(),
            });
        }
        Ok(Self { n_h, data })
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn count(&self) -> usize {
        if self.n_h == 0 {
            0
        } else {
            self.data.len() / self.n_h
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_h..(i + 1) * self.n_h]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_h..(i + 1) * self.n_h]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// `a * self + b * other`, used by linearity checks.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.n_h != other.n_h || self.data.len() != other.data.len() {
            return Err(Error::Dimension {
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { n_h: self.n_h, data })
    }
}

fn check_images(images: &ImageSet, expected: usize) -> Result<()> {
    if images.count() != expected {
        return Err(Error::Dimension {
            expected,
            found: images.count(),
        });
    }
    Ok(())
}

fn check_components(available: usize, m: usize) -> Result<()> {
    if available < m {
        return Err(Error::MissingBundle(format!(
            "{m} noise components requested, {available} available"
        )));
    }
    Ok(())
}

#[inline]
fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o += a * xi;
    }
}

/// Sum over `r` of `w_r sqrt(lambda_r) images_r`, with `w_r` computed from the draws.
fn single_sum(
    images: &ImageSet,
    draws: &GaussianBasisDraws,
    lambdas: &[f64],
    needs_first: bool,
    weight: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let m = lambdas.len();
    check_images(images, m)?;
    check_components(draws.m(), m)?;
    if needs_first && draws.q_max() < 1 {
        return Err(Error::TensorTooSmall {
            requested: 1,
            available: draws.q_max(),
        });
    }
    let mut out = vec![0.0; images.n_h()];
    for (r, lambda) in lambdas.iter().enumerate() {
        let z1 = if needs_first { draws.get(r, 1) } else { 0.0 };
        axpy(&mut out, lambda.sqrt() * weight(draws.get(r, 0), z1), images.row(r));
    }
    Ok(out)
}

/// `J1 = sqrt(step) sum_r B e_r sqrt(lambda_r) zeta_0^{(r)}`; `images[r] = B(Z) e_r`.
pub fn assemble_j1(images: &ImageSet, draws: &GaussianBasisDraws, lambdas: &[f64], step: f64) -> Result<Vec<f64>> {
    let s = step.sqrt();
    single_sum(images, draws, lambdas, false, |z0, _| s * z0)
}

/// `J2 = -step^{3/2} / (2 sqrt 3) sum_r A B e_r sqrt(lambda_r) zeta_1^{(r)}`; `images[r] = A B(Z) e_r`.
pub fn assemble_j2(images: &ImageSet, draws: &GaussianBasisDraws, lambdas: &[f64], step: f64) -> Result<Vec<f64>> {
    let c = -step.powf(1.5) / (2.0 * 3f64.sqrt());
    single_sum(images, draws, lambdas, true, |_, z1| c * z1)
}

/// `J3 = step^{3/2} / 2 sum_r B'(AZ + F) e_r sqrt(lambda_r) (zeta_0 + zeta_1 / sqrt 3)`.
pub fn assemble_j3(images: &ImageSet, draws: &GaussianBasisDraws, lambdas: &[f64], step: f64) -> Result<Vec<f64>> {
    let c = 0.5 * step.powf(1.5);
    let k = 1.0 / 3f64.sqrt();
    single_sum(images, draws, lambdas, true, |z0, z1| c * (z0 + k * z1))
}

/// `J4 = step^{3/2} / 2 sum_r F' B e_r sqrt(lambda_r) (zeta_0 - zeta_1 / sqrt 3)`.
pub fn assemble_j4(images: &ImageSet, draws: &GaussianBasisDraws, lambdas: &[f64], step: f64) -> Result<Vec<f64>> {
    let c = 0.5 * step.powf(1.5);
    let k = 1.0 / 3f64.sqrt();
    single_sum(images, draws, lambdas, true, |z0, z1| c * (z0 - k * z1))
}

/// `I1 = sum_{r1,r2} B'(B e_{r1}) e_{r2} sqrt(lambda_{r1} lambda_{r2}) I_(11)^{(r1 r2)}`;
/// `images[r1 * M + r2] = B'(Z)(B(Z) e_{r1}) e_{r2}`.
pub fn assemble_i1(images: &ImageSet, bundle: &ItoIntegralBundle, lambdas: &[f64]) -> Result<Vec<f64>> {
    let m = lambdas.len();
    check_images(images, m * m)?;
    check_components(bundle.m(), m)?;
    let sq: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let mut out = vec![0.0; images.n_h()];
    for r1 in 0..m {
        for r2 in 0..m {
            axpy(&mut out, sq[r1] * sq[r2] * bundle.i11(r1, r2), images.row(r1 * m + r2));
        }
    }
    Ok(out)
}

/// `I2 = sum B'(B'(B e_{r1}) e_{r2}) e_{r3} sqrt(lambda lambda lambda) I_(111)^{(r1 r2 r3)}`;
/// `images[(r1 * M + r2) * M + r3]` holds the iterated derivative image.
pub fn assemble_i2(images: &ImageSet, bundle: &ItoIntegralBundle, lambdas: &[f64]) -> Result<Vec<f64>> {
    triple_sum(images, bundle, lambdas, |b, r1, r2, r3| b.i111(r1, r2, r3))
}

/// `I3 = sum B''(B e_{r1}, B e_{r2}) e_{r3} sqrt(lambda lambda lambda)
/// (I_(111)^{(r1 r2 r3)} + I_(111)^{(r2 r1 r3)} + 1{r1 = r2} I_(01)^{(0 r3)})`.
pub fn assemble_i3(images: &ImageSet, bundle: &ItoIntegralBundle, lambdas: &[f64]) -> Result<Vec<f64>> {
    triple_sum(images, bundle, lambdas, |b, r1, r2, r3| {
        let mut v = b.i111(r1, r2, r3) + b.i111(r2, r1, r3);
        if r1 == r2 {
            v += b.i01(r3);
        }
        v
    })
}

fn triple_sum(
    images: &ImageSet,
    bundle: &ItoIntegralBundle,
    lambdas: &[f64],
    weight: impl Fn(&ItoIntegralBundle, usize, usize, usize) -> f64,
) -> Result<Vec<f64>> {
    let m = lambdas.len();
    check_images(images, m * m * m)?;
    check_components(bundle.m(), m)?;
    bundle.require_triples()?;
    let sq: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let mut out = vec![0.0; images.n_h()];
    for r1 in 0..m {
        for r2 in 0..m {
            for r3 in 0..m {
                let w = sq[r1] * sq[r2] * sq[r3] * weight(bundle, r1, r2, r3);
                axpy(&mut out, w, images.row((r1 * m + r2) * m + r3));
            }
        }
    }
    Ok(out)
}

/// Where an [`OperatorBundle`] came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub m: usize,
    pub q: usize,
    pub q1: usize,
    pub step: f64,
    pub seed: u64,
}

/// The seven assembled integrals of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBundle {
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    pub j3: Vec<f64>,
    pub j4: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub i3: Vec<f64>,
    pub provenance: Provenance,
}

/// All operator images needed by the full set of integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorImages {
    /// `B(Z) e_r`
    pub b: ImageSet,
    /// `A B(Z) e_r`
    pub ab: ImageSet,
    /// `B'(Z)(AZ + F(Z)) e_r`
    pub b_drift: ImageSet,
    /// `F'(Z) B(Z) e_r`
    pub f_b: ImageSet,
    /// `B'(Z)(B(Z) e_{r1}) e_{r2}`
    pub bb: ImageSet,
    /// `B'(Z)(B'(Z)(B(Z) e_{r1}) e_{r2}) e_{r3}`
    pub bbb: ImageSet,
    /// `B''(Z)(B(Z) e_{r1}, B(Z) e_{r2}) e_{r3}`
    pub b2: ImageSet,
}

impl OperatorBundle {
    pub fn assemble(
        images: &OperatorImages,
        draws: &GaussianBasisDraws,
        bundle: &ItoIntegralBundle,
        lambdas: &[f64],
        provenance: Provenance,
    ) -> Result<Self> {
        let step = bundle.step();
        Ok(Self {
            j1: assemble_j1(&images.b, draws, lambdas, step)?,
            j2: assemble_j2(&images.ab, draws, lambdas, step)?,
            j3: assemble_j3(&images.b_drift, draws, lambdas, step)?,
            j4: assemble_j4(&images.f_b, draws, lambdas, step)?,
            i1: assemble_i1(&images.bb, bundle, lambdas)?,
            i2: assemble_i2(&images.bbb, bundle, lambdas)?,
            i3: assemble_i3(&images.b2, bundle, lambdas)?,
            provenance,
        })
    }
}

/// `L_k (k!)^2 (tr Q)^k gap`.
pub fn theorem3_bound(l_k: f64, trace_q: f64, k: usize, parseval_gap: f64) -> Result<f64> {
    if l_k < 0.0 || trace_q < 0.0 || parseval_gap < 0.0 {
        return Err(Error::InvalidArgument("bound arguments must be non-negative".into()));
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    Ok(l_k * fact * fact * trace_q.powi(k as i32) * parseval_gap)
}

/// `(sup_{i > M} lambda_i)^{2 alpha}`.
pub fn theorem4_tail(spec: &QWienerSpec, m: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    Ok(truncate_spectrum(spec, m)?.tail_sup.powf(2.0 * alpha))
}
