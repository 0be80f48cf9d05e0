//! Gaussian basis draws and the truncated Legendre approximations of iterated
//! Ito integrals over one step.
//!
//! Component indices are zero-based in code; the draws matrix holds
//! `zeta_j^{(r)}` for `r = 0..m` and `j = 0..=q_max`.

mod bundle;
mod coupling;
mod general;
mod partition;
mod stats;

pub use bundle::{BundleSpec, ItoIntegralBundle};
pub use coupling::AggregationMap;
pub use general::{approx_general_k, hermite_closed_form, Component};
pub use partition::{enumerate_pair_partitions, partition_count, PairPartition};
pub use stats::{residual_study, MomentCheck, ResidualStudy};

use rand::Rng;

use crate::coeffs::ScaledCoeffs;
use crate::error::{Error, Result};
use crate::rng::fill_normals;

/// The standard normals `zeta_j^{(r)}` backing one step.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBasisDraws {
    m: usize,
    q_max: usize,
    values: Vec<f64>,
}

impl GaussianBasisDraws {
    pub fn zeros(m: usize, q_max: usize) -> Self {
        Self {
            m,
            q_max,
            values: vec![0.0; m * (q_max + 1)],
        }
    }

    /// Wraps a row-major `m x (q_max + 1)` matrix.
    pub fn from_values(m: usize, q_max: usize, values: Vec<f64>) -> Result<Self> {
        let expected = m * (q_max + 1);
        if values.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { m, q_max, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, r: usize, j: usize) -> f64 {
        self.values[r * (self.q_max + 1) + j]
    }

    pub fn set(&mut self, r: usize, j: usize, v: f64) {
        self.values[r * (self.q_max + 1) + j] = v;
    }

    /// `zeta_0^{(r)}, ..., zeta_{q_max}^{(r)}`.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.q_max + 1;
        &self.values[r * n..(r + 1) * n]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let n = self.q_max + 1;
        &mut self.values[r * n..(r + 1) * n]
    }

    /// Redraws every entry from `rng`.
    pub fn refill<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        fill_normals(rng, &mut self.values);
    }

    fn check(&self, r: usize, j: usize) -> Result<()> {
        if r >= self.m {
            return Err(Error::Dimension {
                expected: self.m,
                found: r + 1,
            });
        }
        if j > self.q_max {
            return Err(Error::TensorTooSmall {
                requested: j,
                available: self.q_max,
            });
        }
        Ok(())
    }
}

/// Fills an `m x (q_max + 1)` matrix of standard normals from `rng`.
pub fn draw_basis<R: Rng + ?Sized>(rng: &mut R, m: usize, q_max: usize) -> GaussianBasisDraws {
    let mut d = GaussianBasisDraws::zeros(m, q_max);
    d.refill(rng);
    d
}

/// `I_(1) = sqrt(step) zeta_0`.
pub fn approx_i1(draws: &GaussianBasisDraws, r: usize, step: f64) -> Result<f64> {
    draws.check(r, 0)?;
    Ok(step.sqrt() * draws.get(r, 0))
}

/// `I_(01) = step^{3/2} / 2 (zeta_0 + zeta_1 / sqrt 3)`: time inside, noise outside.
pub fn approx_i01(draws: &GaussianBasisDraws, r: usize, step: f64) -> Result<f64> {
    draws.check(r, 1)?;
    Ok(i01_from(draws.get(r, 0), draws.get(r, 1), step))
}

/// `I_(10) = step^{3/2} / 2 (zeta_0 - zeta_1 / sqrt 3)`: noise inside, time outside.
pub fn approx_i10(draws: &GaussianBasisDraws, r: usize, step: f64) -> Result<f64> {
    draws.check(r, 1)?;
    Ok(i10_from(draws.get(r, 0), draws.get(r, 1), step))
}

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

#[inline]
fn i01_from(z0: f64, z1: f64, step: f64) -> f64 {
    0.5 * step.powf(1.5) * (z0 + INV_SQRT3 * z1)
}

#[inline]
fn i10_from(z0: f64, z1: f64, step: f64) -> f64 {
    0.5 * step.powf(1.5) * (z0 - INV_SQRT3 * z1)
}

/// Truncated double integral `I_(11)^{(r1 r2) q}` (`r1` inner, `r2` outer).
pub fn approx_i11(draws: &GaussianBasisDraws, r1: usize, r2: usize, q: usize, step: f64) -> Result<f64> {
    draws.check(r1, q)?;
    draws.check(r2, q)?;
    let (a, b) = (draws.row(r1), draws.row(r2));
    Ok(i11_rows(a, b, q, step, r1 == r2))
}

#[inline]
fn i11_rows(a: &[f64], b: &[f64], q: usize, step: f64, same: bool) -> f64 {
    let mut s = a[0] * b[0];
    for i in 1..=q {
        let w = 1.0 / ((4 * i * i - 1) as f64).sqrt();
        s += w * (a[i - 1] * b[i] - a[i] * b[i - 1]);
    }
    if same {
        s -= 1.0;
    }
    0.5 * step * s
}

/// Truncated triple integral `I_(111)^{(r1 r2 r3) q1}` with the three indicator
/// corrections, using scaled coefficients `C_{j3 j2 j1}` for the step.
pub fn approx_i111(
    draws: &GaussianBasisDraws,
    r1: usize,
    r2: usize,
    r3: usize,
    coeffs: &ScaledCoeffs,
) -> Result<f64> {
    if coeffs.order() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            found: coeffs.order(),
        });
    }
    let q1 = coeffs.q();
    for r in [r1, r2, r3] {
        draws.check(r, q1)?;
    }
    let (x, y, z) = (draws.row(r1), draws.row(r2), draws.row(r3));
    let mut s = 0.0;
    for j3 in 0..=q1 {
        let mut s2 = 0.0;
        for j2 in 0..=q1 {
            let mut s1 = 0.0;
            for j1 in 0..=q1 {
                s1 += coeffs.c3(j3, j2, j1) * x[j1];
            }
            s2 += s1 * y[j2];
        }
        s += s2 * z[j3];
    }
    if r1 == r2 {
        for j3 in 0..=q1 {
            let d: f64 = (0..=q1).map(|j| coeffs.c3(j3, j, j)).sum();
            s -= d * z[j3];
        }
    }
    if r2 == r3 {
        for j1 in 0..=q1 {
            let d: f64 = (0..=q1).map(|j| coeffs.c3(j, j, j1)).sum();
            s -= d * x[j1];
        }
    }
    if r1 == r3 {
        for j2 in 0..=q1 {
            let d: f64 = (0..=q1).map(|j| coeffs.c3(j, j2, j)).sum();
            s -= d * y[j2];
        }
    }
    Ok(s)
}

/// Closed form of the triple integral with all components equal:
/// `step^{3/2} / 6 (zeta_0^3 - 3 zeta_0)`.
pub fn i111_diagonal(zeta0: f64, step: f64) -> f64 {
    step.powf(1.5) / 6.0 * (zeta0 * zeta0 * zeta0 - 3.0 * zeta0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoeffTensor;
    use crate::rng::StreamFactory;
    use proptest::prelude::*;

    fn draws_with(m: usize, q: usize, f: impl Fn(usize, usize) -> f64) -> GaussianBasisDraws {
        let mut d = GaussianBasisDraws::zeros(m, q);
        for r in 0..m {
            for j in 0..=q {
                d.set(r, j, f(r, j));
            }
        }
        d
    }

    #[test]
    fn low_order_examples() {
        let d = draws_with(1, 1, |_, j| if j == 0 { 1.0 } else { 0.0 });
        assert!((approx_i1(&d, 0, 4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((approx_i01(&d, 0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((approx_i10(&d, 0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let z = GaussianBasisDraws::zeros(2, 3);
        assert_eq!(approx_i1(&z, 1, 2.0).unwrap(), 0.0);
        assert!(approx_i01(&GaussianBasisDraws::zeros(1, 0), 0, 1.0).is_err());
    }

    #[test]
    fn zero_draws_force_values() {
        let z = GaussianBasisDraws::zeros(3, 4);
        assert_eq!(approx_i11(&z, 1, 1, 4, 0.3).unwrap(), -0.15);
        assert_eq!(approx_i11(&z, 0, 1, 4, 0.3).unwrap(), 0.0);
        let c = CoeffTensor::build(3, 4).unwrap().scaled(4, 0.3).unwrap();
        assert_eq!(approx_i111(&z, 0, 1, 2, &c).unwrap(), 0.0);
    }

    #[test]
    fn draws_are_reproducible() {
        let f = StreamFactory::new(11);
        let a = draw_basis(&mut f.stream(0), 3, 5);
        let b = draw_basis(&mut f.stream(0), 3, 5);
        assert_eq!(a, b);
        assert_eq!(a.values().len(), 18);
    }

    #[test]
    fn diagonal_series_equals_closed_form() {
        // Only the symmetrised coefficients act on equal components, and those vanish
        // away from j = (0, 0, 0); the series is therefore exact at every q1.
        let tensor = CoeffTensor::build(3, 12).unwrap();
        let f = StreamFactory::new(5);
        for q1 in [0, 2, 6, 12] {
            let c = tensor.scaled(q1, 0.7).unwrap();
            for p in 0..200 {
                let d = draw_basis(&mut f.stream(p), 1, 12);
                let v = approx_i111(&d, 0, 0, 0, &c).unwrap() - i111_diagonal(d.get(0, 0), 0.7);
                assert!(v.abs() < 1e-12, "q1={q1}");
            }
        }
    }

    proptest! {
        #[test]
        fn increment_product_identity(seed in any::<u64>(), q in 0usize..12, step in 0.01f64..2.0) {
            let d = draw_basis(&mut StreamFactory::new(seed).stream(0), 3, 12);
            for r1 in 0..3 {
                for r2 in 0..3 {
                    let lhs = approx_i11(&d, r1, r2, q, step).unwrap()
                        + approx_i11(&d, r2, r1, q, step).unwrap()
                        + if r1 == r2 { step } else { 0.0 };
                    let rhs = step * d.get(r1, 0) * d.get(r2, 0);
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
                }
            }
        }

        #[test]
        fn low_order_sum_identity(seed in any::<u64>(), step in 0.01f64..2.0) {
            let d = draw_basis(&mut StreamFactory::new(seed).stream(1), 2, 1);
            for r in 0..2 {
                let s = approx_i01(&d, r, step).unwrap() + approx_i10(&d, r, step).unwrap();
                prop_assert!((s - step * approx_i1(&d, r, step).unwrap()).abs() < 1e-12);
            }
        }
    }
}
