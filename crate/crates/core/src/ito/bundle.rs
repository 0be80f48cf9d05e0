use super::{i01_from, i10_from, i111_diagonal, i11_rows, GaussianBasisDraws};
use crate::coeffs::ScaledCoeffs;
use crate::error::{Error, Result};

/// Default cap on the number of Wiener components a bundle may cover.
pub const DEFAULT_MAX_COMPONENTS: usize = 64;

/// What a bundle should contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleSpec {
    /// Truncation of the double integrals.
    pub q: usize,
    /// Truncation of the triple integrals.
    pub q1: usize,
    /// Whether to fill the triple integrals at all.
    pub triples: bool,
    /// Use the closed form for triples with all three components equal.
    pub exact_diagonal: bool,
}

impl BundleSpec {
    pub fn pairs_only(q: usize) -> Self {
        Self {
            q,
            q1: 0,
            triples: false,
            exact_diagonal: true,
        }
    }

    pub fn full(q: usize, q1: usize) -> Self {
        Self {
            q,
            q1,
            triples: true,
            exact_diagonal: true,
        }
    }

    /// Highest basis index the draws must provide.
    pub fn required_q_max(&self) -> usize {
        let mut q = self.q.max(1);
        if self.triples {
            q = q.max(self.q1);
        }
        q
    }
}

/// All scalar integral approximations needed by the schemes over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoIntegralBundle {
    step: f64,
    m: usize,
    spec: BundleSpec,
    i1: Vec<f64>,
    i01: Vec<f64>,
    i10: Vec<f64>,
    i11: Vec<f64>,
    i111: Vec<f64>,
}

impl ItoIntegralBundle {
    /// Evaluates every `(r1, r2)` and, if requested, every `(r1, r2, r3)` entry.
    pub fn build(
        draws: &GaussianBasisDraws,
        step: f64,
        spec: BundleSpec,
        coeffs: Option<&ScaledCoeffs>,
    ) -> Result<Self> {
        let m = draws.m();
        if m > DEFAULT_MAX_COMPONENTS {
            return Err(Error::InvalidArgument(format!(
                "bundle covers at most {DEFAULT_MAX_COMPONENTS} components, got {m}"
            )));
        }
        if draws.q_max() < spec.required_q_max() {
            return Err(Error::TensorTooSmall {
                requested: spec.required_q_max(),
                available: draws.q_max(),
            });
        }
        let sqrt_step = step.sqrt();
        let i1 = (0..m).map(|r| sqrt_step * draws.get(r, 0)).collect();
        let i01 = (0..m)
            .map(|r| i01_from(draws.get(r, 0), draws.get(r, 1), step))
            .collect();
        let i10 = (0..m)
            .map(|r| i10_from(draws.get(r, 0), draws.get(r, 1), step))
            .collect();
        let mut i11 = vec![0.0; m * m];
        for r1 in 0..m {
            for r2 in 0..m {
                i11[r1 * m + r2] = i11_rows(draws.row(r1), draws.row(r2), spec.q, step, r1 == r2);
            }
        }
        let i111 = if spec.triples {
            let c = coeffs.ok_or_else(|| {
                Error::MissingBundle("triple integrals need scaled coefficients".into())
            })?;
            if c.order() != 3 || c.q() != spec.q1 {
                return Err(Error::Dimension {
                    expected: spec.q1,
                    found: c.q(),
                });
            }
            if (c.step() - step).abs() > 1e-12 * step {
                return Err(Error::InvalidArgument(format!(
                    "coefficients scaled for step {} used with step {step}",
                    c.step()
                )));
            }
            triples(draws, step, spec, c)
        } else {
            Vec::new()
        };
        Ok(Self {
            step,
            m,
            spec,
            i1,
            i01,
            i10,
            i11,
            i111,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spec(&self) -> BundleSpec {
        self.spec
    }

    pub fn has_triples(&self) -> bool {
        !self.i111.is_empty() || self.m == 0
    }

    #[inline]
    pub fn i1(&self, r: usize) -> f64 {
        self.i1[r]
    }

    #[inline]
    pub fn i01(&self, r: usize) -> f64 {
        self.i01[r]
    }

    #[inline]
    pub fn i10(&self, r: usize) -> f64 {
        self.i10[r]
    }

    /// `I_(11)^{(r1 r2) q}` with `r1` the inner integrator.
    #[inline]
    pub fn i11(&self, r1: usize, r2: usize) -> f64 {
        self.i11[r1 * self.m + r2]
    }

    /// `I_(111)^{(r1 r2 r3) q1}` with `r1` innermost. Panics if triples were not built.
    #[inline]
    pub fn i111(&self, r1: usize, r2: usize, r3: usize) -> f64 {
        self.i111[(r1 * self.m + r2) * self.m + r3]
    }

    pub fn require_triples(&self) -> Result<()> {
        if self.has_triples() {
            Ok(())
        } else {
            Err(Error::MissingBundle("triple integrals were not built".into()))
        }
    }
}

fn triples(draws: &GaussianBasisDraws, step: f64, spec: BundleSpec, c: &ScaledCoeffs) -> Vec<f64> {
    let m = draws.m();
    let n = spec.q1 + 1;
    let mut out = vec![0.0; m * m * m];

    let d12: Vec<f64> = (0..n).map(|j3| (0..n).map(|j| c.c3(j3, j, j)).sum()).collect();
    let d23: Vec<f64> = (0..n).map(|j1| (0..n).map(|j| c.c3(j, j, j1)).sum()).collect();
    let d13: Vec<f64> = (0..n).map(|j2| (0..n).map(|j| c.c3(j, j2, j)).sum()).collect();
    let dot = |a: &[f64], z: &[f64]| a.iter().zip(z).map(|(x, y)| x * y).sum::<f64>();

    let mut v = vec![0.0; n * n];
    let mut w = vec![0.0; n];
    for r3 in 0..m {
        let z = &draws.row(r3)[..n];
        // v[j2][j1] = sum_j3 C[j3][j2][j1] z[j3]
        v.iter_mut().for_each(|x| *x = 0.0);
        for (j3, &zj) in z.iter().enumerate() {
            if zj == 0.0 {
                continue;
            }
            let block = &c.values()[j3 * n * n..(j3 + 1) * n * n];
            for (vi, ci) in v.iter_mut().zip(block) {
                *vi += ci * zj;
            }
        }
        let corr12 = dot(&d12, z);
        for r2 in 0..m {
            let y = &draws.row(r2)[..n];
            w.iter_mut().for_each(|x| *x = 0.0);
            for (j2, &yj) in y.iter().enumerate() {
                for (wi, vi) in w.iter_mut().zip(&v[j2 * n..(j2 + 1) * n]) {
                    *wi += vi * yj;
                }
            }
            for r1 in 0..m {
                let x = &draws.row(r1)[..n];
                let val = if spec.exact_diagonal && r1 == r2 && r2 == r3 {
                    i111_diagonal(x[0], step)
                } else {
                    let mut s = dot(&w, x);
                    if r1 == r2 {
                        s -= corr12;
                    }
                    if r2 == r3 {
                        s -= dot(&d23, x);
                    }
                    if r1 == r3 {
                        s -= dot(&d13, y);
                    }
                    s
                };
                out[(r1 * m + r2) * m + r3] = val;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{approx_i01, approx_i1, approx_i11, approx_i111, draw_basis};
    use super::*;
    use crate::coeffs::CoeffTensor;
    use crate::rng::StreamFactory;

    #[test]
    fn bundle_matches_scalar_functions() {
        let step = 0.2;
        let tensor = CoeffTensor::build(3, 4).unwrap();
        let c = tensor.scaled(3, step).unwrap();
        let d = draw_basis(&mut StreamFactory::new(3).stream(0), 3, 6);
        let mut spec = BundleSpec::full(5, 3);
        spec.exact_diagonal = false;
        let b = ItoIntegralBundle::build(&d, step, spec, Some(&c)).unwrap();
        for r1 in 0..3 {
            assert_eq!(b.i1(r1), approx_i1(&d, r1, step).unwrap());
            assert_eq!(b.i01(r1), approx_i01(&d, r1, step).unwrap());
            for r2 in 0..3 {
                assert_eq!(b.i11(r1, r2), approx_i11(&d, r1, r2, 5, step).unwrap());
                for r3 in 0..3 {
                    let direct = approx_i111(&d, r1, r2, r3, &c).unwrap();
                    assert!((b.i111(r1, r2, r3) - direct).abs() < 1e-13);
                }
            }
        }
        let exact = ItoIntegralBundle::build(&d, step, BundleSpec::full(5, 3), Some(&c)).unwrap();
        assert_eq!(exact.i111(1, 1, 1), i111_diagonal(d.get(1, 0), step));
        assert_eq!(exact.i111(0, 1, 1), b.i111(0, 1, 1));
    }

    #[test]
    fn bundle_requirements() {
        let d = GaussianBasisDraws::zeros(2, 2);
        assert!(ItoIntegralBundle::build(&d, 0.1, BundleSpec::pairs_only(3), None).is_err());
        assert!(ItoIntegralBundle::build(&d, 0.1, BundleSpec::full(1, 2), None).is_err());
        let b = ItoIntegralBundle::build(&d, 0.1, BundleSpec::pairs_only(2), None).unwrap();
        assert!(b.require_triples().is_err());
        assert_eq!(b.i11(1, 1), -0.05);
    }
}
