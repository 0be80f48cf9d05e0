use super::GaussianBasisDraws;
use crate::error::{Error, Result};
use crate::legendre::{gauss_legendre, legendre_eval};

/// Linear map taking the basis draws of `n` consecutive substeps to the draws
/// of the step they tile.
///
/// On substep `s` the coarse polynomial `phi_j` has degree `j`, so
/// `zeta_j = sum_s sum_{i <= j} c^{(s)}_{ji} zeta_i^{(s)}` holds exactly with
/// `c^{(s)}_{ji} = 1/2 sqrt((2j+1)(2i+1)/n) \int_{-1}^{1} P_j(-1 + (2s+1)/n + u/n) P_i(u) du`.
/// The map is orthonormal, so coarse draws are again i.i.d. standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationMap {
    n: usize,
    q_max: usize,
    // [s][j][i], i <= j
    coeffs: Vec<f64>,
}

impl AggregationMap {
    pub fn new(n: usize, q_max: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("aggregation needs at least one substep".into()));
        }
        let w = q_max + 1;
        let (nodes, weights) = gauss_legendre(w);
        let nf = n as f64;
        let mut coeffs = vec![0.0; n * w * w];
        for s in 0..n {
            let shift = -1.0 + (2 * s + 1) as f64 / nf;
            for j in 0..w {
                for i in 0..=j {
                    let integral: f64 = nodes
                        .iter()
                        .zip(&weights)
                        .map(|(&u, &wt)| wt * legendre_eval(j, shift + u / nf) * legendre_eval(i, u))
                        .sum();
                    let norm = 0.5 * (((2 * j + 1) * (2 * i + 1)) as f64 / nf).sqrt();
                    coeffs[(s * w + j) * w + i] = norm * integral;
                }
            }
        }
        Ok(Self { n, q_max, coeffs })
    }

    pub fn substeps(&self) -> usize {
        self.n
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    #[inline]
    pub fn coeff(&self, s: usize, j: usize, i: usize) -> f64 {
        let w = self.q_max + 1;
        self.coeffs[(s * w + j) * w + i]
    }

    /// Coarse draws from the `n` fine draws of one coarse step.
    pub fn aggregate(&self, fine: &[GaussianBasisDraws]) -> Result<GaussianBasisDraws> {
        let m = fine.first().map(|d| d.m()).unwrap_or(0);
        let mut out = GaussianBasisDraws::zeros(m, self.q_max);
        self.aggregate_into(fine, &mut out)?;
        Ok(out)
    }

    pub fn aggregate_into(&self, fine: &[GaussianBasisDraws], out: &mut GaussianBasisDraws) -> Result<()> {
        if fine.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: fine.len(),
            });
        }
        let m = out.m();
        if out.q_max() != self.q_max {
            return Err(Error::Dimension {
                expected: self.q_max,
                found: out.q_max(),
            });
        }
        for d in fine {
            if d.m() != m {
                return Err(Error::Dimension {
                    expected: m,
                    found: d.m(),
                });
            }
            if d.q_max() < self.q_max {
                return Err(Error::TensorTooSmall {
                    requested: self.q_max,
                    available: d.q_max(),
                });
            }
        }
        for r in 0..m {
            let row = out.row_mut(r);
            row.iter_mut().for_each(|x| *x = 0.0);
            for (s, d) in fine.iter().enumerate() {
                let src = d.row(r);
                for (j, dst) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (i, &z) in src.iter().enumerate().take(j + 1) {
                        acc += self.coeff(s, j, i) * z;
                    }
                    *dst += acc;
                }
            }
        }
        Ok(())
    }
}
