//! Exact Fourier-Legendre coefficients of the simplex kernels of double and
//! triple iterated Ito integrals, their scaling to `[t, T]`, and the
//! mean-square residuals that drive truncation selection.
//!
//! The reference coefficients are
//!
//! ```text
//! cbar(j2, j1)     = \int_{-1}^{1} P_{j2}(y) \int_{-1}^{y} P_{j1}(x) dx dy
//! cbar(j3, j2, j1) = \int_{-1}^{1} P_{j3}(z) \int_{-1}^{z} P_{j2}(y) \int_{-1}^{y} P_{j1}(x) dx dy dz
//! ```
//!
//! and do not depend on the step `T - t`.

mod cache;

pub use cache::{file_checksum, load_cache, parse_cache, render_cache, save_cache};

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::legendre::{legendre_polys, PolyRational};

/// Default upper bound on the truncation searched by [`minimal_q`].
pub const DEFAULT_SEARCH_CAP: usize = 1_000_000;

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `\int_{-1}^{1} x^n dx`.
fn moments(n: usize) -> Vec<BigRational> {
    (0..=n)
        .map(|i| {
            if i % 2 == 0 {
                BigRational::new(BigInt::from(2), BigInt::from(i + 1))
            } else {
                BigRational::zero()
            }
        })
        .collect()
}

/// `b_i = \int_{-1}^{1} x^i a(x) dx` for `i = 0..=n`, so that `\int p a = sum_i p_i b_i`.
fn moment_vector(a: &PolyRational, n: usize, m: &[BigRational]) -> Vec<BigRational> {
    (0..=n)
        .map(|i| {
            a.coeffs()
                .iter()
                .enumerate()
                .filter(|(l, c)| (i + l) % 2 == 0 && !c.is_zero())
                .map(|(l, c)| c * &m[i + l])
                .sum()
        })
        .collect()
}

fn dot(p: &PolyRational, b: &[BigRational]) -> BigRational {
    p.coeffs()
        .iter()
        .zip(b)
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, bi)| c * bi)
        .sum()
}

/// Exact triple coefficient `cbar(j3, j2, j1)`.
pub fn cbar_triple(j3: usize, j2: usize, j1: usize) -> Result<BigRational> {
    let polys = legendre_polys(j1.max(j2).max(j3))?;
    let a1 = polys[j1].integral_from_minus_one();
    let a2 = polys[j2].mul(&a1).integral_from_minus_one();
    Ok(polys[j3].mul(&a2).integral_over_reference())
}

/// Exact double coefficient `cbar(j2, j1)`.
pub fn cbar_double(j2: usize, j1: usize) -> Result<BigRational> {
    let polys = legendre_polys(j1.max(j2))?;
    let a1 = polys[j1].integral_from_minus_one();
    Ok(polys[j2].mul(&a1).integral_over_reference())
}

/// Floating-point coefficient `C_{j_k ... j_1}` on an interval of length `step`:
/// `sqrt(prod (2j+1)) * step^{k/2} / 2^k * cbar`. Indices may be in any order.
pub fn scale_coeff(cbar: &BigRational, indices: &[usize], step: f64) -> f64 {
    scale_factor(indices, step) * rational_to_f64(cbar)
}

fn scale_factor(indices: &[usize], step: f64) -> f64 {
    let k = indices.len() as i32;
    let prod: f64 = indices.iter().map(|&j| (2 * j + 1) as f64).product();
    prod.sqrt() * step.powf(k as f64 / 2.0) / 2f64.powi(k)
}

/// Dense tensor of exact reference coefficients for `k = 2` or `k = 3`.
///
/// Entries are stored in lexicographic order of `(j_k, ..., j_1)`, which is also
/// the order used by the cache file.
#[derive(Clone)]
pub struct CoeffTensor {
    order: usize,
    max_index: usize,
    entries: Vec<BigRational>,
    approx: Vec<f64>,
}

impl PartialEq for CoeffTensor {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.max_index == other.max_index && self.entries == other.entries
    }
}

impl Eq for CoeffTensor {}

impl fmt::Debug for CoeffTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoeffTensor")
            .field("order", &self.order)
            .field("max_index", &self.max_index)
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl CoeffTensor {
    /// Builds the tensor for indices `0..=q` in every slot.
    pub fn build(order: usize, q: usize) -> Result<Self> {
        let polys = legendre_polys(q)?;
        let entries = match order {
            2 => build_double(&polys, q),
            3 => build_triple(&polys, q),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "coefficient order must be 2 or 3, got {order}"
                )))
            }
        };
        Ok(Self::from_entries(order, q, entries))
    }

    pub(crate) fn from_entries(order: usize, max_index: usize, entries: Vec<BigRational>) -> Self {
        debug_assert_eq!(entries.len(), (max_index + 1).pow(order as u32));
        let approx = entries.iter().map(rational_to_f64).collect();
        Self {
            order,
            max_index,
            entries,
            approx,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in lexicographic order of `(j_k, ..., j_1)`.
    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    /// Linear position of `(j_k, ..., j_1)` (outermost index first).
    pub fn offset(&self, outer_first: &[usize]) -> Result<usize> {
        if outer_first.len() != self.order {
            return Err(Error::Dimension {
                expected: self.order,
                found: outer_first.len(),
            });
        }
        let n = self.max_index + 1;
        let mut pos = 0;
        for &j in outer_first {
            if j > self.max_index {
                return Err(Error::TensorTooSmall {
                    requested: j,
                    available: self.max_index,
                });
            }
            pos = pos * n + j;
        }
        Ok(pos)
    }

    /// Exact `cbar(j_k, ..., j_1)`, outermost index first.
    pub fn get(&self, outer_first: &[usize]) -> Result<&BigRational> {
        Ok(&self.entries[self.offset(outer_first)?])
    }

    /// Floating-point `cbar(j_k, ..., j_1)`.
    pub fn get_f64(&self, outer_first: &[usize]) -> Result<f64> {
        Ok(self.approx[self.offset(outer_first)?])
    }

    /// The sub-tensor over indices `0..=q`.
    pub fn truncated(&self, q: usize) -> Result<Self> {
        self.require(q)?;
        let n = self.max_index + 1;
        let m = q + 1;
        let mut entries = Vec::with_capacity(m.pow(self.order as u32));
        for pos in 0..m.pow(self.order as u32) {
            let mut rem = pos;
            let mut src = 0;
            let mut scale = 1;
            for _ in 0..self.order {
                src += (rem % m) * scale;
                rem /= m;
                scale *= n;
            }
            entries.push(self.entries[src].clone());
        }
        Ok(Self::from_entries(self.order, q, entries))
    }

    fn require(&self, q: usize) -> Result<()> {
        if q > self.max_index {
            Err(Error::TensorTooSmall {
                requested: q,
                available: self.max_index,
            })
        } else {
            Ok(())
        }
    }

    /// Scaled floating-point coefficients `C` for an interval of length `step`,
    /// restricted to indices `0..=q`.
    pub fn scaled(&self, q: usize, step: f64) -> Result<ScaledCoeffs> {
        self.require(q)?;
        let n = self.max_index + 1;
        let m = q + 1;
        let total = m.pow(self.order as u32);
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.order];
        for pos in 0..total {
            let mut rem = pos;
            for slot in idx.iter_mut().rev() {
                *slot = rem % m;
                rem /= m;
            }
            let src = idx.iter().fold(0, |acc, &j| acc * n + j);
            values.push(self.approx[src] * scale_factor(&idx, step));
        }
        Ok(ScaledCoeffs {
            order: self.order,
            q,
            step,
            values,
        })
    }

    /// Exact `sum_{j <= q} (prod (2j+1) / 4^k) cbar^2`, i.e. `sum C^2` at unit step.
    pub fn unit_energy(&self, q: usize) -> Result<BigRational> {
        Ok(self.shell_energies(q)?.into_iter().sum())
    }

    /// Energy contributed by each shell `max(j) = s`, for `s = 0..=q`, at unit step.
    pub fn shell_energies(&self, q: usize) -> Result<Vec<BigRational>> {
        self.require(q)?;
        let n = self.max_index + 1;
        let denom = BigInt::from(4u32.pow(self.order as u32));
        let mut shells = vec![BigRational::zero(); q + 1];
        let mut idx = vec![0usize; self.order];
        for (pos, c) in self.entries.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut rem = pos;
            for slot in idx.iter_mut().rev() {
                *slot = rem % n;
                rem /= n;
            }
            let top = *idx.iter().max().expect("order >= 2");
            if top > q {
                continue;
            }
            let w: u64 = idx.iter().map(|&j| (2 * j + 1) as u64).product();
            shells[top] += c * c * BigRational::new(BigInt::from(w), denom.clone());
        }
        Ok(shells)
    }
}

fn build_double(polys: &[PolyRational], q: usize) -> Vec<BigRational> {
    let m = moments(2 * q + 2);
    let n = q + 1;
    let mut out = vec![BigRational::zero(); n * n];
    for j1 in 0..n {
        let b = moment_vector(&polys[j1].integral_from_minus_one(), q, &m);
        for j2 in 0..n {
            out[j2 * n + j1] = dot(&polys[j2], &b);
        }
    }
    out
}

fn build_triple(polys: &[PolyRational], q: usize) -> Vec<BigRational> {
    let m = moments(3 * q + 3);
    let n = q + 1;
    let mut out = vec![BigRational::zero(); n * n * n];
    for j1 in 0..n {
        let a1 = polys[j1].integral_from_minus_one();
        for j2 in 0..n {
            let a2 = polys[j2].mul(&a1).integral_from_minus_one();
            let b = moment_vector(&a2, q, &m);
            for j3 in 0..n {
                out[(j3 * n + j2) * n + j1] = dot(&polys[j3], &b);
            }
        }
    }
    out
}

/// Floating-point coefficients `C_{j_k ... j_1}` for a fixed step, same layout as
/// [`CoeffTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCoeffs {
    order: usize,
    q: usize,
    step: f64,
    values: Vec<f64>,
}

impl ScaledCoeffs {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `C_{j3 j2 j1}` for a triple tensor.
    #[inline]
    pub fn c3(&self, j3: usize, j2: usize, j1: usize) -> f64 {
        let n = self.q + 1;
        self.values[(j3 * n + j2) * n + j1]
    }

    /// `C_{j2 j1}` for a double tensor.
    #[inline]
    pub fn c2(&self, j2: usize, j1: usize) -> f64 {
        self.values[j2 * (self.q + 1) + j1]
    }
}

/// Mean-square error of the truncated double-integral approximation for distinct
/// components: `(step^2 / 2) (1/2 - sum_{i=1}^{q} 1/(4i^2 - 1))`.
///
/// Evaluated through the telescoped form `step^2 / (4 (2q + 1))`, which follows from
/// `1/(4i^2 - 1) = (1/(2i - 1) - 1/(2i + 1)) / 2` (derived here, not a quoted formula).
pub fn pairwise_residual(q: usize, step: f64) -> f64 {
    step * step / (4.0 * (2 * q + 1) as f64)
}

/// The same residual by direct summation; kept as an oracle for the closed form.
pub fn pairwise_residual_by_sum(q: usize, step: f64) -> f64 {
    let s: f64 = (1..=q).map(|i| 1.0 / (4.0 * (i * i) as f64 - 1.0)).sum();
    0.5 * step * step * (0.5 - s)
}

/// `1/6 - sum_{j <= q1} C^2` at unit step, exact.
pub fn triple_residual_unit(q1: usize, tensor: &CoeffTensor) -> Result<BigRational> {
    check_order(tensor, 3)?;
    Ok(BigRational::new(1.into(), 6.into()) - tensor.unit_energy(q1)?)
}

/// `step^3 / 6 - sum_{j1,j2,j3 <= q1} C_{j3 j2 j1}^2`.
pub fn triple_residual(q1: usize, step: f64, tensor: &CoeffTensor) -> Result<f64> {
    check_step(step)?;
    Ok(scale_unit(&triple_residual_unit(q1, tensor)?, 3, step))
}

fn scale_unit(unit: &BigRational, k: usize, step: f64) -> f64 {
    // Explicit product: `powi` may round differently depending on inlining.
    let power = (0..k).fold(1.0, |acc, _| acc * step);
    rational_to_f64(unit) * power
}

fn check_order(tensor: &CoeffTensor, k: usize) -> Result<()> {
    if tensor.order() != k {
        return Err(Error::Dimension {
            expected: k,
            found: tensor.order(),
        });
    }
    Ok(())
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step must be positive, got {step}")))
    }
}

/// `I_k - sum_{j <= q} C^2` with `I_2 = step^2 / 2` and `I_3 = step^3 / 6`.
pub fn parseval_gap(k: usize, q: usize, step: f64, tensor: &CoeffTensor) -> Result<f64> {
    check_step(step)?;
    check_order(tensor, k)?;
    let norm = match k {
        2 => BigRational::new(1.into(), 2.into()),
        _ => BigRational::new(1.into(), 6.into()),
    };
    let unit = norm - tensor.unit_energy(q)?;
    Ok(scale_unit(&unit, k, step))
}

/// Residual summary for one truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub k: usize,
    pub q: usize,
    pub step: f64,
    pub residual: f64,
    pub parseval_gap: f64,
}

/// Residual and Parseval gap of a tensor at truncation `q`.
pub fn residual_report(tensor: &CoeffTensor, q: usize, step: f64) -> Result<ResidualReport> {
    let k = tensor.order();
    let gap = parseval_gap(k, q, step, tensor)?;
    let residual = match k {
        2 => pairwise_residual(q, step),
        _ => triple_residual(q, step, tensor)?,
    };
    Ok(ResidualReport {
        k,
        q,
        step,
        residual,
        parseval_gap: gap,
    })
}

/// Exact unit-step triple residuals for every `q1 = 0..=q`.
#[derive(Debug, Clone)]
pub struct TripleResidualSeries {
    unit: Vec<BigRational>,
}

impl TripleResidualSeries {
    pub fn from_tensor(tensor: &CoeffTensor) -> Result<Self> {
        check_order(tensor, 3)?;
        let mut acc = BigRational::new(1.into(), 6.into());
        let unit = tensor
            .shell_energies(tensor.max_index())?
            .into_iter()
            .map(|e| {
                acc -= e;
                acc.clone()
            })
            .collect();
        Ok(Self { unit })
    }

    pub fn build(q: usize) -> Result<Self> {
        Self::from_tensor(&CoeffTensor::build(3, q)?)
    }

    pub fn max_index(&self) -> usize {
        self.unit.len() - 1
    }

    pub fn unit(&self, q1: usize) -> Option<&BigRational> {
        self.unit.get(q1)
    }

    pub fn unit_f64(&self, q1: usize) -> Option<f64> {
        self.unit.get(q1).map(rational_to_f64)
    }
}

/// Which iterated integral a truncation is chosen for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResidualKind {
    Pairwise,
    Triple,
}

impl ResidualKind {
    pub fn name(self) -> &'static str {
        match self {
            ResidualKind::Pairwise => "pairwise",
            ResidualKind::Triple => "triple",
        }
    }
}

/// Outcome of a minimal-truncation search.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalQ {
    pub kind: ResidualKind,
    pub step: f64,
    /// Smallest truncation with `residual <= step^4`.
    pub q: usize,
    pub threshold: f64,
    pub residual_prev: Option<f64>,
    pub residual: f64,
    pub residual_next: f64,
    /// Set when `q - 1` or `q` lies within [`BOUNDARY_MARGIN`] of the threshold.
    pub boundary: bool,
}

/// Relative distance to the threshold below which a result is flagged as a boundary case.
pub const BOUNDARY_MARGIN: f64 = 0.01;

/// Smallest `q` whose residual is at most `step^4`, searching up to `cap`.
///
/// For the triple kind the cap is further limited by the Legendre degree cap.
pub fn minimal_q(step: f64, kind: ResidualKind, cap: usize) -> Result<MinimalQ> {
    check_step(step)?;
    let threshold = step.powi(4);
    match kind {
        ResidualKind::Pairwise => {
            // residual <= step^4  <=>  4 (2q + 1) step^2 >= 1
            let s2 = step * step;
            let q = (0..=cap)
                .find(|&q| 4.0 * (2 * q + 1) as f64 * s2 >= 1.0)
                .ok_or(Error::SearchCap { cap })?;
            Ok(minimal_report(kind, step, q, threshold, |q| {
                pairwise_residual(q, step)
            }))
        }
        ResidualKind::Triple => {
            // residual_unit * step^3 <= step^4  <=>  residual_unit <= step, compared exactly
            let exact_step = BigRational::from_float(step).expect("finite step");
            let degree_cap = crate::legendre::DEFAULT_DEGREE_CAP;
            let mut q_build = 8;
            loop {
                let series = TripleResidualSeries::build(q_build)?;
                let hit = (0..q_build).find(|&q| *series.unit(q).expect("in range") <= exact_step);
                match hit {
                    Some(q) if q <= cap => {
                        let step3 = step.powi(3);
                        return Ok(minimal_report(kind, step, q, threshold, |q| {
                            series.unit_f64(q).expect("in range") * step3
                        }));
                    }
                    Some(_) => return Err(Error::SearchCap { cap }),
                    None if q_build >= degree_cap || q_build > cap => {
                        return Err(Error::SearchCap {
                            cap: cap.min(degree_cap - 1),
                        })
                    }
                    None => q_build = (2 * q_build).min(degree_cap),
                }
            }
        }
    }
}

fn minimal_report(
    kind: ResidualKind,
    step: f64,
    q: usize,
    threshold: f64,
    residual: impl Fn(usize) -> f64,
) -> MinimalQ {
    let residual_prev = q.checked_sub(1).map(&residual);
    let at = residual(q);
    let near = |r: f64| (r / threshold - 1.0).abs() <= BOUNDARY_MARGIN;
    MinimalQ {
        kind,
        step,
        q,
        threshold,
        residual_prev,
        residual: at,
        residual_next: residual(q + 1),
        boundary: near(at) || residual_prev.is_some_and(near),
    }
}
