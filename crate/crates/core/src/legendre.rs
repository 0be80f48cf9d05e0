//! Legendre polynomials on `[-1, 1]` and the shifted orthonormal system on `[t, T]`.
//!
//! Floating-point evaluation uses the three-term recurrence
//! `(n + 1) P_{n+1}(x) = (2n + 1) x P_n(x) - n P_{n-1}(x)`; the same recurrence
//! run over exact rationals gives the monomial coefficients used by the
//! coefficient tensors.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default cap on the degree of exact Legendre polynomials.
pub const DEFAULT_DEGREE_CAP: usize = 64;

/// `P_n(x)` by the three-term recurrence.
pub fn legendre_eval(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Polynomial with exact rational coefficients in the monomial basis,
/// degree-ascending. The zero polynomial has no coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyRational {
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for PolyRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.coeffs.iter().map(|c| c.to_string()))
            .finish()
    }
}

impl PolyRational {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_coeffs(vec![BigRational::one()])
    }

    /// Builds a polynomial and strips trailing zero coefficients.
    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Convenience constructor from integer pairs `(numerator, denominator)`.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Self {
        Self::from_coeffs(
            pairs
                .iter()
                .map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
                .collect(),
        )
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Exact evaluation at the binary value of `x`, rounded once to `f64`.
    pub fn eval_f64(&self, x: f64) -> f64 {
        match BigRational::from_float(x) {
            Some(xr) => self.eval(&xr).to_f64().unwrap_or(f64::NAN),
            None => f64::NAN,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self::from_coeffs(out)
    }

    /// The antiderivative vanishing at `x = -1`, i.e. `x -> \int_{-1}^x p`.
    pub fn integral_from_minus_one(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(BigRational::zero());
        for (i, c) in self.coeffs.iter().enumerate() {
            out.push(c / BigRational::from_integer(BigInt::from(i + 1)));
        }
        let at_minus_one: BigRational = out
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { c.clone() } else { -c })
            .sum();
        out[0] = -at_minus_one;
        Self::from_coeffs(out)
    }

    /// `\int_{-1}^{1} p(x) dx`, exact.
    pub fn integral_over_reference(&self) -> BigRational {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 0)
            .map(|(i, c)| c * BigRational::new(BigInt::from(2), BigInt::from(i + 1)))
            .sum()
    }

    /// Leading coefficient; zero for the zero polynomial.
    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_nonnegative_at_one(&self) -> bool {
        !self.eval(&BigRational::one()).is_negative()
    }
}

/// Exact monomial coefficients of `P_0 .. P_n` (inclusive), with the default degree cap.
pub fn legendre_polys(n: usize) -> Result<Vec<PolyRational>> {
    legendre_polys_capped(n, DEFAULT_DEGREE_CAP)
}

pub fn legendre_polys_capped(n: usize, cap: usize) -> Result<Vec<PolyRational>> {
    if n > cap {
        return Err(Error::DegreeCap { degree: n, cap });
    }
    let mut polys = Vec::with_capacity(n + 1);
    polys.push(PolyRational::one());
    if n == 0 {
        return Ok(polys);
    }
    polys.push(PolyRational::from_ratios(&[(0, 1), (1, 1)]));
    for k in 1..n {
        let kk = BigInt::from(k);
        let a = BigRational::new(BigInt::from(2 * k + 1), BigInt::from(k + 1));
        let b = BigRational::new(kk, BigInt::from(k + 1));
        let cur = polys[k].coeffs();
        let prev = polys[k - 1].coeffs();
        let mut next = vec![BigRational::zero(); k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += &a * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= &b * c;
        }
        polys.push(PolyRational::from_coeffs(next));
    }
    Ok(polys)
}

/// Exact monomial coefficients of `P_n`.
pub fn legendre_poly(n: usize) -> Result<PolyRational> {
    Ok(legendre_polys(n)?.pop().expect("non-empty"))
}

/// Affine change of variables between `[t, T]` and the reference interval `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalScaling {
    start: f64,
    end: f64,
    step: f64,
    midpoint: f64,
    inv_half_step: f64,
}

impl IntervalScaling {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        let step = end - start;
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval end {end} must exceed start {start}"
            )));
        }
        Ok(Self {
            start,
            end,
            step,
            midpoint: 0.5 * (start + end),
            inv_half_step: 2.0 / step,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Image of `s in [t, T]` in `[-1, 1]`.
    pub fn to_reference(&self, s: f64) -> f64 {
        (s - self.midpoint) * self.inv_half_step
    }

    /// Inverse of [`IntervalScaling::to_reference`].
    pub fn from_reference(&self, x: f64) -> f64 {
        self.midpoint + 0.5 * self.step * x
    }
}

/// `phi_j(s) = sqrt((2j + 1) / (T - t)) P_j(x(s))`, orthonormal in `L_2([t, T])`.
pub fn phi_eval(j: usize, s: f64, scaling: &IntervalScaling) -> f64 {
    ((2 * j + 1) as f64 / scaling.step()).sqrt() * legendre_eval(j, scaling.to_reference(s))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (exact for degree `2n - 1`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let p = legendre_eval(n, x);
            let p_prev = legendre_eval(n - 1, x);
            let dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let p_prev = legendre_eval(n - 1, x);
        let dp = nf * (x * legendre_eval(n, x) - p_prev) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
