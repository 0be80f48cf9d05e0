use super::partition::{enumerate_pair_partitions, PairPartition};
use super::GaussianBasisDraws;
use crate::error::{Error, Result};

/// Integrator of one slot of an iterated integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// `ds`; its basis coefficients are `\int phi_j ds = sqrt(step)` for `j = 0`, else 0.
    Time,
    /// `dw^{(r)}`, zero-based component `r`.
    Wiener(usize),
}

/// Signed pair partitions entering the expansion of order `k`: `(-1)^r` for `r` pairs.
pub fn expansion_terms(k: usize) -> Vec<(f64, PairPartition)> {
    (0..=k / 2)
        .flat_map(|r| {
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            enumerate_pair_partitions(k, r).into_iter().map(move |p| (sign, p))
        })
        .collect()
}

/// Truncated multiple Fourier-Legendre expansion of a `k`-fold iterated integral.
///
/// `components[l]` and `truncations[l]` belong to slot `l + 1` (innermost first).
/// `coeff(js)` returns `C_{j_k ... j_1}` for `js = [j_1, ..., j_k]`.
pub fn approx_general_k(
    draws: &GaussianBasisDraws,
    components: &[Component],
    truncations: &[usize],
    step: f64,
    coeff: impl Fn(&[usize]) -> f64,
) -> Result<f64> {
    let k = components.len();
    if truncations.len() != k {
        return Err(Error::Dimension {
            expected: k,
            found: truncations.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("expansion order must be positive".into()));
    }
    for (c, &p) in components.iter().zip(truncations) {
        if let Component::Wiener(r) = *c {
            if r >= draws.m() {
                return Err(Error::Dimension {
                    expected: draws.m(),
                    found: r + 1,
                });
            }
            if p > draws.q_max() {
                return Err(Error::TensorTooSmall {
                    requested: p,
                    available: draws.q_max(),
                });
            }
        }
    }

    let sqrt_step = step.sqrt();
    let zeta = |l: usize, j: usize| match components[l] {
        Component::Time => {
            if j == 0 {
                sqrt_step
            } else {
                0.0
            }
        }
        Component::Wiener(r) => draws.get(r, j),
    };
    // Pairs whose components can never match drop out for every multi-index.
    let terms: Vec<(f64, PairPartition)> = expansion_terms(k)
        .into_iter()
        .filter(|(_, p)| {
            p.pairs.iter().all(|&(a, b)| match (components[a], components[b]) {
                (Component::Wiener(x), Component::Wiener(y)) => x == y,
                _ => false,
            })
        })
        .collect();

    let mut js = vec![0usize; k];
    let mut total = 0.0;
    loop {
        let c = coeff(&js);
        if c != 0.0 {
            let mut bracket = 0.0;
            for (sign, p) in &terms {
                if p.pairs.iter().all(|&(a, b)| js[a] == js[b]) {
                    let prod: f64 = p.singles.iter().map(|&l| zeta(l, js[l])).product();
                    bracket += sign * prod;
                }
            }
            total += c * bracket;
        }
        let mut l = 0;
        loop {
            if l == k {
                return Ok(total);
            }
            if js[l] < truncations[l] {
                js[l] += 1;
                break;
            }
            js[l] = 0;
            l += 1;
        }
    }
}

/// Closed form of the `k`-fold iterated integral with all components equal,
/// `Delta^{k/2} He_k(delta / sqrt(Delta)) / k!` written as a polynomial in `(delta, Delta)`
/// where `delta` is the Wiener increment and `Delta` the step.
pub fn hermite_closed_form(k: usize, delta: f64, big_delta: f64) -> Result<f64> {
    let (d, t) = (delta, big_delta);
    let v = match k {
        1 => d,
        2 => (d * d - t) / 2.0,
        3 => (d.powi(3) - 3.0 * d * t) / 6.0,
        4 => (d.powi(4) - 6.0 * d * d * t + 3.0 * t * t) / 24.0,
        5 => (d.powi(5) - 10.0 * d.powi(3) * t + 15.0 * d * t * t) / 120.0,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "closed forms are provided for k = 1..=5, got {k}"
            )))
        }
    };
    Ok(v)
}
