use crate::error::{Error, Result};
use crate::qwiener::QWienerSpec;

/// Finite spectral-Galerkin representation of a semilinear SPDE
/// `dX = (AX + F(X)) dt + B(X) dW` with diagonal `A`.
///
/// Every evaluator writes `dim()` coordinates into `out`, overwriting it, and
/// must be a pure function of its arguments.
pub trait GalerkinModel: Sync {
    fn dim(&self) -> usize;
    /// Eigenvalues `a_k` of `A`.
    fn a_spectrum(&self) -> &[f64];
    fn qspec(&self) -> &QWienerSpec;
    fn initial(&self) -> &[f64];
    /// Largest number of noise components the model can evaluate.
    fn max_components(&self) -> usize;

    /// `F(y)`
    fn drift(&self, y: &[f64], out: &mut [f64]);
    /// `F'(y) v`
    fn drift_derivative(&self, y: &[f64], v: &[f64], out: &mut [f64]);
    /// `F''(y)(u, v)`
    fn drift_second(&self, y: &[f64], u: &[f64], v: &[f64], out: &mut [f64]);
    /// `B(y) e_r`
    fn noise(&self, y: &[f64], r: usize, out: &mut [f64]);
    /// `B'(y)(u) e_r`
    fn noise_derivative(&self, y: &[f64], u: &[f64], r: usize, out: &mut [f64]);
    /// `B''(y)(u, v) e_r`
    fn noise_second(&self, y: &[f64], u: &[f64], v: &[f64], r: usize, out: &mut [f64]);

    /// Whether `B` vanishes identically.
    fn noise_free(&self) -> bool {
        false
    }
}

/// Drift nonlinearity of [`SpectralModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Zero,
    Constant(Vec<f64>),
    /// `F(y) = f y`
    Linear(f64),
    /// `F(y)_k = kappa sin(y_k)`
    Sine(f64),
}

/// Diffusion of [`SpectralModel`]; component `c` is zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    Zero,
    /// `B e_c = sigma u_c` with `u_c` the `c`-th coordinate vector.
    Constant { sigma: f64 },
    /// `(B(y) e_c)_k = delta_{kc} sigma / (c + 1) (1 + gain sin(y_c))`; commutative.
    Diagonal { sigma: f64, gain: f64 },
    /// `(B(y) e_c)_k = sigma / ((c + 1)(k + 1)) (G_{ck} + sum_l T_{ckl} sin(y_l))` with
    /// fixed pseudo-random `G`, `T`; non-commutative.
    Mixing { sigma: f64, gain: f64, seed: u64 },
}

/// Parameters of the built-in heat-equation model.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticParams {
    pub n_h: usize,
    pub nu: f64,
    pub drift: Drift,
    pub noise: Noise,
    pub max_components: usize,
}

impl Default for DiagnosticParams {
    fn default() -> Self {
        Self {
            n_h: 16,
            nu: 0.02,
            drift: Drift::Sine(0.5),
            noise: Noise::Diagonal { sigma: 1.0, gain: 0.5 },
            max_components: 64,
        }
    }
}

/// Spectral model with `A` diagonal, coordinatewise drift and one of the
/// [`Noise`] families.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    a: Vec<f64>,
    drift: Drift,
    noise: Noise,
    qspec: QWienerSpec,
    xi: Vec<f64>,
    max_components: usize,
    // Mixing tables: g[c][k], t[c][k][l]
    g: Vec<f64>,
    t: Vec<f64>,
}

impl SpectralModel {
    pub fn new(
        a: Vec<f64>,
        drift: Drift,
        noise: Noise,
        qspec: QWienerSpec,
        xi: Vec<f64>,
        max_components: usize,
    ) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::InvalidArgument("model dimension must be positive".into()));
        }
        if xi.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: xi.len(),
            });
        }
        if let Drift::Constant(c) = &drift {
            if c.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: c.len(),
                });
            }
        }
        let max_components = match noise {
            Noise::Constant { .. } | Noise::Diagonal { .. } => max_components.min(n),
            _ => max_components,
        };
        let (g, t) = match noise {
            Noise::Mixing { gain, seed, .. } => mixing_tables(max_components, n, gain, seed),
            _ => (Vec::new(), Vec::new()),
        };
        Ok(Self {
            a,
            drift,
            noise,
            qspec,
            xi,
            max_components,
            g,
            t,
        })
    }

    /// Stochastic heat equation in spectral coordinates: `a_k = -nu pi^2 k^2`,
    /// `lambda_r = r^{-2}`, initial value `xi_k = 1 / (2k)`.
    pub fn diagnostic(p: DiagnosticParams) -> Result<Self> {
        let pi2 = std::f64::consts::PI.powi(2);
        let a = (1..=p.n_h).map(|k| -p.nu * pi2 * (k * k) as f64).collect();
        let xi = (1..=p.n_h).map(|k| 0.5 / k as f64).collect();
        Self::new(a, p.drift, p.noise, QWienerSpec::default_power(), xi, p.max_components)
    }

    pub fn with_initial(mut self, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != self.a.len() {
            return Err(Error::Dimension {
                expected: self.a.len(),
                found: xi.len(),
            });
        }
        self.xi = xi;
        Ok(self)
    }

    pub fn drift_kind(&self) -> &Drift {
        &self.drift
    }

    pub fn noise_kind(&self) -> &Noise {
        &self.noise
    }

    #[inline]
    fn tcoef(&self, c: usize, k: usize, l: usize) -> f64 {
        let n = self.a.len();
        self.t[(c * n + k) * n + l]
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic value in `[-1, 1)` for an index tuple.
fn hash_unit(seed: u64, a: usize, b: usize, c: usize) -> f64 {
    let h = splitmix(splitmix(splitmix(seed ^ a as u64) ^ b as u64) ^ c as u64);
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn mixing_tables(m: usize, n: usize, gain: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut g = vec![0.0; m * n];
    let mut t = vec![0.0; m * n * n];
    for c in 0..m {
        for k in 0..n {
            g[c * n + k] = hash_unit(seed, c, k, usize::MAX);
            for l in 0..n {
                t[(c * n + k) * n + l] = gain * hash_unit(seed.wrapping_add(1), c, k, l) / n as f64;
            }
        }
    }
    (g, t)
}

impl GalerkinModel for SpectralModel {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn a_spectrum(&self) -> &[f64] {
        &self.a
    }

    fn qspec(&self) -> &QWienerSpec {
        &self.qspec
    }

    fn initial(&self) -> &[f64] {
        &self.xi
    }

    fn max_components(&self) -> usize {
        self.max_components
    }

    fn noise_free(&self) -> bool {
        matches!(self.noise, Noise::Zero)
    }

    fn drift(&self, y: &[f64], out: &mut [f64]) {
        match &self.drift {
            Drift::Zero => out.fill(0.0),
            Drift::Constant(c) => out.copy_from_slice(c),
            Drift::Linear(f) => out.iter_mut().zip(y).for_each(|(o, yi)| *o = f * yi),
            Drift::Sine(kappa) => out.iter_mut().zip(y).for_each(|(o, yi)| *o = kappa * yi.sin()),
        }
    }

    fn drift_derivative(&self, y: &[f64], v: &[f64], out: &mut [f64]) {
        match &self.drift {
            Drift::Zero | Drift::Constant(_) => out.fill(0.0),
            Drift::Linear(f) => out.iter_mut().zip(v).for_each(|(o, vi)| *o = f * vi),
            Drift::Sine(kappa) => {
                for ((o, yi), vi) in out.iter_mut().zip(y).zip(v) {
                    *o = kappa * yi.cos() * vi;
                }
            }
        }
    }

    fn drift_second(&self, y: &[f64], u: &[f64], v: &[f64], out: &mut [f64]) {
        match &self.drift {
            Drift::Sine(kappa) => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = -kappa * y[k].sin() * (u[k] * v[k]);
                }
            }
            _ => out.fill(0.0),
        }
    }

    fn noise(&self, y: &[f64], r: usize, out: &mut [f64]) {
        out.fill(0.0);
        match self.noise {
            Noise::Zero => {}
            Noise::Constant { sigma } => out[r] = sigma,
            Noise::Diagonal { sigma, gain } => {
                out[r] = sigma / (r + 1) as f64 * (1.0 + gain * y[r].sin());
            }
            Noise::Mixing { sigma, .. } => {
                let n = self.a.len();
                let sc = sigma / (r + 1) as f64;
                for (k, o) in out.iter_mut().enumerate() {
                    let mut s = self.g[r * n + k];
                    for (l, yl) in y.iter().enumerate() {
                        s += self.tcoef(r, k, l) * yl.sin();
                    }
                    *o = sc / (k + 1) as f64 * s;
                }
            }
        }
    }

    fn noise_derivative(&self, y: &[f64], u: &[f64], r: usize, out: &mut [f64]) {
        out.fill(0.0);
        match self.noise {
            Noise::Zero | Noise::Constant { .. } => {}
            Noise::Diagonal { sigma, gain } => {
                out[r] = sigma / (r + 1) as f64 * gain * y[r].cos() * u[r];
            }
            Noise::Mixing { sigma, .. } => {
                let sc = sigma / (r + 1) as f64;
                for (k, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (l, (yl, ul)) in y.iter().zip(u).enumerate() {
                        s += self.tcoef(r, k, l) * yl.cos() * ul;
                    }
                    *o = sc / (k + 1) as f64 * s;
                }
            }
        }
    }

    fn noise_second(&self, y: &[f64], u: &[f64], v: &[f64], r: usize, out: &mut [f64]) {
        out.fill(0.0);
        match self.noise {
            Noise::Zero | Noise::Constant { .. } => {}
            Noise::Diagonal { sigma, gain } => {
                out[r] = -sigma / (r + 1) as f64 * gain * y[r].sin() * (u[r] * v[r]);
            }
            Noise::Mixing { sigma, .. } => {
                let sc = sigma / (r + 1) as f64;
                for (k, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for l in 0..y.len() {
                        s -= self.tcoef(r, k, l) * y[l].sin() * (u[l] * v[l]);
                    }
                    *o = sc / (k + 1) as f64 * s;
                }
            }
        }
    }
}
