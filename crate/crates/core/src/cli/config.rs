use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::coeffs::{minimal_q, ResidualKind, DEFAULT_SEARCH_CAP};
use crate::error::{Error, Result};
use crate::qwiener::TruncationParams;
use crate::spde::{DiagnosticParams, Drift, Noise, Scheme, SpectralModel};

/// A truncation index given explicitly or resolved by the minimal-q search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trunc {
    Auto,
    Fixed(usize),
}

impl Trunc {
    pub fn resolve(self, step: f64, kind: ResidualKind) -> Result<usize> {
        match self {
            Trunc::Fixed(q) => Ok(q),
            Trunc::Auto => Ok(minimal_q(step, kind, DEFAULT_SEARCH_CAP)?.q),
        }
    }
}

impl FromStr for Trunc {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Trunc::Auto);
        }
        s.parse().map(Trunc::Fixed).map_err(|_| format!("expected `auto` or an index, got `{s}`"))
    }
}

impl fmt::Display for Trunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trunc::Auto => f.write_str("auto"),
            Trunc::Fixed(q) => write!(f, "{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Commutative diagonal noise.
    Diagonal,
    /// Non-commutative mixing noise.
    Mixing,
    /// Deterministic heat equation.
    NoiseFree,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "diagonal" => Ok(ModelKind::Diagonal),
            "mixing" => Ok(ModelKind::Mixing),
            "noise-free" => Ok(ModelKind::NoiseFree),
            _ => Err(format!("unknown model `{s}` (diagonal, mixing, noise-free)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Diagonal => "diagonal",
            ModelKind::Mixing => "mixing",
            ModelKind::NoiseFree => "noise-free",
        })
    }
}

pub fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    match s {
        "milstein" => Ok(Scheme::Milstein),
        "wagner-platen" => Ok(Scheme::wagner_platen()),
        _ => Err(format!("unknown scheme `{s}` (milstein, wagner-platen)")),
    }
}

pub fn scheme_label(s: Scheme) -> &'static str {
    match s {
        Scheme::Milstein => "milstein",
        Scheme::WagnerPlaten(_) => "wagner-platen",
    }
}

/// Flat key-value configuration shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub table_steps: Vec<f64>,
    pub integral_step: f64,
    pub integral_paths: usize,
    pub q: Trunc,
    pub q1: Trunc,
    pub q_ref: usize,
    pub q1_ref: usize,
    pub model: ModelKind,
    pub n_h: usize,
    pub nu: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub gain: f64,
    pub mixing_seed: u64,
    pub m: usize,
    pub alpha: f64,
    pub scheme: Scheme,
    pub solve_step: f64,
    pub horizon: f64,
    pub snapshot_every: usize,
    pub path_index: u64,
    pub convergence_steps: Vec<f64>,
    pub step_ref: f64,
    pub convergence_paths: usize,
    pub convergence_q: Trunc,
    pub convergence_q1: Trunc,
    pub convergence_schemes: Vec<Scheme>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            table_steps: vec![0.08222, 0.05020, 0.02310, 0.01956],
            integral_step: 0.25,
            integral_paths: 100_000,
            q: Trunc::Auto,
            q1: Trunc::Auto,
            q_ref: 200,
            q1_ref: 12,
            model: ModelKind::Diagonal,
            n_h: 16,
            nu: 0.02,
            kappa: 0.5,
            sigma: 1.0,
            gain: 0.5,
            mixing_seed: 3,
            m: 8,
            alpha: 0.5,
            scheme: Scheme::wagner_platen(),
            solve_step: 0.01,
            horizon: 0.5,
            snapshot_every: 1,
            path_index: 0,
            convergence_steps: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0],
            step_ref: 1.0 / 2048.0,
            convergence_paths: 400,
            convergence_q: Trunc::Fixed(1),
            convergence_q1: Trunc::Fixed(1),
            convergence_schemes: vec![Scheme::Milstein, Scheme::wagner_platen()],
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let out: Vec<T> = v.split(',').map(|s| parse(key, s.trim())).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config(format!("`{key}` needs at least one value")));
    }
    Ok(out)
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 28] = [
        "seed",
        "table_steps",
        "integral_step",
        "integral_paths",
        "q",
        "q1",
        "q_ref",
        "q1_ref",
        "model",
        "n_h",
        "nu",
        "kappa",
        "sigma",
        "gain",
        "mixing_seed",
        "m",
        "alpha",
        "scheme",
        "solve_step",
        "horizon",
        "snapshot_every",
        "path_index",
        "convergence_steps",
        "step_ref",
        "convergence_paths",
        "convergence_q",
        "convergence_q1",
        "convergence_schemes",
    ];

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "table_steps" => self.table_steps = parse_list(key, v)?,
            "integral_step" => self.integral_step = parse(key, v)?,
            "integral_paths" => self.integral_paths = parse(key, v)?,
            "q" => self.q = parse_with(key, v)?,
            "q1" => self.q1 = parse_with(key, v)?,
            "q_ref" => self.q_ref = parse(key, v)?,
            "q1_ref" => self.q1_ref = parse(key, v)?,
            "model" => self.model = parse_with(key, v)?,
            "n_h" => self.n_h = parse(key, v)?,
            "nu" => self.nu = parse(key, v)?,
            "kappa" => self.kappa = parse(key, v)?,
            "sigma" => self.sigma = parse(key, v)?,
            "gain" => self.gain = parse(key, v)?,
            "mixing_seed" => self.mixing_seed = parse(key, v)?,
            "m" => self.m = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "scheme" => self.scheme = parse_scheme(v).map_err(Error::Config)?,
            "solve_step" => self.solve_step = parse(key, v)?,
            "horizon" => self.horizon = parse(key, v)?,
            "snapshot_every" => self.snapshot_every = parse(key, v)?,
            "path_index" => self.path_index = parse(key, v)?,
            "convergence_steps" => self.convergence_steps = parse_list(key, v)?,
            "step_ref" => self.step_ref = parse(key, v)?,
            "convergence_paths" => self.convergence_paths = parse(key, v)?,
            "convergence_q" => self.convergence_q = parse_with(key, v)?,
            "convergence_q1" => self.convergence_q1 = parse_with(key, v)?,
            "convergence_schemes" => {
                self.convergence_schemes = v
                    .split(',')
                    .map(|s| parse_scheme(s.trim()).map_err(Error::Config))
                    .collect::<Result<_>>()?
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "seed" => self.seed.to_string(),
            "table_steps" => join(&self.table_steps),
            "integral_step" => self.integral_step.to_string(),
            "integral_paths" => self.integral_paths.to_string(),
            "q" => self.q.to_string(),
            "q1" => self.q1.to_string(),
            "q_ref" => self.q_ref.to_string(),
            "q1_ref" => self.q1_ref.to_string(),
            "model" => self.model.to_string(),
            "n_h" => self.n_h.to_string(),
            "nu" => self.nu.to_string(),
            "kappa" => self.kappa.to_string(),
            "sigma" => self.sigma.to_string(),
            "gain" => self.gain.to_string(),
            "mixing_seed" => self.mixing_seed.to_string(),
            "m" => self.m.to_string(),
            "alpha" => self.alpha.to_string(),
            "scheme" => scheme_label(self.scheme).to_string(),
            "solve_step" => self.solve_step.to_string(),
            "horizon" => self.horizon.to_string(),
            "snapshot_every" => self.snapshot_every.to_string(),
            "path_index" => self.path_index.to_string(),
            "convergence_steps" => join(&self.convergence_steps),
            "step_ref" => self.step_ref.to_string(),
            "convergence_paths" => self.convergence_paths.to_string(),
            "convergence_q" => self.convergence_q.to_string(),
            "convergence_q1" => self.convergence_q1.to_string(),
            "convergence_schemes" => self
                .convergence_schemes
                .iter()
                .map(|s| scheme_label(*s))
                .collect::<Vec<_>>()
                .join(","),
            _ => return None,
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(c)
    }

    /// Every key with its current value, one `key = value` per line.
    pub fn render(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    pub fn build_model(&self) -> Result<SpectralModel> {
        let noise = match self.model {
            ModelKind::Diagonal => Noise::Diagonal {
                sigma: self.sigma,
                gain: self.gain,
            },
            ModelKind::Mixing => Noise::Mixing {
                sigma: self.sigma,
                gain: self.gain,
                seed: self.mixing_seed,
            },
            ModelKind::NoiseFree => Noise::Zero,
        };
        let drift = if self.kappa == 0.0 { Drift::Zero } else { Drift::Sine(self.kappa) };
        SpectralModel::diagnostic(DiagnosticParams {
            n_h: self.n_h,
            nu: self.nu,
            drift,
            noise,
            max_components: self.m.max(DiagnosticParams::default().max_components),
        })
    }

    /// Resolves `q` and `q1` at `step`.
    pub fn truncation(&self, q: Trunc, q1: Trunc, step: f64) -> Result<TruncationParams> {
        TruncationParams::new(
            self.m,
            q.resolve(step, ResidualKind::Pairwise)?,
            q1.resolve(step, ResidualKind::Triple)?,
            self.alpha,
        )
    }
}

fn parse_with<T: FromStr<Err = String>>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|e: String| Error::Config(format!("`{key}`: {e}")))
}
