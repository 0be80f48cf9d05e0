use super::model::GalerkinModel;
use crate::coeffs::{CoeffTensor, ScaledCoeffs};
use crate::error::{Error, Result};
use crate::ito::{BundleSpec, GaussianBasisDraws, ItoIntegralBundle};
use crate::qwiener::{
    assemble_i1, assemble_i2, assemble_i3, assemble_j1, assemble_j2, assemble_j3, assemble_j4,
    truncate_spectrum, ImageSet, TruncationParams,
};

/// The ten additive term groups inside the Wagner-Platen step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermGroup {
    /// `step F(Y)`
    Drift,
    /// `step^2 / 2 F'(Y)(AY + F(Y))`
    DriftTaylor,
    /// `J1`, the single stochastic integral
    J1,
    /// `step^2 / 4 sum_{r in J_M} lambda_r F''(Y)(B e_r, B e_r)`
    Trace,
    /// `I1`, the double stochastic integral
    I1,
    /// `J2`, the `A`-correction of the single integral
    J2,
    /// `J3`, the drift-inside double integral
    J3,
    /// `I3 / 2`, the second-derivative triple integral
    I3,
    /// `J4`, the noise-inside time integral
    J4,
    /// `I2`, the iterated first-derivative triple integral
    I2,
}

impl TermGroup {
    pub const ALL: [TermGroup; 10] = [
        TermGroup::Drift,
        TermGroup::DriftTaylor,
        TermGroup::J1,
        TermGroup::Trace,
        TermGroup::I1,
        TermGroup::J2,
        TermGroup::J3,
        TermGroup::I3,
        TermGroup::J4,
        TermGroup::I2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TermGroup::Drift => "drift",
            TermGroup::DriftTaylor => "drift_taylor",
            TermGroup::J1 => "j1",
            TermGroup::Trace => "trace",
            TermGroup::I1 => "i1",
            TermGroup::J2 => "j2",
            TermGroup::J3 => "j3",
            TermGroup::I3 => "i3",
            TermGroup::J4 => "j4",
            TermGroup::I2 => "i2",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

/// Set of enabled term groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermMask(u16);

impl TermMask {
    pub const ALL: TermMask = TermMask(0x3ff);

    pub fn without(self, g: TermGroup) -> Self {
        Self(self.0 & !g.bit())
    }

    pub fn contains(self, g: TermGroup) -> bool {
        self.0 & g.bit() != 0
    }
}

impl Default for TermMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// Time stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Milstein,
    WagnerPlaten(TermMask),
}

impl Scheme {
    pub fn wagner_platen() -> Self {
        Scheme::WagnerPlaten(TermMask::ALL)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Milstein => "milstein",
            Scheme::WagnerPlaten(_) => "wagner_platen",
        }
    }

    fn needs_triples(self) -> bool {
        match self {
            Scheme::Milstein => false,
            Scheme::WagnerPlaten(mask) => mask.contains(TermGroup::I2) || mask.contains(TermGroup::I3),
        }
    }
}

/// Per-run data shared by every step of one step size.
#[derive(Debug, Clone)]
pub struct StepContext {
    step: f64,
    scheme: Scheme,
    trunc: TruncationParams,
    exp_full: Vec<f64>,
    exp_half: Vec<f64>,
    lambdas: Vec<f64>,
    bundle_spec: BundleSpec,
    coeffs: Option<ScaledCoeffs>,
}

impl StepContext {
    /// `tensor` supplies the triple coefficients; it is built on demand when absent.
    pub fn new<M: GalerkinModel + ?Sized>(
        model: &M,
        scheme: Scheme,
        step: f64,
        trunc: TruncationParams,
        tensor: Option<&CoeffTensor>,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        if trunc.m > model.max_components() {
            return Err(Error::InvalidArgument(format!(
                "M = {} exceeds the {} noise components of the model",
                trunc.m,
                model.max_components()
            )));
        }
        let lambdas = truncate_spectrum(model.qspec(), trunc.m)?.eigenvalues;
        let exp_full = model.a_spectrum().iter().map(|a| (a * step).exp()).collect();
        let exp_half = model.a_spectrum().iter().map(|a| (0.5 * a * step).exp()).collect();
        let triples = scheme.needs_triples();
        let bundle_spec = if triples {
            BundleSpec::full(trunc.q, trunc.q1)
        } else {
            BundleSpec::pairs_only(trunc.q)
        };
        let coeffs = if triples {
            let scaled = match tensor {
                Some(t) => t.scaled(trunc.q1, step)?,
                None => CoeffTensor::build(3, trunc.q1)?.scaled(trunc.q1, step)?,
            };
            Some(scaled)
        } else {
            None
        };
        Ok(Self {
            step,
            scheme,
            trunc,
            exp_full,
            exp_half,
            lambdas,
            bundle_spec,
            coeffs,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn trunc(&self) -> TruncationParams {
        self.trunc
    }

    /// `exp(a_k step)`
    pub fn exp_full(&self) -> &[f64] {
        &self.exp_full
    }

    /// `exp(a_k step / 2)`
    pub fn exp_half(&self) -> &[f64] {
        &self.exp_half
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn bundle_spec(&self) -> BundleSpec {
        self.bundle_spec
    }

    /// Highest basis index each step's draws must contain.
    pub fn q_max(&self) -> usize {
        self.bundle_spec.required_q_max()
    }

    /// Builds the scalar bundle for one step.
    pub fn bundle(&self, draws: &GaussianBasisDraws) -> Result<ItoIntegralBundle> {
        ItoIntegralBundle::build(draws, self.step, self.bundle_spec, self.coeffs.as_ref())
    }

    /// One step from fresh draws with the configured scheme.
    pub fn advance<M: GalerkinModel + ?Sized>(
        &self,
        model: &M,
        y: &[f64],
        draws: &GaussianBasisDraws,
    ) -> Result<Vec<f64>> {
        let bundle = self.bundle(draws)?;
        match self.scheme {
            Scheme::Milstein => milstein_step(model, y, self, draws, &bundle),
            Scheme::WagnerPlaten(_) => wagner_platen_step(model, y, self, draws, &bundle),
        }
    }
}

fn check_state<M: GalerkinModel + ?Sized>(model: &M, y: &[f64]) -> Result<()> {
    if y.len() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            found: y.len(),
        });
    }
    Ok(())
}

fn noise_images<M: GalerkinModel + ?Sized>(model: &M, y: &[f64], m: usize) -> ImageSet {
    let mut b = ImageSet::zeros(m, model.dim());
    for r in 0..m {
        model.noise(y, r, b.row_mut(r));
    }
    b
}

/// `B'(y)(b_{r1}) e_{r2}` for all pairs.
fn derivative_images<M: GalerkinModel + ?Sized>(model: &M, y: &[f64], b: &ImageSet, m: usize) -> ImageSet {
    let mut out = ImageSet::zeros(b.count() * m, model.dim());
    for i in 0..b.count() {
        for r in 0..m {
            model.noise_derivative(y, b.row(i), r, out.row_mut(i * m + r));
        }
    }
    out
}

#[inline]
fn add(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o += a * xi;
    }
}

/// `exp(A step)(Y + step F(Y) + J1 + I1)`.
pub fn milstein_step<M: GalerkinModel + ?Sized>(
    model: &M,
    y: &[f64],
    ctx: &StepContext,
    draws: &GaussianBasisDraws,
    bundle: &ItoIntegralBundle,
) -> Result<Vec<f64>> {
    check_state(model, y)?;
    let n = model.dim();
    let m = ctx.trunc.m;
    let lambdas = ctx.lambdas();
    let mut inner = y.to_vec();
    let mut f = vec![0.0; n];
    model.drift(y, &mut f);
    add(&mut inner, ctx.step, &f);
    if !model.noise_free() {
        let b = noise_images(model, y, m);
        add(&mut inner, 1.0, &assemble_j1(&b, draws, lambdas, ctx.step)?);
        let bb = derivative_images(model, y, &b, m);
        add(&mut inner, 1.0, &assemble_i1(&bb, bundle, lambdas)?);
    }
    Ok(inner.iter().zip(&ctx.exp_full).map(|(v, e)| e * v).collect())
}

/// Exponential Wagner-Platen step with every enabled [`TermGroup`].
pub fn wagner_platen_step<M: GalerkinModel + ?Sized>(
    model: &M,
    y: &[f64],
    ctx: &StepContext,
    draws: &GaussianBasisDraws,
    bundle: &ItoIntegralBundle,
) -> Result<Vec<f64>> {
    check_state(model, y)?;
    let mask = match ctx.scheme {
        Scheme::WagnerPlaten(mask) => mask,
        Scheme::Milstein => TermMask::ALL,
    };
    let on = |g| mask.contains(g);
    let n = model.dim();
    let m = ctx.trunc.m;
    let h = ctx.step;
    let lambdas = ctx.lambdas();
    let a = model.a_spectrum();

    let mut inner: Vec<f64> = y.iter().zip(&ctx.exp_half).map(|(v, e)| e * v).collect();
    let mut f = vec![0.0; n];
    model.drift(y, &mut f);
    // AY + F(Y)
    let ayf: Vec<f64> = y.iter().zip(a).zip(&f).map(|((yi, ai), fi)| ai * yi + fi).collect();
    let mut tmp = vec![0.0; n];
    if on(TermGroup::Drift) {
        add(&mut inner, h, &f);
    }
    if on(TermGroup::DriftTaylor) {
        model.drift_derivative(y, &ayf, &mut tmp);
        add(&mut inner, 0.5 * h * h, &tmp);
    }

    if !model.noise_free() {
        let b = noise_images(model, y, m);
        if on(TermGroup::J1) {
            add(&mut inner, 1.0, &assemble_j1(&b, draws, lambdas, h)?);
        }
        if on(TermGroup::Trace) {
            for (r, l) in lambdas.iter().enumerate() {
                model.drift_second(y, b.row(r), b.row(r), &mut tmp);
                add(&mut inner, 0.25 * h * h * l, &tmp);
            }
        }
        let bb = derivative_images(model, y, &b, m);
        if on(TermGroup::I1) {
            add(&mut inner, 1.0, &assemble_i1(&bb, bundle, lambdas)?);
        }
        if on(TermGroup::J2) {
            let mut ab = b.clone();
            for r in 0..m {
                ab.row_mut(r).iter_mut().zip(a).for_each(|(v, ai)| *v *= ai);
            }
            add(&mut inner, 1.0, &assemble_j2(&ab, draws, lambdas, h)?);
        }
        if on(TermGroup::J3) {
            let mut bd = ImageSet::zeros(m, n);
            for r in 0..m {
                model.noise_derivative(y, &ayf, r, bd.row_mut(r));
            }
            add(&mut inner, 1.0, &assemble_j3(&bd, draws, lambdas, h)?);
        }
        if on(TermGroup::I3) {
            let mut b2 = ImageSet::zeros(m * m * m, n);
            for r1 in 0..m {
                for r2 in 0..m {
                    for r3 in 0..m {
                        model.noise_second(y, b.row(r1), b.row(r2), r3, b2.row_mut((r1 * m + r2) * m + r3));
                    }
                }
            }
            add(&mut inner, 0.5, &assemble_i3(&b2, bundle, lambdas)?);
        }
        if on(TermGroup::J4) {
            let mut fb = ImageSet::zeros(m, n);
            for r in 0..m {
                model.drift_derivative(y, b.row(r), fb.row_mut(r));
            }
            add(&mut inner, 1.0, &assemble_j4(&fb, draws, lambdas, h)?);
        }
        if on(TermGroup::I2) {
            let bbb = derivative_images(model, y, &bb, m);
            add(&mut inner, 1.0, &assemble_i2(&bbb, bundle, lambdas)?);
        }
    }
    Ok(inner.iter().zip(&ctx.exp_half).map(|(v, e)| e * v).collect())
}
