//! C ABI over `flito`: coefficient tensors, residuals, minimal truncations and
//! path simulation on the built-in spectral model.
//!
//! Every fallible function returns a [`FlitoStatus`]; on failure the message is
//! available from [`flito_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use flito::coeffs::{
    file_checksum, load_cache, minimal_q, pairwise_residual, save_cache, triple_residual, CoeffTensor,
    ResidualKind, DEFAULT_SEARCH_CAP,
};
use flito::qwiener::TruncationParams;
use flito::spde::{
    simulate_path, strong_error_estimate, ConvergenceSetup, DiagnosticParams, Drift, GalerkinModel, Noise, Scheme,
    SpectralModel, StepContext,
};
use flito::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitoStatus {
    Ok = 0,
    InvalidArgument = 1,
    Shape = 2,
    Capacity = 3,
    Format = 4,
    Config = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitoResidualKind {
    Pairwise = 0,
    Triple = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitoScheme {
    Milstein = 0,
    WagnerPlaten = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitoNoise {
    Zero = 0,
    Diagonal = 1,
    Mixing = 2,
}

/// Parameters of the built-in stochastic heat equation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlitoModelParams {
    pub n_h: usize,
    pub nu: f64,
    /// Amplitude of the `kappa sin(y)` drift; 0 disables it.
    pub kappa: f64,
    pub noise: FlitoNoise,
    pub sigma: f64,
    pub gain: f64,
    pub mixing_seed: u64,
    pub max_components: usize,
}

/// Result of [`flito_minimal_q`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlitoMinimalQ {
    pub q: usize,
    pub residual: f64,
    pub threshold: f64,
    pub boundary: bool,
}

/// Opaque coefficient tensor.
pub struct FlitoTensor {
    inner: CoeffTensor,
}

/// Opaque spectral model.
pub struct FlitoModel {
    inner: SpectralModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FlitoStatus {
    match e.category() {
        "argument" => FlitoStatus::InvalidArgument,
        "shape" => FlitoStatus::Shape,
        "capacity" => FlitoStatus::Capacity,
        "format" => FlitoStatus::Format,
        "config" => FlitoStatus::Config,
        _ => FlitoStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Buffer { needed: usize, cap: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FlitoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlitoStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Buffer { needed, cap })) => {
            set_error(format!("buffer holds {cap} bytes, {needed} needed"));
            FlitoStatus::Capacity
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            FlitoStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            FlitoStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn flito_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn flito_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Builds the order-`order` tensor for indices `0..=q`.
///
/// # Safety
/// `out_tensor` must be a valid pointer; the handle is released with [`flito_tensor_free`].
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_build(order: usize, q: usize, out_tensor: *mut *mut FlitoTensor) -> FlitoStatus {
    guard(|| {
        let slot = out(out_tensor, "out_tensor")?;
        let inner = CoeffTensor::build(order, q)?;
        *slot = Box::into_raw(Box::new(FlitoTensor { inner }));
        Ok(())
    })
}

/// Reads a cache file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_tensor` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_load(path: *const c_char, out_tensor: *mut *mut FlitoTensor) -> FlitoStatus {
    guard(|| {
        let slot = out(out_tensor, "out_tensor")?;
        let inner = load_cache(&path_arg(path)?)?;
        *slot = Box::into_raw(Box::new(FlitoTensor { inner }));
        Ok(())
    })
}

/// Writes a cache file; `written` is false when identical content was already there.
///
/// # Safety
/// `tensor` must come from this library, `path` must be NUL-terminated, `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_save(
    tensor: *const FlitoTensor,
    path: *const c_char,
    written: *mut bool,
) -> FlitoStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        let w = save_cache(&t.inner, &path_arg(path)?)?;
        if let Some(slot) = written.as_mut() {
            *slot = w;
        }
        Ok(())
    })
}

/// # Safety
/// `tensor` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_free(tensor: *mut FlitoTensor) {
    if !tensor.is_null() {
        drop(Box::from_raw(tensor));
    }
}

/// Order and largest index of a tensor.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_shape(
    tensor: *const FlitoTensor,
    order: *mut usize,
    max_index: *mut usize,
) -> FlitoStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        *out(order, "order")? = t.inner.order();
        *out(max_index, "max_index")? = t.inner.max_index();
        Ok(())
    })
}

/// Entry `Cbar_{j_k ... j_1}` with `indices` outermost first, as a double.
///
/// # Safety
/// `indices` must hold `len` values and `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_get(
    tensor: *const FlitoTensor,
    indices: *const usize,
    len: usize,
    value: *mut f64,
) -> FlitoStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        let idx = slice(indices, len, "indices")?;
        *out(value, "value")? = t.inner.get_f64(idx)?;
        Ok(())
    })
}

/// Same entry as an exact `numerator/denominator` string. Writes at most `cap`
/// bytes including the NUL; `needed` receives the full length including the NUL.
///
/// # Safety
/// `buf` must hold `cap` bytes (may be null when `cap` is 0); `needed` must be valid.
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_get_exact(
    tensor: *const FlitoTensor,
    indices: *const usize,
    len: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> FlitoStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        let idx = slice(indices, len, "indices")?;
        let v = t.inner.get(idx)?;
        let text = format!("{}/{}", v.numer(), v.denom());
        copy_string(&text, buf, cap, needed)
    })
}

/// SHA-256 of the cache rendering, as lowercase hex (64 characters plus NUL).
///
/// # Safety
/// As for [`flito_tensor_get_exact`].
#[no_mangle]
pub unsafe extern "C" fn flito_tensor_checksum(
    tensor: *const FlitoTensor,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> FlitoStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        copy_string(&file_checksum(&t.inner), buf, cap, needed)
    })
}

unsafe fn copy_string(text: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Failure> {
    let bytes = text.as_bytes();
    *out(needed, "needed")? = bytes.len() + 1;
    if cap == 0 {
        return Ok(());
    }
    let dst = slice_mut(buf, cap, "buf")?;
    if cap < bytes.len() + 1 {
        return Err(Failure::Buffer {
            needed: bytes.len() + 1,
            cap,
        });
    }
    for (d, s) in dst.iter_mut().zip(bytes) {
        *d = *s as c_char;
    }
    dst[bytes.len()] = 0;
    Ok(())
}

/// Mean-square truncation error of the double integral on distinct components.
///
/// # Safety
/// `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn flito_pairwise_residual(q: usize, step: f64, value: *mut f64) -> FlitoStatus {
    guard(|| {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")).into());
        }
        *out(value, "value")? = pairwise_residual(q, step);
        Ok(())
    })
}

/// Mean-square truncation error of the triple integral on distinct components.
///
/// # Safety
/// `tensor` must be an order-3 tensor from this library; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn flito_triple_residual(
    tensor: *const FlitoTensor,
    q1: usize,
    step: f64,
    value: *mut f64,
) -> FlitoStatus {
    guard(|| {
        let t = deref(tensor, "tensor")?;
        *out(value, "value")? = triple_residual(q1, step, &t.inner)?;
        Ok(())
    })
}

/// Smallest truncation whose residual is at most `step^4`.
///
/// # Safety
/// `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn flito_minimal_q(
    step: f64,
    kind: FlitoResidualKind,
    result: *mut FlitoMinimalQ,
) -> FlitoStatus {
    guard(|| {
        let kind = match kind {
            FlitoResidualKind::Pairwise => ResidualKind::Pairwise,
            FlitoResidualKind::Triple => ResidualKind::Triple,
        };
        let m = minimal_q(step, kind, DEFAULT_SEARCH_CAP)?;
        *out(result, "result")? = FlitoMinimalQ {
            q: m.q,
            residual: m.residual,
            threshold: m.threshold,
            boundary: m.boundary,
        };
        Ok(())
    })
}

/// Defaults of the built-in model.
#[no_mangle]
pub extern "C" fn flito_model_params_default() -> FlitoModelParams {
    let d = DiagnosticParams::default();
    let (sigma, gain) = match d.noise {
        Noise::Diagonal { sigma, gain } => (sigma, gain),
        _ => (1.0, 0.5),
    };
    let kappa = match d.drift {
        Drift::Sine(k) => k,
        _ => 0.0,
    };
    FlitoModelParams {
        n_h: d.n_h,
        nu: d.nu,
        kappa,
        noise: FlitoNoise::Diagonal,
        sigma,
        gain,
        mixing_seed: 3,
        max_components: d.max_components,
    }
}

/// # Safety
/// `params` and `out_model` must be valid; release with [`flito_model_free`].
#[no_mangle]
pub unsafe extern "C" fn flito_model_new(params: *const FlitoModelParams, out_model: *mut *mut FlitoModel) -> FlitoStatus {
    guard(|| {
        let p = *deref(params, "params")?;
        let slot = out(out_model, "out_model")?;
        let noise = match p.noise {
            FlitoNoise::Zero => Noise::Zero,
            FlitoNoise::Diagonal => Noise::Diagonal {
                sigma: p.sigma,
                gain: p.gain,
            },
            FlitoNoise::Mixing => Noise::Mixing {
                sigma: p.sigma,
                gain: p.gain,
                seed: p.mixing_seed,
            },
        };
        let inner = SpectralModel::diagnostic(DiagnosticParams {
            n_h: p.n_h,
            nu: p.nu,
            drift: if p.kappa == 0.0 { Drift::Zero } else { Drift::Sine(p.kappa) },
            noise,
            max_components: p.max_components,
        })?;
        *slot = Box::into_raw(Box::new(FlitoModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn flito_model_free(model: *mut FlitoModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Dimension `N_H` of the model state.
///
/// # Safety
/// `model` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn flito_model_dim(model: *const FlitoModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

fn scheme_of(s: FlitoScheme) -> Scheme {
    match s {
        FlitoScheme::Milstein => Scheme::Milstein,
        FlitoScheme::WagnerPlaten => Scheme::wagner_platen(),
    }
}

/// Endpoint after `n_steps` steps of path `path` under `seed`, written to
/// `endpoint[0..dim]`.
///
/// # Safety
/// `model` must come from this library; `endpoint` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn flito_simulate_endpoint(
    model: *const FlitoModel,
    scheme: FlitoScheme,
    m: usize,
    q: usize,
    q1: usize,
    step: f64,
    n_steps: usize,
    seed: u64,
    path: u64,
    endpoint: *mut f64,
    len: usize,
) -> FlitoStatus {
    guard(|| {
        let model = &deref(model, "model")?.inner;
        let dst = slice_mut(endpoint, len, "endpoint")?;
        if len != model.dim() {
            return Err(Error::Dimension {
                expected: model.dim(),
                found: len,
            }
            .into());
        }
        let trunc = TruncationParams::new(m, q, q1, 0.5)?;
        let ctx = StepContext::new(model, scheme_of(scheme), step, trunc, None)?;
        let tr = simulate_path(model, &ctx, n_steps, seed, path)?;
        dst.copy_from_slice(tr.endpoint());
        Ok(())
    })
}

/// Coupled strong-error study: `rms[i]` for `steps[i]` against a run at
/// `step_ref`, and the log-log slope.
///
/// # Safety
/// `steps` and `rms` must hold `n_steps` doubles; `slope` must be valid.
#[no_mangle]
pub unsafe extern "C" fn flito_strong_error(
    model: *const FlitoModel,
    scheme: FlitoScheme,
    m: usize,
    q: usize,
    q1: usize,
    steps: *const f64,
    n_steps: usize,
    step_ref: f64,
    horizon: f64,
    paths: usize,
    seed: u64,
    rms: *mut f64,
    slope: *mut f64,
) -> FlitoStatus {
    guard(|| {
        let model = &deref(model, "model")?.inner;
        let steps = slice(steps, n_steps, "steps")?;
        let rms = slice_mut(rms, n_steps, "rms")?;
        let slope = out(slope, "slope")?;
        let trunc = TruncationParams::new(m, q, q1, 0.5)?;
        let table = strong_error_estimate(
            model,
            &ConvergenceSetup {
                scheme: scheme_of(scheme),
                trunc,
                ref_trunc: trunc,
                steps: steps.to_vec(),
                step_ref,
                horizon,
                paths,
                seed,
            },
        )?;
        for (dst, row) in rms.iter_mut().zip(&table.rows) {
            *dst = row.rms;
        }
        *slope = table.slope;
        Ok(())
    })
}
