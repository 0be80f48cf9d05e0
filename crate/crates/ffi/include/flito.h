#ifndef FLITO_H
#define FLITO_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FlitoStatus {
  FlitoStatus_Ok = 0,
  FlitoStatus_InvalidArgument = 1,
  FlitoStatus_Shape = 2,
  FlitoStatus_Capacity = 3,
  FlitoStatus_Format = 4,
  FlitoStatus_Config = 5,
  FlitoStatus_Io = 6,
  FlitoStatus_NullPointer = 7,
  FlitoStatus_Panic = 8,
} FlitoStatus;

typedef enum FlitoResidualKind {
  FlitoResidualKind_Pairwise = 0,
  FlitoResidualKind_Triple = 1,
} FlitoResidualKind;

typedef enum FlitoNoise {
  FlitoNoise_Zero = 0,
  FlitoNoise_Diagonal = 1,
  FlitoNoise_Mixing = 2,
} FlitoNoise;

typedef enum FlitoScheme {
  FlitoScheme_Milstein = 0,
  FlitoScheme_WagnerPlaten = 1,
} FlitoScheme;

/**
 * Opaque spectral model.
 */
typedef struct FlitoModel FlitoModel;

/**
 * Opaque coefficient tensor.
 */
typedef struct FlitoTensor FlitoTensor;

/**
 * Result of [`flito_minimal_q`].
 */
typedef struct FlitoMinimalQ {
  uintptr_t q;
  double residual;
  double threshold;
  bool boundary;
} FlitoMinimalQ;

/**
 * Parameters of the built-in stochastic heat equation.
 */
typedef struct FlitoModelParams {
  uintptr_t n_h;
  double nu;
  /**
   * Amplitude of the `kappa sin(y)` drift; 0 disables it.
   */
  double kappa;
  enum FlitoNoise noise;
  double sigma;
  double gain;
  uint64_t mixing_seed;
  uintptr_t max_components;
} FlitoModelParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *flito_last_error(void);

void flito_clear_error(void);

/**
 * Builds the order-`order` tensor for indices `0..=q`.
 *
 * # Safety
 * `out_tensor` must be a valid pointer; the handle is released with [`flito_tensor_free`].
 */
enum FlitoStatus flito_tensor_build(uintptr_t order, uintptr_t q, struct FlitoTensor **out_tensor);

/**
 * Reads a cache file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_tensor` a valid pointer.
 */
enum FlitoStatus flito_tensor_load(const char *path, struct FlitoTensor **out_tensor);

/**
 * Writes a cache file; `written` is false when identical content was already there.
 *
 * # Safety
 * `tensor` must come from this library, `path` must be NUL-terminated, `written` may be null.
 */
enum FlitoStatus flito_tensor_save(const struct FlitoTensor *tensor,
                                   const char *path,
                                   bool *written);

/**
 * # Safety
 * `tensor` must come from this library and not be used afterwards; null is ignored.
 */
void flito_tensor_free(struct FlitoTensor *tensor);

/**
 * Order and largest index of a tensor.
 *
 * # Safety
 * All pointers must be valid.
 */
enum FlitoStatus flito_tensor_shape(const struct FlitoTensor *tensor,
                                    uintptr_t *order,
                                    uintptr_t *max_index);

/**
 * Entry `Cbar_{j_k ... j_1}` with `indices` outermost first, as a double.
 *
 * # Safety
 * `indices` must hold `len` values and `value` must be valid.
 */
enum FlitoStatus flito_tensor_get(const struct FlitoTensor *tensor,
                                  const uintptr_t *indices,
                                  uintptr_t len,
                                  double *value);

/**
 * Same entry as an exact `numerator/denominator` string. Writes at most `cap`
 * bytes including the NUL; `needed` receives the full length including the NUL.
 *
 * # Safety
 * `buf` must hold `cap` bytes (may be null when `cap` is 0); `needed` must be valid.
 */
enum FlitoStatus flito_tensor_get_exact(const struct FlitoTensor *tensor,
                                        const uintptr_t *indices,
                                        uintptr_t len,
                                        char *buf,
                                        uintptr_t cap,
                                        uintptr_t *needed);

/**
 * SHA-256 of the cache rendering, as lowercase hex (64 characters plus NUL).
 *
 * # Safety
 * As for [`flito_tensor_get_exact`].
 */
enum FlitoStatus flito_tensor_checksum(const struct FlitoTensor *tensor,
                                       char *buf,
                                       uintptr_t cap,
                                       uintptr_t *needed);

/**
 * Mean-square truncation error of the double integral on distinct components.
 *
 * # Safety
 * `value` must be valid.
 */
enum FlitoStatus flito_pairwise_residual(uintptr_t q, double step, double *value);

/**
 * Mean-square truncation error of the triple integral on distinct components.
 *
 * # Safety
 * `tensor` must be an order-3 tensor from this library; `value` must be valid.
 */
enum FlitoStatus flito_triple_residual(const struct FlitoTensor *tensor,
                                       uintptr_t q1,
                                       double step,
                                       double *value);

/**
 * Smallest truncation whose residual is at most `step^4`.
 *
 * # Safety
 * `result` must be valid.
 */
enum FlitoStatus flito_minimal_q(double step,
                                 enum FlitoResidualKind kind,
                                 struct FlitoMinimalQ *result);

/**
 * Defaults of the built-in model.
 */
struct FlitoModelParams flito_model_params_default(void);

/**
 * # Safety
 * `params` and `out_model` must be valid; release with [`flito_model_free`].
 */
enum FlitoStatus flito_model_new(const struct FlitoModelParams *params,
                                 struct FlitoModel **out_model);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards; null is ignored.
 */
void flito_model_free(struct FlitoModel *model);

/**
 * Dimension `N_H` of the model state.
 *
 * # Safety
 * `model` must come from this library.
 */
uintptr_t flito_model_dim(const struct FlitoModel *model);

/**
 * Endpoint after `n_steps` steps of path `path` under `seed`, written to
 * `endpoint[0..dim]`.
 *
 * # Safety
 * `model` must come from this library; `endpoint` must hold `len` doubles.
 */
enum FlitoStatus flito_simulate_endpoint(const struct FlitoModel *model,
                                         enum FlitoScheme scheme,
                                         uintptr_t m,
                                         uintptr_t q,
                                         uintptr_t q1,
                                         double step,
                                         uintptr_t n_steps,
                                         uint64_t seed,
                                         uint64_t path,
                                         double *endpoint,
                                         uintptr_t len);

/**
 * Coupled strong-error study: `rms[i]` for `steps[i]` against a run at
 * `step_ref`, and the log-log slope.
 *
 * # Safety
 * `steps` and `rms` must hold `n_steps` doubles; `slope` must be valid.
 */
enum FlitoStatus flito_strong_error(const struct FlitoModel *model,
                                    enum FlitoScheme scheme,
                                    uintptr_t m,
                                    uintptr_t q,
                                    uintptr_t q1,
                                    const double *steps,
                                    uintptr_t n_steps,
                                    double step_ref,
                                    double horizon,
                                    uintptr_t paths,
                                    uint64_t seed,
                                    double *rms,
                                    double *slope);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLITO_H */
