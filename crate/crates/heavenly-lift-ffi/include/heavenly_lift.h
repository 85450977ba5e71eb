#ifndef HEAVENLY_LIFT_H
#define HEAVENLY_LIFT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define HL_FAMILY_SOL1 0

#define HL_FAMILY_SOL2 1

#define HL_FAMILY_SOL3 2

#define HL_FAMILY_SPECIAL1 3

#define HL_FAMILY_SPECIAL2 4

#define HL_COMMAND_VERIFY 0

#define HL_COMMAND_CURVATURE 1

#define HL_COMMAND_NONINV 2

typedef enum HlStatus {
  HL_STATUS_OK = 0,
  HL_STATUS_NULL_POINTER = 1,
  HL_STATUS_INVALID_ARGUMENT = 2,
  HL_STATUS_CONFIG = 3,
  HL_STATUS_DOMAIN = 4,
  HL_STATUS_NO_CONVERGENCE = 5,
  HL_STATUS_SINGULAR = 6,
  HL_STATUS_INSUFFICIENT_SAMPLING = 7,
  HL_STATUS_NUMERIC = 8,
  HL_STATUS_PANIC = 9,
} HlStatus;

// Opaque result of the non-invariance classification.
typedef struct HlClassification HlClassification;

// Opaque solution specification.
typedef struct HlSpec HlSpec;

// Residuals at one point; NaN where a check does not apply to the family.
typedef struct HlResiduals {
  double leghcma;
  double bf;
  double legrot;
  double backlund;
} HlResiduals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread ("" after a success).
// The pointer stays valid until the next call on the same thread.
const char *hl_last_error(void);

// Library version as a static NUL-terminated string.
const char *hl_version(void);

// Default specification of a family (`HL_FAMILY_*`).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum HlStatus hl_spec_default(uint32_t family, struct HlSpec **out);

// Specification from the `[solution]` section of a TOML run configuration.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` a valid pointer.
enum HlStatus hl_spec_from_toml(const char *toml, struct HlSpec **out);

// # Safety
// `spec` must come from an `hl_spec_*` constructor (or be null) and not be used afterwards.
void hl_spec_free(struct HlSpec *spec);

// ψ at x = (Re q, Im q, Re z, Im z).
//
// # Safety
// `x` must point to 4 doubles, `out` to one.
enum HlStatus hl_psi(const struct HlSpec *spec, const double *x, double *out);

// Relative residuals of the solution's equations at x.
//
// # Safety
// `x` must point to 4 doubles, `out` to one `HlResiduals`.
enum HlStatus hl_residuals(const struct HlSpec *spec, const double *x, struct HlResiduals *out);

// Metric g_{μν} at x, row-major in `out[16]`; `closed_form` ≠ 0 selects the
// family's closed form instead of the metric built from ψ.
//
// # Safety
// `x` must point to 4 doubles, `out` to 16.
enum HlStatus hl_metric(const struct HlSpec *spec,
                        const double *x,
                        int32_t closed_form,
                        double *out);

// max |Ricci| relative to the curvature terms, and max |R_{abcd}|, of the ψ metric at x.
//
// # Safety
// `x` must point to 4 doubles; `ricci_rel` and `riemann_max` to one double each.
enum HlStatus hl_curvature(const struct HlSpec *spec,
                           const double *x,
                           double *ricci_rel,
                           double *riemann_max);

// Non-invariance classification at degrees 4, 6, 8.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum HlStatus hl_classify(const struct HlSpec *spec, struct HlClassification **out);

// 1 if an invariance direction was found, 0 if the solution is noninvariant, −1 on null.
//
// # Safety
// `c` must be a live handle or null.
int32_t hl_classification_invariant(const struct HlClassification *c);

// Number of degrees tested.
//
// # Safety
// `c` must be a live handle or null.
size_t hl_classification_len(const struct HlClassification *c);

// Degree and kernel dimension of the i-th report.
//
// # Safety
// `c` must be a live handle; `degree` and `kernel_dim` valid pointers.
enum HlStatus hl_classification_report(const struct HlClassification *c,
                                       size_t i,
                                       size_t *degree,
                                       size_t *kernel_dim);

// # Safety
// `c` must come from [`hl_classify`] (or be null) and not be used afterwards.
void hl_classification_free(struct HlClassification *c);

// Runs a CLI suite (`HL_COMMAND_*`) on a TOML configuration and returns its
// JSON report in `*json` (free with [`hl_string_free`]) and its exit code in
// `*exit_code` (0 pass, 1 tolerance failure, 3 invariance found).
//
// # Safety
// `toml` must be NUL-terminated; `json` and `exit_code` valid pointers.
enum HlStatus hl_run(uint32_t command, const char *toml, char **json, int32_t *exit_code);

// # Safety
// `s` must come from this library (or be null) and not be used afterwards.
void hl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEAVENLY_LIFT_H */
