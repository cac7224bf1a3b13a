#ifndef DFA_H
#define DFA_H

#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum DfaStatus {
  DFA_STATUS_OK = 0,
  DFA_STATUS_NULL_POINTER = 1,
  DFA_STATUS_INVALID_ARGUMENT = 2,
  DFA_STATUS_NUMERICAL = 3,
  DFA_STATUS_PANIC = 4,
} DfaStatus;

// Synthetic field kinds.
typedef enum DfaSynthKind {
  DFA_SYNTH_KIND_SPLAY = 0,
  DFA_SYNTH_KIND_BEND = 1,
  DFA_SYNTH_KIND_TWIST = 2,
  DFA_SYNTH_KIND_CIRCLE_BEND = 3,
  DFA_SYNTH_KIND_CIRCLE_SPLAY = 4,
  DFA_SYNTH_KIND_HELICAL = 5,
} DfaSynthKind;

// Opaque per-voxel frames.
typedef struct DfaFrameField DfaFrameField;

// Opaque per-voxel peak lists.
typedef struct DfaPeakField DfaPeakField;

// Opaque SH ODF volume.
typedef struct DfaShVolume DfaShVolume;

// Opaque synthetic field.
typedef struct DfaSynthField DfaSynthField;

// Peak detection settings.
typedef struct DfaPeakParams {
  double gfa_threshold;
  double peak_ratio;
  // Zero keeps every peak.
  uintptr_t max_peaks;
} DfaPeakParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next call into the library from the same thread.
const char *dfa_last_error_message(void);

// Number of SH coefficients up to even order `max_order`.
uintptr_t dfa_sh_num_coeffs(uintptr_t max_order);

// OO of a Watson distribution with concentration `kappa > 0`.
//
// # Safety
// `out` must be valid for writes.
enum DfaStatus dfa_oo_watson(double kappa, double *out);

// Dispersion index `(2/π)·atan(1/κ)`.
//
// # Safety
// `out` must be valid for writes.
enum DfaStatus dfa_od_w(double kappa, double *out);

// OO of the ODF of a prolate tensor with eigenvalues `(l1, l2, l2)`.
//
// # Safety
// `out` must be valid for writes.
enum DfaStatus dfa_oo_prolate_tensor(double l1, double l2, double *out);

// Mean of `n` weighted directors (`axes` holds `3n` values). Writes the
// mean vector and its norm.
//
// # Safety
// `axes` must hold `3n` values, `weights` `n` values (or be null for unit
// weights), `out_vector` 3 writable values and `out_norm` one.
enum DfaStatus dfa_mean_director(const double *axes,
                                 const double *weights,
                                 uintptr_t n,
                                 double *out_vector,
                                 double *out_norm);

// SH volume from `coeffs` (`voxels × num_coeffs(max_order)` values).
//
// # Safety
// `dims` and `spacing` must hold 3 values, `coeffs` `len` values and
// `out` must be valid for writes.
enum DfaStatus dfa_sh_volume_new(const uintptr_t *dims,
                                 const double *spacing,
                                 uintptr_t max_order,
                                 const double *coeffs,
                                 uintptr_t len,
                                 struct DfaShVolume **out);

// # Safety
// `v` must come from this library and not be used afterwards.
void dfa_sh_volume_free(struct DfaShVolume *v);

// Default peak settings.
struct DfaPeakParams dfa_peak_params_default(void);

// OO, OD and validity mask along each voxel's principal peak. Each output
// holds one value per voxel.
//
// # Safety
// `sh` must be a live handle, `params` readable, and each output valid for
// `len` writes.
enum DfaStatus dfa_oo_od_maps(const struct DfaShVolume *sh,
                              const struct DfaPeakParams *params,
                              double *oo,
                              double *od,
                              uint8_t *mask,
                              uintptr_t len);

// Peaks of every voxel.
//
// # Safety
// `sh` must be a live handle, `params` readable and `out` writable.
enum DfaStatus dfa_peak_field_from_sh(const struct DfaShVolume *sh,
                                      const struct DfaPeakParams *params,
                                      struct DfaPeakField **out);

// Copies up to `k` peaks per voxel as `(x, y, z, weight)`, zero-padded,
// into `out` (`4k` values per voxel).
//
// # Safety
// `peaks` must be a live handle and `out` valid for `len` writes.
enum DfaStatus dfa_peak_field_copy(const struct DfaPeakField *peaks,
                                   uintptr_t k,
                                   double *out,
                                   uintptr_t len);

// # Safety
// `p` must come from this library and not be used afterwards.
void dfa_peak_field_free(struct DfaPeakField *p);

// Local frames with a Gaussian neighborhood of width `sigma` voxels and
// half-width `radius`.
//
// # Safety
// `peaks` must be a live handle and `out` writable.
enum DfaStatus dfa_frame_field_from_peaks(const struct DfaPeakField *peaks,
                                          double sigma,
                                          uintptr_t radius,
                                          struct DfaFrameField **out);

// Copies `u1, u2, u3` per voxel (9 values, zeros for missing axes).
//
// # Safety
// `frames` must be a live handle and `out` valid for `len` writes.
enum DfaStatus dfa_frame_field_copy(const struct DfaFrameField *frames, double *out, uintptr_t len);

// # Safety
// `f` must come from this library and not be used afterwards.
void dfa_frame_field_free(struct DfaFrameField *f);

// Splay, bend, twist and total distortion (mm⁻¹) with the mask (bit 0
// valid, bit 1 degraded). Each output holds one value per voxel.
// `spacing_normalize` nonzero rescales rotations to a 1 mm step.
//
// # Safety
// `frames` must be a live handle and each output valid for `len` writes.
enum DfaStatus dfa_distortion_maps(const struct DfaFrameField *frames,
                                   int32_t spacing_normalize,
                                   double *splay,
                                   double *bend,
                                   double *twist,
                                   double *total,
                                   uint8_t *mask,
                                   uintptr_t len);

// Synthetic field with default eigenvalues. `angle` is the total angle
// across x (rad/mm for the helical kind); NaN selects the kind's default.
//
// # Safety
// `dims` and `spacing` must hold 3 values and `out` must be writable.
enum DfaStatus dfa_synth_generate(enum DfaSynthKind kind,
                                  const uintptr_t *dims,
                                  const double *spacing,
                                  double angle,
                                  struct DfaSynthField **out);

// The synthetic field's construction-axis peaks as a new handle.
//
// # Safety
// `field` must be a live handle and `out` writable.
enum DfaStatus dfa_synth_peaks(const struct DfaSynthField *field, struct DfaPeakField **out);

// The synthetic field's SH ODF up to `max_order` as a new handle.
//
// # Safety
// `field` must be a live handle and `out` writable.
enum DfaStatus dfa_synth_odf(const struct DfaSynthField *field,
                             uintptr_t max_order,
                             struct DfaShVolume **out);

// Copies the tensors as `Dxx, Dxy, Dxz, Dyy, Dyz, Dzz` per voxel.
//
// # Safety
// `field` must be a live handle and `out` valid for `len` writes.
enum DfaStatus dfa_synth_tensors_copy(const struct DfaSynthField *field,
                                      double *out,
                                      uintptr_t len);

// # Safety
// `f` must come from this library and not be used afterwards.
void dfa_synth_field_free(struct DfaSynthField *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFA_H */
