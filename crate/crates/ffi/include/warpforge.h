#ifndef WARPFORGE_H
#define WARPFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define WF_OK 0

// Content failed validation (shapes, formats, schedule order).
#define WF_ERR_VALIDATION 2

// Filesystem failure.
#define WF_ERR_IO 3

// Null pointer, bad string or buffer too small.
#define WF_ERR_ARGUMENT 4

#define WF_ERR_PANIC 5

#define WF_MASK_POINTCLOUD 0

#define WF_MASK_EDIT 1

#define WF_MASK_UNION 2

typedef struct WfBundle WfBundle;

typedef struct WfCompositeSample WfCompositeSample;

typedef struct WfTrainingPair WfTrainingPair;

typedef struct WfTrajectory WfTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static storage.
const char *wf_version(void);

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *wf_last_error_message(void);

void wf_clear_error(void);

int32_t wf_bundle_load(const char *dir, struct WfBundle **out);

// Builds a bundle from arrays; depth is stored as DPT1.
int32_t wf_bundle_from_arrays(uintptr_t n,
                              uint32_t height,
                              uint32_t width,
                              const uint8_t *frames,
                              const float *depths,
                              const double *intrinsics,
                              struct WfBundle **out);

int32_t wf_bundle_store(const struct WfBundle *bundle, const char *dir);

void wf_bundle_free(struct WfBundle *bundle);

// Frame count, height and width.
int32_t wf_bundle_shape(const struct WfBundle *bundle,
                        uintptr_t *n,
                        uint32_t *height,
                        uint32_t *width);

// Row-major 3x3 intrinsics into `out[9]`.
int32_t wf_bundle_intrinsics(const struct WfBundle *bundle, double *out);

int32_t wf_bundle_copy_frames(const struct WfBundle *bundle, uint8_t *out, uintptr_t len);

int32_t wf_bundle_copy_depths(const struct WfBundle *bundle, float *out, uintptr_t len);

int32_t wf_trajectory_parse(const char *source, struct WfTrajectory **out);

int32_t wf_trajectory_load(const char *file, struct WfTrajectory **out);

void wf_trajectory_free(struct WfTrajectory *traj);

int32_t wf_trajectory_max_view_angle(const struct WfTrajectory *traj, double *out_deg);

// World-to-camera poses of `traj` applied to `bundle`, `(N, 4, 4)`.
int32_t wf_trajectory_poses(const struct WfTrajectory *traj,
                            const struct WfBundle *bundle,
                            double *out,
                            uintptr_t len);

// Double reprojection over arrays. Writes the corrupted video
// `(N, H, W, 3)` and inpaint masks `(N, H, W)`; same result as the `pair`
// subcommand for the same inputs.
int32_t wf_double_reproject_arrays(uintptr_t n,
                                   uint32_t height,
                                   uint32_t width,
                                   const uint8_t *frames,
                                   const float *depths,
                                   const double *intrinsics,
                                   const double *poses,
                                   uintptr_t poses_len,
                                   uint8_t splat_radius,
                                   uint8_t *out_corrupted,
                                   uint8_t *out_masks);

int32_t wf_pair_reproject(const struct WfBundle *bundle,
                          const struct WfTrajectory *traj,
                          uint8_t splat_radius,
                          struct WfTrainingPair **out);

int32_t wf_pair_load(const char *dir, struct WfTrainingPair **out);

int32_t wf_pair_store(const struct WfTrainingPair *pair, const char *dir);

void wf_pair_free(struct WfTrainingPair *pair);

uintptr_t wf_pair_frame_count(const struct WfTrainingPair *pair);

int32_t wf_pair_copy_corrupted(const struct WfTrainingPair *pair, uint8_t *out, uintptr_t len);

int32_t wf_pair_copy_masks(const struct WfTrainingPair *pair, uint8_t *out, uintptr_t len);

// Draws a composite sample from a copy of `pair`.
int32_t wf_sample_composite(const struct WfTrainingPair *pair,
                            uint64_t seed,
                            struct WfCompositeSample **out);

// One of the `WF_MASK_*` codes, or -1 for a null handle.
int32_t wf_sample_kind(const struct WfCompositeSample *sample);

int32_t wf_sample_copy_mask(const struct WfCompositeSample *sample, uint8_t *out, uintptr_t len);

int32_t wf_sample_store(const struct WfCompositeSample *sample, const char *dir);

void wf_sample_free(struct WfCompositeSample *sample);

int32_t wf_run_render(const char *bundle_dir,
                      const char *traj_file,
                      uint8_t splat_radius,
                      const char *out_dir);

int32_t wf_run_pair(const char *bundle_dir, const char *traj_file, const char *out_dir);

// `mode` is `pointcloud`, `edit`, `union` or `sample`.
int32_t wf_run_masks(const char *pair_dir, const char *mode, uint64_t seed, const char *out_dir);

int32_t wf_run_plan(double theta_min, double delta, double theta_target, const char *out_file);

// Emits stage `stage` into `out_root/stage_<stage>`. `bundle_dir` may be
// null for stages after 0.
int32_t wf_run_stage(const char *plan_file,
                     uintptr_t stage,
                     const char *bundle_dir,
                     uintptr_t k_trajectories,
                     uint64_t seed,
                     const char *out_root);

// `adapter_ref` may be null when the state is already TRAINED.
int32_t wf_run_ingest(const char *state_file, const char *videos_dir, const char *adapter_ref);

int32_t wf_run_pack(const char *generated_dir,
                    const char *mask_dir,
                    const char *hole_dir,
                    uintptr_t k,
                    const char *out_dir);

int32_t wf_validate(const char *target);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WARPFORGE_H */
