#ifndef AFFINE_TRAJ_H
#define AFFINE_TRAJ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum AtStatus {
  AT_STATUS_OK = 0,
  AT_STATUS_NULL_POINTER = 1,
  // Malformed input: files, JSON, parameters, strings that are not UTF-8.
  AT_STATUS_INVALID_INPUT = 2,
  // Too few samples, zero speed, wrong dimension.
  AT_STATUS_INVALID_TRAJECTORY = 3,
  // The requested correction or computation has no solution here.
  AT_STATUS_COMPUTATION_FAILED = 4,
  AT_STATUS_INADMISSIBLE = 5,
  AT_STATUS_CHECK_FAILED = 6,
  AT_STATUS_BUFFER_TOO_SMALL = 7,
  AT_STATUS_PANIC = 8,
} AtStatus;

typedef struct AtCorrection AtCorrection;

typedef struct AtModel AtModel;

typedef struct AtTrajectory AtTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static string.
const char *at_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library on the same thread.
const char *at_last_error_message(void);

// Stable snake-case code of the last failed call on this thread, or NULL.
const char *at_last_error_code(void);

// Trajectory from `n_points` samples of `dim` (2 or 3) coordinates each,
// stored point after point in `coords`, spaced `dt` seconds apart.
//
// # Safety
// `coords` must point to `n_points * dim` doubles; `out` must be writable.
enum AtStatus at_trajectory_new(uint32_t dim,
                                double dt,
                                const double *coords,
                                size_t n_points,
                                struct AtTrajectory **out);

// Read a `t,x,y[,z]` CSV file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum AtStatus at_trajectory_from_csv(const char *path, struct AtTrajectory **out);

// Sample a built-in generator. `params_json` may be NULL for defaults.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum AtStatus at_trajectory_generate(const char *name,
                                     const char *params_json,
                                     double dt,
                                     struct AtTrajectory **out);

// # Safety
// `t` must come from this library and not be used afterwards. NULL is ignored.
void at_trajectory_free(struct AtTrajectory *t);

// Number of samples; 0 for NULL.
//
// # Safety
// `t` must be NULL or a live handle.
size_t at_trajectory_len(const struct AtTrajectory *t);

// 2 or 3; 0 for NULL.
//
// # Safety
// `t` must be NULL or a live handle.
uint32_t at_trajectory_dim(const struct AtTrajectory *t);

// Sample step in seconds; NaN for NULL.
//
// # Safety
// `t` must be NULL or a live handle.
double at_trajectory_dt(const struct AtTrajectory *t);

// Copy the coordinates (`len * dim` doubles, point after point) into
// `buf`. `needed` receives the required count; when `capacity` is smaller
// nothing is copied and `BufferTooSmall` is returned.
//
// # Safety
// `buf` must hold `capacity` doubles; `needed` must be writable or NULL.
enum AtStatus at_trajectory_copy_points(const struct AtTrajectory *t,
                                        double *buf,
                                        size_t capacity,
                                        size_t *needed);

// Write the trajectory as CSV with 12 significant digits.
//
// # Safety
// `t` must be a live handle; `path` a NUL-terminated string.
enum AtStatus at_trajectory_write_csv(const struct AtTrajectory *t, const char *path);

// Model from JSON, e.g. `{"kind":"kinematic_car","wheelbase":2.5}`.
//
// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum AtStatus at_model_from_json(const char *json, struct AtModel **out);

// # Safety
// `m` must come from this library and not be used afterwards. NULL is ignored.
void at_model_free(struct AtModel *m);

// Whether `t` can be followed by the model.
//
// # Safety
// Handles must be live; `admissible` must be writable.
enum AtStatus at_check_admissible(const struct AtModel *m,
                                  const struct AtTrajectory *t,
                                  bool *admissible);

// Recover the commands of `t`, integrate them and report the largest
// position deviation from `t` in metres.
//
// # Safety
// Handles must be live; `deviation` must be writable.
enum AtStatus at_round_trip_error(const struct AtModel *m,
                                  const struct AtTrajectory *t,
                                  double *deviation);

// Move the final position to `(x, y, z)` (`z` ignored in 2D) with the
// deformation family of the model: general planar maps for class I
// models, tangent-preserving maps for class II models, six-parameter maps
// in 3D. `m` may be NULL for planar class II behaviour.
//
// # Safety
// `t` must be live, `m` live or NULL, `out` writable.
enum AtStatus at_correct_position(const struct AtTrajectory *t,
                                  const struct AtModel *m,
                                  double x,
                                  double y,
                                  double z,
                                  struct AtCorrection **out);

// Turn the final heading to `heading` (rad) keeping the final position.
//
// # Safety
// `t` must be live, `out` writable.
enum AtStatus at_correct_orientation(const struct AtTrajectory *t,
                                     double heading,
                                     struct AtCorrection **out);

// Move the final pose to `(x, y, heading)` with three deformations.
//
// # Safety
// `t` must be live, `out` writable.
enum AtStatus at_correct_pose(const struct AtTrajectory *t,
                              double x,
                              double y,
                              double heading,
                              struct AtCorrection **out);

// # Safety
// `c` must come from this library and not be used afterwards. NULL is ignored.
void at_correction_free(struct AtCorrection *c);

// New handle holding a copy of the corrected trajectory.
//
// # Safety
// `c` must be live, `out` writable.
enum AtStatus at_correction_trajectory(const struct AtCorrection *c, struct AtTrajectory **out);

// Final position error (m); NaN for NULL.
//
// # Safety
// `c` must be NULL or a live handle.
double at_correction_residual_position(const struct AtCorrection *c);

// Final heading error (rad); NaN when the correction has no heading target.
//
// # Safety
// `c` must be NULL or a live handle.
double at_correction_residual_orientation(const struct AtCorrection *c);

// Number of deformations applied; 0 for NULL.
//
// # Safety
// `c` must be NULL or a live handle.
size_t at_correction_deformation_count(const struct AtCorrection *c);

// Run a JSON scenario file as the command-line tool does. `out_dir` may be
// NULL to use the scenario's own output directory.
//
// # Safety
// String arguments must be NUL-terminated (or NULL for `out_dir`).
enum AtStatus at_run_scenario(const char *scenario_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AFFINE_TRAJ_H */
