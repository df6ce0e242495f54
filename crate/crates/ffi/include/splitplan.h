#ifndef SPLITPLAN_H
#define SPLITPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SplitplanStatus {
  SPLITPLAN_STATUS_OK = 0,
  SPLITPLAN_STATUS_NULL_ARGUMENT = 1,
  SPLITPLAN_STATUS_INVALID_INPUT = 2,
  SPLITPLAN_STATUS_IO = 3,
  SPLITPLAN_STATUS_PARSE = 4,
  SPLITPLAN_STATUS_INTERNAL = 5,
  SPLITPLAN_STATUS_PANIC = 6,
} SplitplanStatus;

/**
 * Plan handle: best cuts, allocation and the full search table.
 */
typedef struct SplitplanPlan SplitplanPlan;

/**
 * Layer profile handle.
 */
typedef struct SplitplanProfile SplitplanProfile;

/**
 * Scenario handle.
 */
typedef struct SplitplanScenario SplitplanScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *splitplan_last_error(void);

/**
 * Bundled ResNet-18 block-level profile.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SplitplanStatus splitplan_profile_resnet18(struct SplitplanProfile **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SplitplanStatus splitplan_profile_load(const char *path, struct SplitplanProfile **out);

/**
 * Number of layers, or 0 for a NULL handle.
 *
 * # Safety
 * `profile` must be NULL or a live profile handle.
 */
size_t splitplan_profile_layer_count(const struct SplitplanProfile *profile);

/**
 * # Safety
 * `profile` must be NULL or a handle from this library not yet freed.
 */
void splitplan_profile_free(struct SplitplanProfile *profile);

/**
 * Seeded random scenario with `n_clients` clients sharing `profile`.
 *
 * # Safety
 * `profile` must be a live profile handle; `out` must be writable.
 */
enum SplitplanStatus splitplan_scenario_sample(size_t n_clients,
                                               double capacity_hz,
                                               const struct SplitplanProfile *profile,
                                               uint64_t seed,
                                               struct SplitplanScenario **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SplitplanStatus splitplan_scenario_load(const char *path, struct SplitplanScenario **out);

/**
 * # Safety
 * `scenario` must be live; `path` must be a NUL-terminated string.
 */
enum SplitplanStatus splitplan_scenario_save(const struct SplitplanScenario *scenario,
                                             const char *path);

/**
 * # Safety
 * `scenario` must be NULL or live.
 */
size_t splitplan_scenario_client_count(const struct SplitplanScenario *scenario);

/**
 * Changes the server budget in place.
 *
 * # Safety
 * `scenario` must be a live, exclusively accessed handle.
 */
enum SplitplanStatus splitplan_scenario_set_capacity(struct SplitplanScenario *scenario,
                                                     double capacity_hz);

/**
 * # Safety
 * `scenario` must be NULL or a handle from this library not yet freed.
 */
void splitplan_scenario_free(struct SplitplanScenario *scenario);

/**
 * Optimal cut pair with the optimal server allocation.
 *
 * # Safety
 * `scenario` must be live; `out` must be writable.
 */
enum SplitplanStatus splitplan_solve(const struct SplitplanScenario *scenario,
                                     struct SplitplanPlan **out);

/**
 * Optimal cut pair with the server budget split evenly.
 *
 * # Safety
 * `scenario` must be live; `out` must be writable.
 */
enum SplitplanStatus splitplan_benchmark_even_optimal(const struct SplitplanScenario *scenario,
                                                      struct SplitplanPlan **out);

/**
 * Runner-up cut pair with the server budget split evenly.
 *
 * # Safety
 * `scenario` must be live; `out` must be writable.
 */
enum SplitplanStatus splitplan_benchmark_even_suboptimal(const struct SplitplanScenario *scenario,
                                                         struct SplitplanPlan **out);

/**
 * # Safety
 * `plan` must be live; `out` must be writable.
 */
enum SplitplanStatus splitplan_plan_round_latency(const struct SplitplanPlan *plan, double *out);

/**
 * Writes the 1-based cut layers of the plan.
 *
 * # Safety
 * `plan` must be live; both outputs must be writable.
 */
enum SplitplanStatus splitplan_plan_cuts(const struct SplitplanPlan *plan,
                                         size_t *first_cut,
                                         size_t *second_cut);

/**
 * Copies up to `capacity` per-client shares into `buffer` and stores the
 * number of clients in `needed`. Pass a NULL buffer to query the length.
 *
 * # Safety
 * `plan` must be live; `buffer` must be NULL or point to `capacity`
 * writable doubles; `needed` must be writable.
 */
enum SplitplanStatus splitplan_plan_shares(const struct SplitplanPlan *plan,
                                           double *buffer,
                                           size_t capacity,
                                           size_t *needed);

/**
 * Serializes the plan to JSON. Release the string with [`splitplan_string_free`].
 *
 * # Safety
 * `plan` must be live; `out` must be writable.
 */
enum SplitplanStatus splitplan_plan_to_json(const struct SplitplanPlan *plan, char **out);

/**
 * # Safety
 * `plan` must be NULL or a handle from this library not yet freed.
 */
void splitplan_plan_free(struct SplitplanPlan *plan);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void splitplan_string_free(char *s);

/**
 * Simulates one round of `plan` on `scenario` and writes the makespan.
 *
 * # Safety
 * `scenario` and `plan` must be live; `out` must be writable.
 */
enum SplitplanStatus splitplan_simulate_makespan(const struct SplitplanScenario *scenario,
                                                 const struct SplitplanPlan *plan,
                                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITPLAN_H */
