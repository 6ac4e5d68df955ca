#ifndef STEERING_H
#define STEERING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SteeringStatus {
  STEERING_STATUS_OK = 0,
  STEERING_STATUS_NULL_POINTER = 1,
  STEERING_STATUS_INVALID_ARGUMENT = 2,
  STEERING_STATUS_PARSE = 3,
  STEERING_STATUS_IO = 4,
  /*
   The input is well formed but fails a mathematical precondition.
   */
  STEERING_STATUS_DOMAIN = 5,
  STEERING_STATUS_NUMERICAL = 6,
  STEERING_STATUS_PANIC = 7,
} SteeringStatus;

/*
 Opaque assemblage handle.
 */
typedef struct SteeringAssemblage SteeringAssemblage;

/*
 Opaque realization handle.
 */
typedef struct SteeringRealization SteeringRealization;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Owned by the library.
 */
const char *steering_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *steering_version(void);

/*
 Releases a string returned by this library.
 */
void steering_string_free(char *s);

/*
 Parses assemblage JSON (1-based indices in the file).
 */
enum SteeringStatus steering_assemblage_from_json(const char *json,
                                                  struct SteeringAssemblage **result);

/*
 Random no-signaling assemblage; identical to the library generator for the same seed.
 */
enum SteeringStatus steering_assemblage_random(size_t m,
                                               size_t k,
                                               size_t n,
                                               uint64_t seed,
                                               struct SteeringAssemblage **result);

/*
 Builds an assemblage from `m·k` row-major `n × n` blocks ordered by setting, then outcome.
 */
enum SteeringStatus steering_assemblage_new(size_t m,
                                            size_t k,
                                            size_t n,
                                            const double *re,
                                            const double *im,
                                            struct SteeringAssemblage **result);

void steering_assemblage_free(struct SteeringAssemblage *handle);

enum SteeringStatus steering_assemblage_shape(const struct SteeringAssemblage *handle,
                                              size_t *m,
                                              size_t *k,
                                              size_t *n);

/*
 Copies `σ_{a|x}` into `n·n` row-major buffers.
 */
enum SteeringStatus steering_assemblage_element(const struct SteeringAssemblage *handle,
                                                size_t a,
                                                size_t x,
                                                double *re,
                                                double *im);

/*
 Assemblage JSON; release with [`steering_string_free`].
 */
enum SteeringStatus steering_assemblage_to_json(const struct SteeringAssemblage *handle,
                                                char **result);

/*
 Worst violation of positivity, no-signaling and normalization; `passes` is 1 if all are within `tol`.
 */
enum SteeringStatus steering_assemblage_validate(const struct SteeringAssemblage *handle,
                                                 double tol,
                                                 double *worst,
                                                 int32_t *passes);

/*
 Purification-based realization and its reconstruction error.
 */
enum SteeringStatus steering_realize(const struct SteeringAssemblage *handle,
                                     struct SteeringRealization **result,
                                     double *error);

void steering_realization_free(struct SteeringRealization *handle);

/*
 Untrusted dimension `dA`.
 */
enum SteeringStatus steering_realization_dim(const struct SteeringRealization *handle,
                                             size_t *dim_a);

/*
 Realization JSON; release with [`steering_string_free`].
 */
enum SteeringStatus steering_realization_to_json(const struct SteeringRealization *handle,
                                                 char **result);

/*
 GNS dimension and the worst residual of the commutant construction.
 */
enum SteeringStatus steering_gns_check(const struct SteeringAssemblage *handle,
                                       size_t *gns_dim,
                                       double *worst);

/*
 Moment-hierarchy feasibility at `level`; `feasible` is 1 if the residual is within `tol`.
 */
enum SteeringStatus steering_hierarchy_feasibility(const struct SteeringAssemblage *handle,
                                                   size_t level,
                                                   size_t max_iters,
                                                   double tol,
                                                   double *residual,
                                                   int32_t *feasible);

/*
 `2√(m−1)/m`.
 */
double steering_tensor_bound(size_t m);

/*
 Best see-saw value over `restarts` seeded restarts.
 */
enum SteeringStatus steering_seesaw(size_t m,
                                    size_t dim_a,
                                    size_t dim_b,
                                    size_t restarts,
                                    uint64_t seed,
                                    double *value);

/*
 Mean and maximum of `‖Σ_x u_x‖` over random reflection families.
 */
enum SteeringStatus steering_kesten_estimate(size_t m,
                                             size_t d,
                                             size_t trials,
                                             uint64_t seed,
                                             double *mean,
                                             double *max);

/*
 `Σ_x Tr((σ_{0|x} − σ_{1|x}) u_x)` for a random reflection family.
 */
enum SteeringStatus steering_yanyin_sum(size_t m, size_t d, uint64_t seed, double *value);

/*
 Number of reduced words of length at most `max_len`, saturated to `UINT64_MAX`.
 */
enum SteeringStatus steering_word_count(size_t m, size_t k, size_t max_len, uint64_t *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEERING_H */
