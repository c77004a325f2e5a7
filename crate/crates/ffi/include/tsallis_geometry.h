#ifndef TSALLIS_GEOMETRY_H
#define TSALLIS_GEOMETRY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_NULL_POINTER = 1,
  TG_STATUS_DOMAIN = 2,
  TG_STATUS_RANGE = 3,
  TG_STATUS_SINGULARITY = 4,
  TG_STATUS_DIVISION = 5,
  TG_STATUS_SHAPE = 6,
  TG_STATUS_CAPABILITY = 7,
  TG_STATUS_UNSUPPORTED = 8,
  TG_STATUS_VALIDATION = 9,
  TG_STATUS_NUMERICAL = 10,
  TG_STATUS_PARSE = 11,
  TG_STATUS_IO = 12,
  TG_STATUS_PANIC = 13,
} TgStatus;

// Outcome of a CAT(k) test.
typedef enum TgVerdict {
  TG_VERDICT_PASS = 0,
  TG_VERDICT_FAIL = 1,
} TgVerdict;

// Opaque CAT(k) report.
typedef struct TgCatReport TgCatReport;

// Opaque warped-product metric.
typedef struct TgMetric TgMetric;

// Opaque metric tree.
typedef struct TgTree TgTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a
// success. Valid until the next call into the library on this thread.
const char *tg_last_error_message(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void tg_string_free(char *s);

// `tau_q(x)`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_tau(double q, double x, double *out);

// Inverse of `tau_q`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_tau_inv(double q, double u, double *out);

// Deformed sum `u + v + (1 - q) u v`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_q_add(double q, double u, double v, double *out);

// Deformed product `tau_q(tau_q^{-1}(u) tau_q^{-1}(v))`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_q_mul(double q, double u, double v, double *out);

// Deformed distance `tau_q(d)` for `d >= 0`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_deformed_distance(double q, double d, double *out);

// Tsallis entropy of `len` probabilities.
//
// # Safety
// `probs` must point to `len` readable values and `out` be valid for writes.
enum TgStatus tg_tsallis_entropy(double q, const double *probs, size_t len, double *out);

// q-exponential `[1 + (q - 1) beta0 E]^{-1/(q-1)}`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_q_exponential(double q, double beta0, double energy, double *out);

// Closed-form distance under `dx^2 + e^{-2tx} |dy|^2` between two points of
// dimension `dim`, base coordinate first.
//
// # Safety
// `a` and `b` must point to `dim` readable values and `out` be valid for writes.
enum TgStatus tg_exponential_distance(double t,
                                      const double *a,
                                      const double *b,
                                      size_t dim,
                                      double *out);

// Metric `dx^2 + e^{-2tx} |dy|^2` with an `n`-dimensional fiber.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_metric_exponential(double t, size_t n, struct TgMetric **out);

// Metric induced by `q`: the exponential metric with `t = ln(2 - q)`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_metric_from_q(double q, size_t n, struct TgMetric **out);

// Doubly warped metric with one exponential warp per fiber coordinate.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_metric_double_from_q(double q1, double q2, struct TgMetric **out);

// Release a metric. Null is ignored.
//
// # Safety
// `m` must be null or a metric from this library not yet freed.
void tg_metric_free(struct TgMetric *m);

// Manifold dimension of a metric, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live metric.
size_t tg_metric_dim(const struct TgMetric *m);

// Analytic sectional curvature of the coordinate plane `(i, j)` at base
// coordinate `x`.
//
// # Safety
// `m` must be a live metric and `out` be valid for writes.
enum TgStatus tg_metric_curvature(const struct TgMetric *m,
                                  double x,
                                  size_t i,
                                  size_t j,
                                  double *out);

// Finite-difference sectional curvature of the coordinate plane `(i, j)`
// at the point `at` of dimension `dim`.
//
// # Safety
// `m` must be a live metric, `at` point to `dim` readable values and `out`
// be valid for writes.
enum TgStatus tg_metric_curvature_numeric(const struct TgMetric *m,
                                          const double *at,
                                          size_t dim,
                                          size_t i,
                                          size_t j,
                                          double step,
                                          double *out);

// Geodesic distance by shooting between two points of dimension `dim`.
//
// # Safety
// `m` must be a live metric, `a` and `b` point to `dim` readable values and
// `out` be valid for writes.
enum TgStatus tg_metric_geodesic_distance(const struct TgMetric *m,
                                          const double *a,
                                          const double *b,
                                          size_t dim,
                                          double tol,
                                          double *out);

// Build a metric tree from a nul-terminated JSON adjacency list
// `[[[neighbor, weight], ...], ...]`.
//
// # Safety
// `json` must be a valid nul-terminated string and `out` be valid for writes.
enum TgStatus tg_tree_from_json(const char *json, struct TgTree **out);

// Release a tree. Null is ignored.
//
// # Safety
// `t` must be null or a tree from this library not yet freed.
void tg_tree_free(struct TgTree *t);

// Distance between two vertices of a tree.
//
// # Safety
// `t` must be a live tree and `out` be valid for writes.
enum TgStatus tg_tree_vertex_distance(const struct TgTree *t, size_t u, size_t v, double *out);

// CAT(k) test of the exponential warped product `dx^2 + e^{-2tx} |dy|^2`.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_cat_test_warped(double t,
                                 size_t fiber_dim,
                                 double k,
                                 size_t triangles,
                                 size_t samples_per_side,
                                 uint64_t seed,
                                 double tol,
                                 struct TgCatReport **out);

// CAT(k) test of `R^dim` with the `l^p` norm.
//
// # Safety
// `out` must be valid for writes.
enum TgStatus tg_cat_test_lp(size_t dim,
                             double p,
                             double k,
                             size_t triangles,
                             size_t samples_per_side,
                             uint64_t seed,
                             double tol,
                             struct TgCatReport **out);

// CAT(k) test of a metric tree.
//
// # Safety
// `tree` must be a live tree and `out` be valid for writes.
enum TgStatus tg_cat_test_tree(const struct TgTree *tree,
                               double k,
                               size_t triangles,
                               size_t samples_per_side,
                               uint64_t seed,
                               double tol,
                               struct TgCatReport **out);

// Release a report. Null is ignored.
//
// # Safety
// `r` must be null or a report from this library not yet freed.
void tg_report_free(struct TgCatReport *r);

// Verdict of a report.
//
// # Safety
// `r` must be a live report and `out` be valid for writes.
enum TgStatus tg_report_verdict(const struct TgCatReport *r, enum TgVerdict *out);

// Largest comparison excess `d_X - d_M` seen by a report.
//
// # Safety
// `r` must be a live report and `out` be valid for writes.
enum TgStatus tg_report_worst_margin(const struct TgCatReport *r, double *out);

// Report as JSON. Release the string with [`tg_string_free`].
//
// # Safety
// `r` must be a live report and `out` be valid for writes.
enum TgStatus tg_report_json(const struct TgCatReport *r, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSALLIS_GEOMETRY_H */
