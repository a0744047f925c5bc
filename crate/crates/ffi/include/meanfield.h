#ifndef MEANFIELD_H
#define MEANFIELD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_NULL_POINTER = 1,
  MF_STATUS_INVALID_ARGUMENT = 2,
  MF_STATUS_INVALID_DOMAIN = 3,
  MF_STATUS_OUTSIDE_DOMAIN = 4,
  MF_STATUS_NUMERICAL = 5,
  MF_STATUS_MESH = 6,
  MF_STATUS_PANIC = 7,
} MfStatus;

// A planar domain.
typedef struct MfDomain MfDomain;

// A triangulation of a domain.
typedef struct MfMesh MfMesh;

// Result of a Robin-function supremum search.
typedef struct MfRobinReport MfRobinReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent fallible call on this thread if it failed,
// otherwise null. The pointer stays valid until the next fallible call.
const char *mf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mf_version(void);

// Builds a domain. `kind` is one of `disk`, `ellipse`, `rectangle`, `square`,
// `polygon` (flattened vertex list) or `fourier` (radial coefficients).
//
// # Safety
// `kind` must be a NUL-terminated string, `params` must point to `n_params`
// doubles and `out` must be writable.
enum MfStatus mf_domain_new(const char *kind,
                            const double *params,
                            size_t n_params,
                            double center_x,
                            double center_y,
                            double rotation,
                            struct MfDomain **out);

// # Safety
// `domain` must come from this library and not be used afterwards.
void mf_domain_free(struct MfDomain *domain);

// # Safety
// `domain` must be a live handle and `out` writable.
enum MfStatus mf_domain_area(const struct MfDomain *domain, double *out);

// Copy of `domain` scaled about its center to the given area.
//
// # Safety
// `domain` must be a live handle and `out` writable.
enum MfStatus mf_domain_normalize_area(const struct MfDomain *domain,
                                       double area,
                                       struct MfDomain **out);

// Robin function at an interior point.
//
// # Safety
// `domain` must be a live handle and `out` writable.
enum MfStatus mf_robin(const struct MfDomain *domain, double x, double y, double *out);

// Supremum of the Robin function with default search options.
//
// # Safety
// `domain` must be a live handle and `out` writable.
enum MfStatus mf_robin_sup(const struct MfDomain *domain, struct MfRobinReport **out);

// # Safety
// `report` must be a live handle and the outputs writable.
enum MfStatus mf_robin_report_sup(const struct MfRobinReport *report,
                                  double *gamma_sup,
                                  double *argmax_x,
                                  double *argmax_y);

// Nonzero when the residual and charge-doubling gates passed.
//
// # Safety
// `report` must be a live handle and `out` writable.
enum MfStatus mf_robin_report_gates_passed(const struct MfRobinReport *report, int32_t *out);

// # Safety
// `report` must come from this library and not be used afterwards.
void mf_robin_report_free(struct MfRobinReport *report);

// Quasi-uniform triangulation with maximum edge length `h`.
//
// # Safety
// `domain` must be a live handle and `out` writable.
enum MfStatus mf_triangulate(const struct MfDomain *domain, double h, struct MfMesh **out);

// # Safety
// `mesh` must be a live handle and the outputs writable.
enum MfStatus mf_mesh_counts(const struct MfMesh *mesh, size_t *vertices, size_t *triangles);

// Copies interleaved vertex coordinates `x0, y0, x1, y1, ...` into `xy`,
// which must hold `2 * capacity` doubles.
//
// # Safety
// `mesh` must be a live handle and `xy` must point to `2 * capacity` writable doubles.
enum MfStatus mf_mesh_vertices(const struct MfMesh *mesh, double *xy, size_t capacity);

// # Safety
// `mesh` must come from this library and not be used afterwards.
void mf_mesh_free(struct MfMesh *mesh);

// Upper bound `-1 - 4 pi sup gamma` for the critical infimum; the domain
// must have area pi.
//
// # Safety
// `domain` must be a live handle and `out` writable.
enum MfStatus mf_energy_estimate(const struct MfDomain *domain, double *out);

// Minimal energy of the unit disk at `0 < lambda < 8 pi`.
//
// # Safety
// `out` must be writable.
enum MfStatus mf_disk_energy(double lambda, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEANFIELD_H */
