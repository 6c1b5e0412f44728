#ifndef SCOS_H
#define SCOS_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Stable C surface of the clustering library: a session handle carrying
 * the last error message, status codes mirroring the library's error
 * classes, the CLI dispatcher, and an in-memory fit entry point. */

typedef enum scos_status {
  SCOS_OK = 0,
  SCOS_ERR_INVALID_ARGUMENT = 1,
  SCOS_ERR_DIMENSION_MISMATCH = 2,
  SCOS_ERR_LENGTH_MISMATCH = 3,
  SCOS_ERR_RANK_DEFICIENT = 4,
  SCOS_ERR_INFEASIBLE_CONFIG = 5,
  SCOS_ERR_EMPTY_CLUSTER = 6,
  SCOS_ERR_NON_FINITE_VALUE = 7,
  SCOS_ERR_MISSING_GROUND_TRUTH = 8,
  SCOS_ERR_FILE_NOT_FOUND = 9,
  SCOS_ERR_FORMAT = 10,
  SCOS_ERR_SHAPE_MISMATCH = 11,
  SCOS_ERR_IO = 12,
  SCOS_ERR_INTERNAL = 13
} scos_status;

/* Semantic library version. */
const char* scos_version(void);

/* Stable name of a status value ("InvalidArgument", ...). */
const char* scos_status_name(scos_status status);

typedef struct scos_session scos_session;

/* Returns NULL only on allocation failure. Sessions are not thread-safe;
 * create one per thread. */
scos_session* scos_session_new(void);
void scos_session_free(scos_session* session);

/* Message of the last failed call on this session; empty string when the
 * last call succeeded. The pointer stays valid until the next call on the
 * same session. */
const char* scos_last_error(const scos_session* session);

/* Runs one CLI command; argv excludes the program name (argv[0] is the
 * command). Output goes to the process stdout/stderr. Returns the command
 * exit code: 0 success, 1 runtime error, 2 usage error. The error text is
 * also stored on the session. */
int scos_run_command(scos_session* session, int argc, const char* const* argv);

/* Clusters n_views matrices by their column spaces. `views` holds the
 * column-major n_ambient x view_cols[k] blocks concatenated in view order
 * (n_ambient * sum(view_cols) doubles total); each block is reduced to an
 * orthonormal basis of its numerical column space before fitting. `dims`
 * holds the n_clusters subspace dimensions. `config_kv` may pass
 * n_config "key=value" strings using the same schema as CLI config files
 * (for example "solver.seed=7"); NULL with n_config 0 keeps defaults.
 * On success labels_out receives n_views 1-based cluster ids and phi_out
 * (optional, may be NULL) the n_views per-view misfits in [0, 1]. */
scos_status scos_fit(scos_session* session, int64_t n_ambient,
                     int64_t n_views, const int64_t* view_cols,
                     const double* views, int64_t n_clusters,
                     const int64_t* dims, const char* const* config_kv,
                     int64_t n_config, int* labels_out, double* phi_out);

#ifdef __cplusplus
}
#endif

#endif
