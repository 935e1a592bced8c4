/* geovmf: probabilistic geocoding with von Mises-Fisher mixtures.
 *
 * C interface to the shared library. All functions return a geovmf_status;
 * outputs go through pointers. On failure, geovmf_last_error() returns a
 * thread-local message describing what went wrong. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * geovmf_string_free(). Handles are opaque and released with their _free
 * function.
 */

#ifndef GEOVMF_H
#define GEOVMF_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef GEOVMF_API
#define GEOVMF_API __attribute__((visibility("default")))
#endif

typedef enum geovmf_status {
  GEOVMF_OK = 0,
  GEOVMF_E_ARG = 1,     /* invalid argument or usage */
  GEOVMF_E_DATA = 2,    /* malformed or inconsistent input data */
  GEOVMF_E_IO = 3,      /* filesystem or network failure */
  GEOVMF_E_NUMERIC = 4, /* numerical failure */
} geovmf_status;

GEOVMF_API const char* geovmf_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
GEOVMF_API const char* geovmf_last_error(void);

GEOVMF_API void geovmf_string_free(char* s);

/* ------------------------------------------------------------------ sphere */

/* Great-circle distance in kilometers on the mean-radius sphere. */
GEOVMF_API geovmf_status geovmf_haversine_km(double lat1, double lon1, double lat2, double lon2,
                                             double* out_km);

/* ------------------------------------------------------------------ corpus */

/* Validates a corpus JSONL file, writing the kept records to out_jsonl.
 * lenient != 0 skips malformed lines instead of failing on the first one. */
GEOVMF_API geovmf_status geovmf_validate_corpus(const char* in_jsonl, const char* out_jsonl,
                                                int lenient, uint64_t* out_kept,
                                                uint64_t* out_skipped);

/* Seeded shuffle + contiguous split; floor sizing with the remainder
 * assigned to the test partition. */
GEOVMF_API geovmf_status geovmf_split_corpus(const char* in_jsonl, double f_train, double f_val,
                                             double f_test, uint64_t seed, const char* out_train,
                                             const char* out_val, const char* out_test);

/* Pulls article extracts with coordinates from an HTTP endpoint speaking the
 * article-extract JSON shape (see README). cursor_path may be NULL. */
GEOVMF_API geovmf_status geovmf_fetch_articles(const char* endpoint, uint64_t limit,
                                               double rate_per_sec, const char* cursor_path,
                                               const char* out_jsonl, uint64_t* out_fetched,
                                               uint64_t* out_skipped, uint64_t* out_retries);

/* ---------------------------------------------------------------- training */

typedef struct geovmf_train_options {
  double learning_rate; /* default 5e-5 */
  uint32_t epochs;      /* default 5 */
  uint32_t batch_size;  /* default 32 */
  double beta1, beta2, eps;
  int loss;        /* 0 = mixture NLL (default), 1 = weighted component loss */
  uint64_t seed;   /* default 42 */
  int shuffle;     /* default 1 */
  uint32_t feature_dim; /* default 4096, power of two */
  uint32_t hidden_dim;  /* default 256 */
  uint32_t components;  /* default 5 */
  uint32_t ngram_min, ngram_max; /* defaults 3, 5 */
  int lowercase;        /* default 1 */
  uint64_t hash_seed;   /* default 0 */
} geovmf_train_options;

GEOVMF_API void geovmf_train_options_init(geovmf_train_options* opts);

/* Trains on train_jsonl, reporting per-epoch validation error on val_jsonl
 * (pass NULL or empty to skip validation), and writes the checkpoint to
 * ckpt_out. history_tsv_out is optional: one line per epoch with
 * epoch, mean_loss, val_mean_km, val_median_km. */
GEOVMF_API geovmf_status geovmf_train_file(const char* train_jsonl, const char* val_jsonl,
                                           const geovmf_train_options* opts, const char* ckpt_out,
                                           const char* history_tsv_out);

/* Finite-difference check of the analytic gradients at small dims.
 * loss: 0 = mixture NLL, 1 = weighted component loss, 2 = both. */
GEOVMF_API geovmf_status geovmf_grad_check(uint32_t feature_dim, uint32_t hidden_dim,
                                           uint32_t components, uint32_t n_cases, uint64_t seed,
                                           double tol, int loss, double* out_max_rel_err,
                                           int* out_pass);

/* ------------------------------------------------------------------- model */

typedef struct geovmf_model geovmf_model;
typedef struct geovmf_mixture geovmf_mixture;

GEOVMF_API geovmf_status geovmf_model_load(const char* ckpt_path, geovmf_model** out);
GEOVMF_API void geovmf_model_free(geovmf_model* model);
GEOVMF_API geovmf_status geovmf_model_dims(const geovmf_model* model, uint32_t* feature_dim,
                                           uint32_t* hidden_dim, uint32_t* components);

/* Predicted mixture for one text. */
GEOVMF_API geovmf_status geovmf_model_predict(const geovmf_model* model, const char* text,
                                              geovmf_mixture** out);

/* Batch prediction: corpus JSONL in, mixture predictions JSONL out.
 * point_rule: -1 = none, 0 = highProb, 1 = random, 2 = rho-weighted random;
 * when >= 0 each row also carries a "point" field. */
GEOVMF_API geovmf_status geovmf_predict_file(const geovmf_model* model, const char* in_jsonl,
                                             const char* out_jsonl, int point_rule,
                                             uint64_t seed);

/* ----------------------------------------------------------------- mixture */

/* Builds a mixture from per-component arrays (K entries each). rho must sum
 * to 1 within 1e-9. */
GEOVMF_API geovmf_status geovmf_mixture_create(const double* lat, const double* lon,
                                               const double* kappa, const double* rho, uint32_t k,
                                               geovmf_mixture** out);
GEOVMF_API void geovmf_mixture_free(geovmf_mixture* m);
GEOVMF_API geovmf_status geovmf_mixture_size(const geovmf_mixture* m, uint32_t* k);
GEOVMF_API geovmf_status geovmf_mixture_component(const geovmf_mixture* m, uint32_t k,
                                                  double* lat, double* lon, double* kappa,
                                                  double* rho);

/* Log density at a coordinate (per steradian on the unit sphere). */
GEOVMF_API geovmf_status geovmf_mixture_log_density(const geovmf_mixture* m, double lat,
                                                    double lon, double* out);

/* Collapses the mixture to a point. rule: 0 = highProb, 1 = random,
 * 2 = rho-weighted random. */
GEOVMF_API geovmf_status geovmf_mixture_point(const geovmf_mixture* m, int rule, uint64_t seed,
                                              double* lat, double* lon);

/* n draws from the mixture into caller-allocated lat/lon arrays. */
GEOVMF_API geovmf_status geovmf_mixture_sample(const geovmf_mixture* m, uint64_t n, uint64_t seed,
                                               double* lats, double* lons);

/* GeoJSON FeatureCollection of highest-density contours at the given mass
 * levels (ascending, in (0,1)), refined adaptively from coarse_res_deg to
 * fine_res_deg. with_truth != 0 adds the gold coordinate as a Point feature.
 */
GEOVMF_API geovmf_status geovmf_mixture_contours(const geovmf_mixture* m, const double* levels,
                                                 uint32_t n_levels, double coarse_res_deg,
                                                 double fine_res_deg, int with_truth,
                                                 double truth_lat, double truth_lon,
                                                 char** out_geojson);

/* -------------------------------------------------------------- evaluation */

/* Scores a prediction file against gold coordinates.
 * rule: 0 = highProb, 1 = best, 2 = random. mode: 0 = imputed (missing ids
 * scored at (0,0)), 1 = complete cases. Returns the machine-readable report
 * through out_json and, optionally, an aligned table through out_table. */
GEOVMF_API geovmf_status geovmf_evaluate_files(const char* pred_jsonl, const char* gold_jsonl,
                                               int rule, int mode, uint64_t seed,
                                               uint32_t bootstrap_b, const char* label,
                                               char** out_json, char** out_table);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GEOVMF_H */
