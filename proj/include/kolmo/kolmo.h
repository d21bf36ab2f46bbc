#ifndef KOLMO_KOLMO_H
#define KOLMO_KOLMO_H

#include <stddef.h>
#include <stdint.h>

#if defined(KOLMO_BUILDING_LIBRARY)
#define KOLMO_API __attribute__((visibility("default")))
#else
#define KOLMO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. CONFIG and NUMERICAL match the CLI exit codes 1 and 2. */
typedef enum {
  KOLMO_OK = 0,
  KOLMO_ERR_CONFIG = 1,
  KOLMO_ERR_NUMERICAL = 2,
  KOLMO_ERR_VERIFY = 3,
  KOLMO_ERR_ARGUMENT = 4,
  KOLMO_ERR_INTERNAL = 5
} kolmo_status;

typedef struct kolmo_model kolmo_model;
typedef struct kolmo_density kolmo_density;
typedef struct kolmo_cauchy kolmo_cauchy;
typedef struct kolmo_result kolmo_result;

/* Message of the last failed call on this thread ("" if none). */
KOLMO_API const char* kolmo_last_error(void);
KOLMO_API const char* kolmo_version(void);

/* Worker threads for parallel loops; 0 restores the default (hardware concurrency). */
KOLMO_API kolmo_status kolmo_set_threads(int threads);

KOLMO_API kolmo_status kolmo_model_load(const char* path, kolmo_model** out);
KOLMO_API kolmo_status kolmo_model_parse(const char* json_text, kolmo_model** out);
KOLMO_API void kolmo_model_free(kolmo_model* m);
KOLMO_API int kolmo_model_dim(const kolmo_model* m);
KOLMO_API int kolmo_model_noise_dim(const kolmo_model* m);

/* Block structure as compact JSON. The string lives until the next call on this thread. */
KOLMO_API kolmo_status kolmo_analyze(const kolmo_model* m, const char** json_out);

/* Gamma^delta(t, x; T, y). x and y have N entries. */
KOLMO_API kolmo_status kolmo_gamma(const kolmo_model* m, double delta, double t, const double* x, double T,
                                   const double* y, double* out);
/* Parametrix Z(t, x; T, y). */
KOLMO_API kolmo_status kolmo_parametrix(const kolmo_model* m, double t, const double* x, double T, const double* y,
                                        double* out);

/* Fundamental solution. The density handle keeps a copy of the model. */
KOLMO_API kolmo_status kolmo_density_new(const kolmo_model* m, kolmo_density** out);
KOLMO_API void kolmo_density_free(kolmo_density* p);
/* grad (d entries) and hess (d*d, row-major) may be NULL. */
KOLMO_API kolmo_status kolmo_density_eval(kolmo_density* p, double t, const double* x, double T, const double* y,
                                          double* value, double* grad, double* hess);
/* Series diagnostics for target (T, y) as JSON; string valid until the next call on this thread. */
KOLMO_API kolmo_status kolmo_density_diagnostics(kolmo_density* p, double T, const double* y, const char** json_out);

/* Cauchy problem: terminal datum g and source f are coefficient-language expressions. */
KOLMO_API kolmo_status kolmo_cauchy_new(const kolmo_density* p, const char* g, const char* f, double T,
                                        double growth_C, kolmo_cauchy** out);
KOLMO_API void kolmo_cauchy_free(kolmo_cauchy* c);
KOLMO_API kolmo_status kolmo_cauchy_solve(kolmo_cauchy* c, double t, const double* x, double* out);

/* Runs a CLI subcommand (analyze, eval-kernel, build-density, solve-cauchy, verify, mc-oracle) with a
   JSON request object. Returns KOLMO_ERR_VERIFY together with a result when a verification check fails. */
KOLMO_API kolmo_status kolmo_run(const kolmo_model* m, const char* subcommand, const char* request_json,
                                 kolmo_result** out);
KOLMO_API void kolmo_result_free(kolmo_result* r);
KOLMO_API size_t kolmo_result_file_count(const kolmo_result* r);
KOLMO_API const char* kolmo_result_file_name(const kolmo_result* r, size_t i);
KOLMO_API const char* kolmo_result_file_data(const kolmo_result* r, size_t i, size_t* size);
KOLMO_API const char* kolmo_result_stdout(const kolmo_result* r);

#ifdef __cplusplus
}
#endif

#endif
