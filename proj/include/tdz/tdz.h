/*
 * C interface to the tdz library: bond percolation on T_d x Z.
 *
 * Every call returns a tdz_status. On failure the message is available
 * from tdz_last_error() on the same thread until the next failing call.
 * Handles are opaque and owned by the caller; release them with the
 * matching *_destroy function. Strings returned through char** are
 * released with tdz_free_string.
 */
#ifndef TDZ_TDZ_H
#define TDZ_TDZ_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(TDZ_BUILDING_LIBRARY)
#define TDZ_API __attribute__((visibility("default")))
#else
#define TDZ_API
#endif

typedef enum tdz_status {
    TDZ_OK = 0,
    TDZ_ERR_CONFIG = 2,
    TDZ_ERR_RESOURCE = 3,
    TDZ_UNDECIDED = 4,
    TDZ_ERR_DOMAIN = 5,
    TDZ_ERR_ENCODING = 6,
    TDZ_ERR_INTERNAL = 9
} tdz_status;

TDZ_API const char* tdz_version(void);
TDZ_API const char* tdz_last_error(void);
TDZ_API void tdz_free_string(char* s);

/* Combinatorics of the tree with branching number b = d - 1. */
TDZ_API tdz_status tdz_sphere_size(int d, int n, uint64_t* out);
TDZ_API tdz_status tdz_stacey_count(int n, int t, int b, uint64_t* out);
TDZ_API tdz_status tdz_an_direct(int n, double z, int b, double* out);
TDZ_API tdz_status tdz_an_closed(int n, double z, int b, double* out);
TDZ_API tdz_status tdz_check_reflection(int n, double z, int b, int* out);

/* Tree vertices and the level function. */
typedef struct tdz_vertex {
    uint32_t depth;
    uint64_t rank;
} tdz_vertex;

TDZ_API tdz_status tdz_vertex_from_branches(int d, const uint32_t* branches, size_t len, tdz_vertex* out);
TDZ_API tdz_status tdz_level(int d, tdz_vertex x, uint32_t ray, int64_t* out);
TDZ_API tdz_status tdz_level_relative(int d, tdz_vertex y, tdz_vertex x, uint32_t ray, int64_t* out);

/* Regions. */
typedef enum tdz_region_kind { TDZ_REGION_BALL = 0, TDZ_REGION_STRIP = 1 } tdz_region_kind;

typedef struct tdz_region_shape {
    tdz_region_kind kind;
    int radius;     /* ball radius, or strip tree radius */
    int half_width; /* strip layer half width */
} tdz_region_shape;

typedef struct tdz_region tdz_region;

TDZ_API tdz_status tdz_region_create(int d, tdz_region_shape shape, tdz_region** out);
TDZ_API tdz_status tdz_region_counts(const tdz_region* region, uint64_t* vertices, uint64_t* edges);
TDZ_API tdz_status tdz_region_describe(const tdz_region* region, char** out);
TDZ_API void tdz_region_destroy(tdz_region* region);

/* Sampling. */
typedef struct tdz_sampling {
    uint64_t trials;
    uint64_t max_trials; /* adaptive cap; 0 disables */
    uint64_t seed;
    int workers; /* 0: TDZ_WORKERS or hardware concurrency */
    int batches;
    uint64_t min_hits;
} tdz_sampling;

TDZ_API void tdz_sampling_default(tdz_sampling* out);

typedef struct tdz_estimate {
    double mean;
    double ci_low;
    double ci_high;
    uint64_t hits;
    uint64_t trials;
    uint64_t samples;
} tdz_estimate;

/* P(o <-> (v_n, 0)) and P(o <-> fiber of v_n), v_n on the canonical ray. */
TDZ_API tdz_status tdz_estimate_tau(int d, int n, double p, tdz_region_shape region, const tdz_sampling* sampling,
                                    tdz_estimate* out);
TDZ_API tdz_status tdz_estimate_tau_fiber(int d, int n, double p, tdz_region_shape region,
                                          const tdz_sampling* sampling, tdz_estimate* out);

/* Rates alpha and beta. */
typedef struct tdz_rate tdz_rate;

typedef struct tdz_rate_summary {
    double p;
    double sup_root;
    double slope_fit;
    double band_low;
    double band_high;
    double slope_low;
    double slope_high;
    int fit_from;
    int fit_to;
    int capped;
    int stabilized;
    size_t points;
} tdz_rate_summary;

typedef struct tdz_series_point {
    int index;
    tdz_estimate estimate;
    int censored;
} tdz_series_point;

typedef struct tdz_alpha_config {
    int n_max;
    int fit_from;     /* 0: n_max / 2 */
    int point_target; /* nonzero: sites (x, 0) instead of fibers */
    const tdz_region_shape* schedule;
    size_t schedule_len; /* 0: default strip ladder */
    double eps_stab;
    tdz_sampling sampling;
} tdz_alpha_config;

typedef struct tdz_beta_config {
    int m_max;
    int fit_from;
    const tdz_region_shape* schedule;
    size_t schedule_len;
    double eps_stab;
    tdz_sampling sampling;
} tdz_beta_config;

TDZ_API void tdz_alpha_config_default(tdz_alpha_config* out);
TDZ_API void tdz_beta_config_default(tdz_beta_config* out);

TDZ_API tdz_status tdz_estimate_alpha(int d, double p, const tdz_alpha_config* cfg, tdz_rate** out);
/* Coupled grid: out receives count handles. */
TDZ_API tdz_status tdz_estimate_alpha_grid(int d, const double* ps, size_t count, const tdz_alpha_config* cfg,
                                           tdz_rate** out);
TDZ_API tdz_status tdz_estimate_beta(int d, double p, const tdz_beta_config* cfg, tdz_rate** out);

TDZ_API tdz_status tdz_rate_summary_get(const tdz_rate* rate, tdz_rate_summary* out);
TDZ_API tdz_status tdz_rate_point(const tdz_rate* rate, size_t i, tdz_series_point* out);
TDZ_API const char* tdz_rate_quantity(const tdz_rate* rate);
TDZ_API const char* tdz_rate_region(const tdz_rate* rate);
TDZ_API const char* tdz_rate_note(const tdz_rate* rate);
TDZ_API size_t tdz_rate_warning_count(const tdz_rate* rate);
TDZ_API const char* tdz_rate_warning(const tdz_rate* rate, size_t i);
TDZ_API void tdz_rate_destroy(tdz_rate* rate);

/* Layer sums I_n and their rate eta. */
typedef struct tdz_sum {
    double mean;
    double ci_low;
    double ci_high;
    uint64_t trials;
} tdz_sum;

typedef struct tdz_in_result {
    int n;
    int k_cut;
    tdz_sum value;
    double tail_bound;
    double beta_upper;
} tdz_in_result;

typedef struct tdz_eta_result {
    double inf_root;
    double slope_fit;
    double slope_low;
    double slope_high;
    int fit_from;
    int fit_to;
} tdz_eta_result;

TDZ_API tdz_status tdz_choose_k_cut(double beta_upper, double eps_tail, int* out);
/* out holds n_max + 1 entries, n = 0..n_max. */
TDZ_API tdz_status tdz_estimate_in_series(int d, double p, int n_max, int k_cut, tdz_region_shape region,
                                          double beta_upper, const tdz_sampling* sampling, tdz_in_result* out);
/* series may be NULL; otherwise it holds n_max + 1 entries. */
TDZ_API tdz_status tdz_estimate_eta(int d, double p, int n_max, int fit_from, int k_cut, tdz_region_shape region,
                                    double beta_upper, const tdz_sampling* sampling, tdz_eta_result* out,
                                    tdz_in_result* series);

/* Level-weighted sums J_m(p, z). */
typedef struct tdz_j_config {
    double z;
    int n_cut;
    int m_max;
    tdz_region_shape region;
    double alpha_upper;
    int require_window;
    int level_weighted; /* nonzero: direct z^{L(x)} weights */
    uint32_t ray;
    tdz_sampling sampling;
} tdz_j_config;

typedef struct tdz_j_result {
    int m;
    double z;
    int n_cut;
    tdz_sum value;
    double tail_bound;
    int window_ok;
} tdz_j_result;

TDZ_API void tdz_j_config_default(tdz_j_config* out);
/* out holds m_max + 1 entries; phi may be NULL. */
TDZ_API tdz_status tdz_estimate_j_series(int d, double p, const tdz_j_config* cfg, tdz_j_result* out, double* phi);

/* Critical probability. */
typedef enum tdz_pc_method { TDZ_PC_ALPHA = 0, TDZ_PC_DIRECT = 1 } tdz_pc_method;

typedef struct tdz_pc_config {
    tdz_pc_method method;
    double tol;
    int max_escalations;
    int max_probes;
    int scan_points;
    tdz_alpha_config alpha; /* alpha method */
    int r_max;              /* direct method; 0: min(40, max depth) */
    int r_ref;              /* direct method; 0: r_max / 2 */
    tdz_sampling direct_sampling;
} tdz_pc_config;

typedef struct tdz_probe {
    double p;
    double value;
    double ci_low;
    double ci_high;
    double reference;
    int verdict;
    uint64_t trials;
    int depth;
    int escalation;
} tdz_probe;

typedef struct tdz_pc tdz_pc;

TDZ_API void tdz_pc_config_default(tdz_pc_config* out);
/* Returns TDZ_UNDECIDED (with a valid handle) when the bracket could not be
 * narrowed to tol. */
TDZ_API tdz_status tdz_estimate_pc(int d, const tdz_pc_config* cfg, tdz_pc** out);
TDZ_API tdz_status tdz_pc_interval(const tdz_pc* pc, double* lo, double* hi, int* decided, double* wall_time);
TDZ_API size_t tdz_pc_probe_count(const tdz_pc* pc);
TDZ_API tdz_status tdz_pc_probe(const tdz_pc* pc, size_t i, tdz_probe* out);
TDZ_API size_t tdz_pc_note_count(const tdz_pc* pc);
TDZ_API const char* tdz_pc_note(const tdz_pc* pc, size_t i);
TDZ_API void tdz_pc_destroy(tdz_pc* pc);

/* Verification suites (combinatorics, lattice, oracle, coupling, all) as a
 * JSON report. Returns TDZ_OK when the suite ran; the verdict is the
 * report's "pass" field. */
TDZ_API tdz_status tdz_verify_suite(const char* suite, uint64_t seed, int workers, char** json);

/* Exact P(o <-> (target, layer)) on a region of at most 24 edges, as JSON
 * with the coefficients and evaluations at ps. */
TDZ_API tdz_status tdz_oracle_exact(int d, tdz_region_shape region, tdz_vertex target, int32_t layer,
                                    const double* ps, size_t count, char** json);

#ifdef __cplusplus
}
#endif

#endif /* TDZ_TDZ_H */
