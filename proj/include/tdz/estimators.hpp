#pragma once

// Monte Carlo estimates of the decay quantities of bond percolation on
// T_d □ Z: two-point functions, the rates alpha and beta, the layer sums I_n
// with their rate eta, and the level-weighted sums J_m.
//
// Every estimate is computed on a finite region and is therefore a lower
// bound for the infinite-graph quantity; truncation diagnostics are reported
// alongside. Trials are grouped into contiguous batches for interval
// estimates, and batch sums are reduced in trial order so that the result
// does not depend on the worker count.

#include <cstdint>
#include <string>
#include <vector>

#include "tdz/lattice.hpp"
#include "tdz/percolation.hpp"

namespace tdz {

inline constexpr double kZ95 = 1.959963984540054;

struct Estimate {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    // Independent draws behind the interval. Equal to trials for a single
    // target. A sphere-averaged target contributes |S(n)| correlated trials
    // per field but only one independent draw.
    std::uint64_t samples = 0;
};

// Wilson score interval for hits / trials, sized for `samples` independent
// draws (0 means trials). Any [0,1]-valued draw with mean mu has variance at
// most mu (1 - mu), so using the field count keeps the interval conservative
// for averaged targets.
Estimate wilson(std::uint64_t hits, std::uint64_t trials, std::uint64_t samples = 0);

// Mean with a 95% batch-means interval, for sums that are not probabilities.
struct SumEstimate {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t trials = 0;
};

enum class Quantity { TauHorizontal, TauFiber, TauVertical };
const char* quantity_name(Quantity q);

struct SeriesPoint {
    int index = 0;
    Estimate estimate;
    std::string region;
    bool censored = false;  // fewer hits than SamplingConfig::min_hits
};

struct DecaySeries {
    Quantity quantity = Quantity::TauFiber;
    double p = 0.0;
    std::vector<SeriesPoint> points;  // strictly increasing index
};

struct RateEstimate {
    double sup_root = 0.0;   // max over the series of mean^{1/n}
    double slope_fit = 0.0;  // exp of the least-squares slope of log mean
    double band_low = 0.0;   // max over n of ci_low^{1/n}
    double band_high = 0.0;  // max over n of ci_high^{1/n}
    double slope_low = 0.0;  // 95% jackknife interval of slope_fit
    double slope_high = 0.0;
    int fit_from = 0;
    int fit_to = 0;
    bool capped = false;
    bool stabilized = true;
    std::string region;
    std::string method_note;
    std::vector<std::string> warnings;
    DecaySeries series;
};

struct SamplingConfig {
    std::uint64_t trials = 2000;
    // Trials are doubled up to this cap while a fitted point has fewer than
    // min_hits hits. 0 disables the extension.
    std::uint64_t max_trials = 0;
    std::uint64_t seed = 1;
    int workers = 0;
    int batches = 32;
    std::uint64_t min_hits = 100;
    std::uint64_t site_budget = kDefaultSiteBudget;
};

// P^{region}(o <-> target) for one fixed site, one field per trial.
Estimate estimate_tau_site(const Lattice& lat, const SiteCoord& target, double p, const RegionShape& region,
                           const SamplingConfig& cfg);
// P^{region}(o <-> (v_n, 0)) with v_n the n-th vertex of the canonical ray.
Estimate estimate_tau(const Lattice& lat, int n, double p, const RegionShape& region, const SamplingConfig& cfg);
// Same on ProductBall(k); k < n is an impossible event and raises ConfigError.
Estimate estimate_tau(const Lattice& lat, int n, double p, int ball_radius, const SamplingConfig& cfg);
// P^{region}(o <-> pi^{-1}(v_n)).
Estimate estimate_tau_fiber(const Lattice& lat, int n, double p, const RegionShape& region, const SamplingConfig& cfg);

// Sphere-averaged series. The regions used here are invariant under tree
// automorphisms fixing the origin, so every x in S(n) has the same
// connection probability and each field yields |S(n)| correlated trials.
enum class SphereTarget {
    Fiber,  // o <-> pi^{-1}(x)
    Site    // o <-> (x, layer)
};

struct SphereSeriesSpec {
    SphereTarget target = SphereTarget::Fiber;
    int layer = 0;  // for Site targets
    int n_max = 12;
};

// One minimax invasion per field serves every p in ps (coupled fields), so
// the returned means are nondecreasing in p index by index.
std::vector<DecaySeries> sphere_series(const Lattice& lat, const std::vector<double>& ps, const SphereSeriesSpec& spec,
                                       const RegionShape& region, const SamplingConfig& cfg);

struct AlphaConfig {
    int n_max = 12;
    int fit_from = 0;  // 0 means n_max / 2
    SphereTarget target = SphereTarget::Fiber;
    // Nested regions tried in order until every mean moves by less than
    // eps_stab. Empty means default_alpha_schedule(n_max).
    std::vector<RegionShape> schedule;
    double eps_stab = 1e-3;
    SamplingConfig sampling;
};

// Strips B_T(n_max + 2) x [-m, m] for m = 2, 4, 8, 16.
std::vector<RegionShape> default_alpha_schedule(int n_max);

RateEstimate estimate_alpha(const Lattice& lat, double p, const AlphaConfig& cfg);
// Coupled estimates over a grid; one stabilization decision for the grid.
std::vector<RateEstimate> estimate_alpha_grid(const Lattice& lat, const std::vector<double>& ps,
                                              const AlphaConfig& cfg);

struct BetaConfig {
    int m_max = 12;
    int fit_from = 0;  // 0 means m_max / 2
    // Strips whose half width covers m_max; empty means
    // default_beta_schedule(m_max).
    std::vector<RegionShape> schedule;
    double eps_stab = 1e-3;
    SamplingConfig sampling;
};

// Strips B_T(R) x [-(m_max + 2), m_max + 2] for R = 1, 2, 4, 8.
std::vector<RegionShape> default_beta_schedule(int m_max);

// Rate of P(o <-> (o, m)); targets (o, m) and (o, -m) are pooled.
RateEstimate estimate_beta(const Lattice& lat, double p, const BetaConfig& cfg);

struct InResult {
    int n = 0;
    int k_cut = 0;
    SumEstimate value;                // I_n^{(k_cut)}
    std::vector<double> truncations;  // I_n^{(k)} means for k = 0..k_cut
    double tail_bound = 0.0;          // 2 beta^{k_cut+1} / (1 - beta)
    double beta_upper = 0.0;
    std::string region;
};

// Smallest K with 2 beta^{K+1} / (1 - beta) < eps_tail.
int choose_k_cut(double beta_upper, double eps_tail);

// I_n^{(k_cut)}(p) = sum_{|k| <= k_cut} tau(o, (n, k)) for n = 0..n_max,
// sphere-averaged. beta_upper >= 1 raises DomainError.
std::vector<InResult> estimate_I_series(const Lattice& lat, double p, int n_max, int k_cut, const RegionShape& region,
                                        double beta_upper, const SamplingConfig& cfg);
InResult estimate_I_n(const Lattice& lat, int n, double p, int k_cut, const RegionShape& region, double beta_upper,
                      const SamplingConfig& cfg);

struct EtaEstimate {
    double inf_root = 0.0;  // min over n of I_n^{1/n}
    double slope_fit = 0.0;
    double slope_low = 0.0;
    double slope_high = 0.0;
    int fit_from = 0;
    int fit_to = 0;
    std::vector<InResult> series;
    std::vector<std::string> warnings;
};

EtaEstimate estimate_eta(const Lattice& lat, double p, int n_max, int fit_from, int k_cut, const RegionShape& region,
                         double beta_upper, const SamplingConfig& cfg);

enum class JEstimator {
    SphereAveraged,  // sum_n (hits at depth n / |S(n)|) a_n(z)
    LevelWeighted    // sum over cluster sites of z^{L(x)}, relative to a chosen ray
};

struct JConfig {
    double z = 1.0;
    int n_cut = 12;
    int m_max = 4;
    RegionShape region = RegionShape::strip(14, 8);
    double alpha_upper = 0.0;
    // Refuse z outside (alpha_upper, 1 / (alpha_upper b)). When false the
    // finite sum is still returned but without a tail bound (infinity).
    bool require_window = true;
    JEstimator estimator = JEstimator::SphereAveraged;
    std::uint32_t ray = 0;
    SamplingConfig sampling;
};

struct JResult {
    int m = 0;
    double z = 0.0;
    int n_cut = 0;
    SumEstimate value;
    double tail_bound = 0.0;
    bool window_ok = false;
    std::string region;
};

// True iff alpha_upper < z < 1 / (alpha_upper b).
bool j_window_contains(double alpha_upper, double z, int b);

// J_m(p, z) truncated at depth n_cut for m = 0..m_max. Layers m and -m are
// pooled for m >= 1.
std::vector<JResult> estimate_J_series(const Lattice& lat, double p, const JConfig& cfg);
JResult estimate_J(const Lattice& lat, int m, double p, const JConfig& cfg);

// exp of the least-squares slope of log J_m over m = 1..m_max; a diagnostic.
double phi_slope(const std::vector<JResult>& series);

struct SchonmannRow {
    double p = 0.0;
    RateEstimate alpha;
    double bound = 0.0;  // 1 / sqrt(d - 1)
    bool below = false;  // slope interval entirely below the bound
    bool crosses = false;
};

std::vector<SchonmannRow> alpha_schonmann_check(const Lattice& lat, const std::vector<double>& ps,
                                                const AlphaConfig& cfg);

}  // namespace tdz
