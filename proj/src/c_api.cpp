#include "tdz/tdz.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdz/combinatorics.hpp"
#include "tdz/error.hpp"
#include "tdz/estimators.hpp"
#include "tdz/inversion.hpp"
#include "tdz/lattice.hpp"
#include "tdz/oracle.hpp"
#include "tdz/verify.hpp"

struct tdz_region {
    tdz::Lattice lat;
    tdz::Region region;
};

struct tdz_rate {
    double p = 0.0;
    std::string quantity;
    tdz::RateEstimate est;
};

struct tdz_pc {
    tdz::PcResult result;
};

namespace {

thread_local std::string g_last_error;

tdz_status fail(tdz_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <typename Fn>
tdz_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const tdz::Error& e) {
        return fail(static_cast<tdz_status>(static_cast<int>(e.kind())), e.what());
    } catch (const std::bad_alloc&) {
        return fail(TDZ_ERR_RESOURCE, "out of memory");
    } catch (const std::exception& e) {
        return fail(TDZ_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(TDZ_ERR_INTERNAL, "unknown failure");
    }
}

#define TDZ_REQUIRE(cond, msg) \
    if (!(cond)) return fail(TDZ_ERR_CONFIG, msg)

tdz::RegionShape to_shape(tdz_region_shape s) {
    switch (s.kind) {
        case TDZ_REGION_BALL: return tdz::RegionShape::ball(s.radius);
        case TDZ_REGION_STRIP: return tdz::RegionShape::strip(s.radius, s.half_width);
    }
    throw tdz::ConfigError("unknown region kind");
}

tdz::SamplingConfig to_sampling(const tdz_sampling* s) {
    tdz::SamplingConfig c;
    if (s == nullptr) return c;
    c.trials = s->trials;
    c.max_trials = s->max_trials;
    c.seed = s->seed;
    c.workers = s->workers;
    c.batches = s->batches;
    c.min_hits = s->min_hits;
    return c;
}

tdz_estimate to_c(const tdz::Estimate& e) { return {e.mean, e.ci_low, e.ci_high, e.hits, e.trials, e.samples}; }
tdz_sum to_c(const tdz::SumEstimate& e) { return {e.mean, e.ci_low, e.ci_high, e.trials}; }

tdz_in_result to_c(const tdz::InResult& r) { return {r.n, r.k_cut, to_c(r.value), r.tail_bound, r.beta_upper}; }

tdz::AlphaConfig to_alpha(const tdz_alpha_config* c) {
    tdz::AlphaConfig a;
    if (c == nullptr) return a;
    a.n_max = c->n_max;
    a.fit_from = c->fit_from;
    a.target = c->point_target ? tdz::SphereTarget::Site : tdz::SphereTarget::Fiber;
    for (std::size_t i = 0; i < c->schedule_len; ++i) a.schedule.push_back(to_shape(c->schedule[i]));
    a.eps_stab = c->eps_stab;
    a.sampling = to_sampling(&c->sampling);
    return a;
}

void default_sampling(tdz_sampling* out) {
    const tdz::SamplingConfig c;
    *out = {c.trials, c.max_trials, c.seed, c.workers, c.batches, c.min_hits};
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p == nullptr) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

}  // namespace

extern "C" {

const char* tdz_version(void) { return "1.0.0"; }
const char* tdz_last_error(void) { return g_last_error.c_str(); }
void tdz_free_string(char* s) { std::free(s); }

tdz_status tdz_sphere_size(int d, int n, uint64_t* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        TDZ_REQUIRE(n >= 0, "n must be nonnegative");
        *out = tdz::Lattice(d).sphere_size(n);
        return TDZ_OK;
    });
}

tdz_status tdz_stacey_count(int n, int t, int b, uint64_t* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        *out = tdz::stacey_count(n, t, b);
        return TDZ_OK;
    });
}

tdz_status tdz_an_direct(int n, double z, int b, double* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        *out = tdz::a_n_direct(n, z, b);
        return TDZ_OK;
    });
}

tdz_status tdz_an_closed(int n, double z, int b, double* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        *out = tdz::a_n_closed(n, z, b);
        return TDZ_OK;
    });
}

tdz_status tdz_check_reflection(int n, double z, int b, int* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        *out = tdz::check_reflection(n, z, b) ? 1 : 0;
        return TDZ_OK;
    });
}

tdz_status tdz_vertex_from_branches(int d, const uint32_t* branches, size_t len, tdz_vertex* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        TDZ_REQUIRE(len == 0 || branches != nullptr, "null branches");
        const tdz::Lattice lat(d);
        const auto v = lat.from_branches(std::span<const std::uint32_t>(branches, len));
        *out = {v.depth, v.rank};
        return TDZ_OK;
    });
}

tdz_status tdz_level(int d, tdz_vertex x, uint32_t ray, int64_t* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        const tdz::TreeVertex v{x.depth, x.rank};
        if (!lat.valid(v)) throw tdz::EncodingError("invalid tree vertex");
        *out = tdz::level(lat, v, ray);
        return TDZ_OK;
    });
}

tdz_status tdz_level_relative(int d, tdz_vertex y, tdz_vertex x, uint32_t ray, int64_t* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        const tdz::TreeVertex vy{y.depth, y.rank}, vx{x.depth, x.rank};
        if (!lat.valid(vy) || !lat.valid(vx)) throw tdz::EncodingError("invalid tree vertex");
        *out = tdz::level_relative(lat, vy, vx, ray);
        return TDZ_OK;
    });
}

tdz_status tdz_region_create(int d, tdz_region_shape shape, tdz_region** out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        auto h = std::unique_ptr<tdz_region>(new tdz_region{lat, tdz::Region(lat, to_shape(shape))});
        *out = h.release();
        return TDZ_OK;
    });
}

tdz_status tdz_region_counts(const tdz_region* region, uint64_t* vertices, uint64_t* edges) {
    return guarded([&] {
        TDZ_REQUIRE(region != nullptr, "null region");
        if (vertices) *vertices = region->region.vertex_count();
        if (edges) *edges = region->region.edge_count();
        return TDZ_OK;
    });
}

tdz_status tdz_region_describe(const tdz_region* region, char** out) {
    return guarded([&] {
        TDZ_REQUIRE(region != nullptr && out != nullptr, "null argument");
        *out = dup_string(region->region.describe());
        return TDZ_OK;
    });
}

void tdz_region_destroy(tdz_region* region) { delete region; }

void tdz_sampling_default(tdz_sampling* out) {
    if (out) default_sampling(out);
}

tdz_status tdz_estimate_tau(int d, int n, double p, tdz_region_shape region, const tdz_sampling* sampling,
                            tdz_estimate* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        *out = to_c(tdz::estimate_tau(lat, n, p, to_shape(region), to_sampling(sampling)));
        return TDZ_OK;
    });
}

tdz_status tdz_estimate_tau_fiber(int d, int n, double p, tdz_region_shape region, const tdz_sampling* sampling,
                                  tdz_estimate* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        *out = to_c(tdz::estimate_tau_fiber(lat, n, p, to_shape(region), to_sampling(sampling)));
        return TDZ_OK;
    });
}

void tdz_alpha_config_default(tdz_alpha_config* out) {
    if (!out) return;
    const tdz::AlphaConfig c;
    out->n_max = c.n_max;
    out->fit_from = c.fit_from;
    out->point_target = 0;
    out->schedule = nullptr;
    out->schedule_len = 0;
    out->eps_stab = c.eps_stab;
    default_sampling(&out->sampling);
}

void tdz_beta_config_default(tdz_beta_config* out) {
    if (!out) return;
    const tdz::BetaConfig c;
    out->m_max = c.m_max;
    out->fit_from = c.fit_from;
    out->schedule = nullptr;
    out->schedule_len = 0;
    out->eps_stab = c.eps_stab;
    default_sampling(&out->sampling);
}

tdz_status tdz_estimate_alpha(int d, double p, const tdz_alpha_config* cfg, tdz_rate** out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        auto h = std::make_unique<tdz_rate>();
        h->p = p;
        h->quantity = "alpha";
        h->est = tdz::estimate_alpha(lat, p, to_alpha(cfg));
        *out = h.release();
        return TDZ_OK;
    });
}

tdz_status tdz_estimate_alpha_grid(int d, const double* ps, size_t count, const tdz_alpha_config* cfg,
                                   tdz_rate** out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        TDZ_REQUIRE(count > 0 && ps != nullptr, "empty p grid");
        const tdz::Lattice lat(d);
        const std::vector<double> grid(ps, ps + count);
        auto rates = tdz::estimate_alpha_grid(lat, grid, to_alpha(cfg));
        std::vector<std::unique_ptr<tdz_rate>> handles;
        for (std::size_t i = 0; i < count; ++i) {
            auto h = std::make_unique<tdz_rate>();
            h->p = grid[i];
            h->quantity = "alpha";
            h->est = std::move(rates[i]);
            handles.push_back(std::move(h));
        }
        for (std::size_t i = 0; i < count; ++i) out[i] = handles[i].release();
        return TDZ_OK;
    });
}

tdz_status tdz_estimate_beta(int d, double p, const tdz_beta_config* cfg, tdz_rate** out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        tdz::BetaConfig b;
        if (cfg) {
            b.m_max = cfg->m_max;
            b.fit_from = cfg->fit_from;
            for (std::size_t i = 0; i < cfg->schedule_len; ++i) b.schedule.push_back(to_shape(cfg->schedule[i]));
            b.eps_stab = cfg->eps_stab;
            b.sampling = to_sampling(&cfg->sampling);
        }
        auto h = std::make_unique<tdz_rate>();
        h->p = p;
        h->quantity = "beta";
        h->est = tdz::estimate_beta(lat, p, b);
        *out = h.release();
        return TDZ_OK;
    });
}

tdz_status tdz_rate_summary_get(const tdz_rate* rate, tdz_rate_summary* out) {
    return guarded([&] {
        TDZ_REQUIRE(rate != nullptr && out != nullptr, "null argument");
        const auto& e = rate->est;
        *out = {rate->p,     e.sup_root, e.slope_fit,  e.band_low,          e.band_high,
                e.slope_low, e.slope_high, e.fit_from, e.fit_to,            e.capped ? 1 : 0,
                e.stabilized ? 1 : 0,      e.series.points.size()};
        return TDZ_OK;
    });
}

tdz_status tdz_rate_point(const tdz_rate* rate, size_t i, tdz_series_point* out) {
    return guarded([&] {
        TDZ_REQUIRE(rate != nullptr && out != nullptr, "null argument");
        TDZ_REQUIRE(i < rate->est.series.points.size(), "point index out of range");
        const auto& pt = rate->est.series.points[i];
        *out = {pt.index, to_c(pt.estimate), pt.censored ? 1 : 0};
        return TDZ_OK;
    });
}

const char* tdz_rate_quantity(const tdz_rate* rate) { return rate ? rate->quantity.c_str() : ""; }
const char* tdz_rate_region(const tdz_rate* rate) { return rate ? rate->est.region.c_str() : ""; }
const char* tdz_rate_note(const tdz_rate* rate) { return rate ? rate->est.method_note.c_str() : ""; }
size_t tdz_rate_warning_count(const tdz_rate* rate) { return rate ? rate->est.warnings.size() : 0; }
const char* tdz_rate_warning(const tdz_rate* rate, size_t i) {
    return rate && i < rate->est.warnings.size() ? rate->est.warnings[i].c_str() : "";
}
void tdz_rate_destroy(tdz_rate* rate) { delete rate; }

tdz_status tdz_choose_k_cut(double beta_upper, double eps_tail, int* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        *out = tdz::choose_k_cut(beta_upper, eps_tail);
        return TDZ_OK;
    });
}

tdz_status tdz_estimate_in_series(int d, double p, int n_max, int k_cut, tdz_region_shape region, double beta_upper,
                                  const tdz_sampling* sampling, tdz_in_result* out) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        const auto s =
            tdz::estimate_I_series(lat, p, n_max, k_cut, to_shape(region), beta_upper, to_sampling(sampling));
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = to_c(s[i]);
        return TDZ_OK;
    });
}

tdz_status tdz_estimate_eta(int d, double p, int n_max, int fit_from, int k_cut, tdz_region_shape region,
                            double beta_upper, const tdz_sampling* sampling, tdz_eta_result* out,
                            tdz_in_result* series) {
    return guarded([&] {
        TDZ_REQUIRE(out != nullptr, "null output");
        const tdz::Lattice lat(d);
        const auto e =
            tdz::estimate_eta(lat, p, n_max, fit_from, k_cut, to_shape(region), beta_upper, to_sampling(sampling));
        *out = {e.inf_root, e.slope_fit, e.slope_low, e.slope_high, e.fit_from, e.fit_to};
        if (series)
            for (std::size_t i = 0; i < e.series.size(); ++i) series[i] = to_c(e.series[i]);
        return TDZ_OK;
    });
}

void tdz_j_config_default(tdz_j_config* out) {
    if (!out) return;
    const tdz::JConfig c;
    out->z = c.z;
    out->n_cut = c.n_cut;
    out->m_max = c.m_max;
    out->region = {TDZ_REGION_STRIP, c.region.radius, c.region.half_width};
    out->alpha_upper = c.alpha_upper;
    out->require_window = c.require_window ? 1 : 0;
    out->level_weighted = 0;
    out->ray = c.ray;
    default_sampling(&out->sampling);
}

tdz_status tdz_estimate_j_series(int d, double p, const tdz_j_config* cfg, tdz_j_result* out, double* phi) {
    return guarded([&] {
        TDZ_REQUIRE(cfg != nullptr && out != nullptr, "null argument");
        const tdz::Lattice lat(d);
        tdz::JConfig c;
        c.z = cfg->z;
        c.n_cut = cfg->n_cut;
        c.m_max = cfg->m_max;
        c.region = to_shape(cfg->region);
        c.alpha_upper = cfg->alpha_upper;
        c.require_window = cfg->require_window != 0;
        c.estimator = cfg->level_weighted ? tdz::JEstimator::LevelWeighted : tdz::JEstimator::SphereAveraged;
        c.ray = cfg->ray;
        c.sampling = to_sampling(&cfg->sampling);
        const auto s = tdz::estimate_J_series(lat, p, c);
        for (std::size_t i = 0; i < s.size(); ++i)
            out[i] = {s[i].m, s[i].z, s[i].n_cut, to_c(s[i].value), s[i].tail_bound, s[i].window_ok ? 1 : 0};
        if (phi) *phi = s.size() >= 3 ? tdz::phi_slope(s) : std::numeric_limits<double>::quiet_NaN();
        return TDZ_OK;
    });
}

void tdz_pc_config_default(tdz_pc_config* out) {
    if (!out) return;
    const tdz::PcAlphaConfig a;
    const tdz::PcDirectConfig dc;
    out->method = TDZ_PC_ALPHA;
    out->tol = a.tol;
    out->max_escalations = a.max_escalations;
    out->max_probes = a.max_probes;
    out->scan_points = a.scan_points;
    tdz_alpha_config_default(&out->alpha);
    out->r_max = dc.r_max;
    out->r_ref = dc.r_ref;
    default_sampling(&out->direct_sampling);
}

tdz_status tdz_estimate_pc(int d, const tdz_pc_config* cfg, tdz_pc** out) {
    return guarded([&] {
        TDZ_REQUIRE(cfg != nullptr && out != nullptr, "null argument");
        const tdz::Lattice lat(d);
        auto h = std::make_unique<tdz_pc>();
        if (cfg->method == TDZ_PC_ALPHA) {
            tdz::PcAlphaConfig c;
            c.tol = cfg->tol;
            c.max_escalations = cfg->max_escalations;
            c.max_probes = cfg->max_probes;
            c.scan_points = cfg->scan_points;
            c.alpha = to_alpha(&cfg->alpha);
            h->result = tdz::estimate_pc_via_alpha(lat, c);
        } else if (cfg->method == TDZ_PC_DIRECT) {
            tdz::PcDirectConfig c;
            c.tol = cfg->tol;
            c.max_escalations = cfg->max_escalations;
            c.max_probes = cfg->max_probes;
            c.scan_points = cfg->scan_points;
            c.r_max = cfg->r_max;
            c.r_ref = cfg->r_ref;
            c.sampling = to_sampling(&cfg->direct_sampling);
            h->result = tdz::estimate_pc_direct(lat, c);
        } else {
            return fail(TDZ_ERR_CONFIG, "unknown p_c method");
        }
        const bool decided = h->result.status == tdz::PcStatus::Decided;
        *out = h.release();
        if (!decided) return fail(TDZ_UNDECIDED, "p_c bracket could not be narrowed to the tolerance");
        return TDZ_OK;
    });
}

tdz_status tdz_pc_interval(const tdz_pc* pc, double* lo, double* hi, int* decided, double* wall_time) {
    return guarded([&] {
        TDZ_REQUIRE(pc != nullptr, "null handle");
        if (lo) *lo = pc->result.lo;
        if (hi) *hi = pc->result.hi;
        if (decided) *decided = pc->result.status == tdz::PcStatus::Decided ? 1 : 0;
        if (wall_time) *wall_time = pc->result.wall_time;
        return TDZ_OK;
    });
}

size_t tdz_pc_probe_count(const tdz_pc* pc) { return pc ? pc->result.probes.size() : 0; }

tdz_status tdz_pc_probe(const tdz_pc* pc, size_t i, tdz_probe* out) {
    return guarded([&] {
        TDZ_REQUIRE(pc != nullptr && out != nullptr, "null argument");
        TDZ_REQUIRE(i < pc->result.probes.size(), "probe index out of range");
        const auto& p = pc->result.probes[i];
        *out = {p.p, p.value, p.ci_low, p.ci_high, p.reference, p.verdict, p.trials, p.depth, p.escalation};
        return TDZ_OK;
    });
}

size_t tdz_pc_note_count(const tdz_pc* pc) { return pc ? pc->result.notes.size() : 0; }
const char* tdz_pc_note(const tdz_pc* pc, size_t i) {
    return pc && i < pc->result.notes.size() ? pc->result.notes[i].c_str() : "";
}
void tdz_pc_destroy(tdz_pc* pc) { delete pc; }

tdz_status tdz_verify_suite(const char* suite, uint64_t seed, int workers, char** json) {
    return guarded([&] {
        TDZ_REQUIRE(suite != nullptr && json != nullptr, "null argument");
        *json = dup_string(tdz::run_suite(suite, seed, workers).dump());
        return TDZ_OK;
    });
}

tdz_status tdz_oracle_exact(int d, tdz_region_shape region, tdz_vertex target, int32_t layer, const double* ps,
                            size_t count, char** json) {
    return guarded([&] {
        TDZ_REQUIRE(json != nullptr, "null output");
        TDZ_REQUIRE(count == 0 || ps != nullptr, "null p grid");
        const tdz::Lattice lat(d);
        const tdz::TreeVertex t{target.depth, target.rank};
        if (!lat.valid(t)) throw tdz::EncodingError("invalid tree vertex");
        tdz::Region r(lat, to_shape(region));
        if (r.edge_count() > static_cast<std::uint64_t>(tdz::kDefaultEnumerationBudget))
            throw tdz::ResourceError("region has " + std::to_string(r.edge_count()) + " edges; enumeration budget is " +
                                     std::to_string(tdz::kDefaultEnumerationBudget));
        r.materialize();
        const tdz::SiteCoord to{t, layer};
        if (!r.contains(to)) throw tdz::ConfigError("target " + lat.format(to) + " lies outside the region");
        const auto poly = tdz::exact_probability(tdz::ConnectionEvent::to_site(tdz::SiteCoord{}, to), r);
        nlohmann::json j;
        j["region"] = r.describe();
        j["edges"] = poly.num_edges;
        j["target"] = lat.format(to);
        j["coefficients"] = poly.coeffs;
        j["polynomial"] = poly.to_string();
        auto evals = nlohmann::json::array();
        for (std::size_t i = 0; i < count; ++i) {
            if (!(ps[i] >= 0.0 && ps[i] <= 1.0)) throw tdz::DomainError("p must lie in [0, 1]");
            evals.push_back({{"p", ps[i]}, {"probability", poly.eval(ps[i])}});
        }
        j["evaluations"] = evals;
        *json = dup_string(j.dump());
        return TDZ_OK;
    });
}

}  // extern "C"
