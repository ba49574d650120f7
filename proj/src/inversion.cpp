#include "tdz/inversion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include "tdz/parallel.hpp"

namespace tdz {

const char* status_name(PcStatus s) { return s == PcStatus::Decided ? "decided" : "undecided"; }

namespace {

using ProbeFn = std::function<Probe(double p, int level)>;

// Memoizes probes by (p, level) so revisited midpoints cost nothing.
class Prober {
public:
    Prober(ProbeFn fn, int max_probes, std::vector<Probe>& log) : fn_(std::move(fn)), max_(max_probes), log_(log) {}

    bool exhausted() const { return static_cast<int>(log_.size()) >= max_; }

    Probe get(double p, int level) {
        const auto key = std::make_pair(p, level);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        Probe pr = fn_(p, level);
        pr.escalation = level;
        cache_.emplace(key, pr);
        log_.push_back(pr);
        return pr;
    }

    // Escalates until the probe decides or the levels run out.
    Probe decide(double p, int max_level) {
        Probe pr;
        for (int level = 0; level <= max_level && !exhausted(); ++level) {
            pr = get(p, level);
            if (pr.verdict != 0) break;
        }
        return pr;
    }

private:
    ProbeFn fn_;
    int max_;
    std::vector<Probe>& log_;
    std::map<std::pair<double, int>, Probe> cache_;
};

// Shrinks [lo, hi] to width tol. An undecided midpoint falls back to probes
// at 0.3 and 0.7 of the bracket; if those are undecided too the bracket is
// returned as undecided.
void bisect(Prober& prober, double& lo, double& hi, double tol, int max_level, PcResult& out) {
    while (hi - lo > tol) {
        if (prober.exhausted()) {
            out.status = PcStatus::Undecided;
            out.notes.push_back("probe budget exhausted");
            return;
        }
        const double w = hi - lo;
        const double mid = lo + 0.5 * w;
        const Probe pr = prober.decide(mid, max_level);
        if (pr.verdict < 0) {
            lo = mid;
            continue;
        }
        if (pr.verdict > 0) {
            hi = mid;
            continue;
        }
        bool moved = false;
        const double a = lo + 0.3 * w, b = lo + 0.7 * w;
        if (prober.decide(a, max_level).verdict < 0) {
            lo = a;
            moved = true;
        }
        if (prober.decide(b, max_level).verdict > 0) {
            hi = b;
            moved = true;
        }
        if (!moved) {
            out.status = PcStatus::Undecided;
            out.notes.push_back("interval straddles the reference at p = " + std::to_string(mid) +
                                " after all escalations");
            return;
        }
        out.notes.push_back("midpoint " + std::to_string(mid) + " undecided; bracket narrowed by off-center probes");
    }
    out.status = PcStatus::Decided;
}

// Initial bracket by an upward scan over [1/(d+1), 1/(d-1)], which contains
// p_c; p = 0 is the trivial lower end. Probes above p_c get expensive
// quickly, so the scan stops at the first point decided above.
void run_scan_and_bisect(Prober& prober, const Lattice& lat, int scan_points, double tol, int max_level,
                         PcResult& out) {
    double lo = 0.0, hi = -1.0;
    prober.get(0.0, 0);
    const double a = 1.0 / (lat.degree() + 1), b = 1.0 / lat.branching();
    for (int k = 0; k < scan_points && !prober.exhausted(); ++k) {
        const double p = a + (b - a) * k / (scan_points - 1);
        const int v = prober.get(p, 0).verdict;
        if (v < 0) lo = p;
        if (v > 0) {
            hi = p;
            break;
        }
    }
    if (hi < 0.0) {
        out.lo = lo;
        out.hi = b;
        out.status = PcStatus::Undecided;
        out.notes.push_back("scan found no p decidedly above p_c");
        return;
    }
    bisect(prober, lo, hi, tol, max_level, out);
    out.lo = lo;
    out.hi = hi;
}

AlphaConfig escalate(const AlphaConfig& base, int level) {
    AlphaConfig c = base;
    if (level >= 1) {
        c.sampling.trials *= 2;
        c.sampling.max_trials *= 2;
    }
    if (level >= 2) {
        c.n_max += 1;
        for (auto& s : c.schedule) s.radius += 1;
    }
    if (level >= 3)
        for (auto& s : c.schedule) s.half_width *= 2;
    return c;
}

int verdict_of(double low, double high, double reference) {
    if (high < reference) return -1;
    if (low > reference) return 1;
    return 0;
}

}  // namespace

PcResult estimate_pc_via_alpha(const Lattice& lat, const PcAlphaConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!(cfg.tol > 0.0)) throw ConfigError("tolerance must be positive");
    if (cfg.scan_points < 2) throw ConfigError("scan needs at least two points");
    PcResult out;
    out.method = "alpha";
    out.d = lat.degree();
    const double target = 1.0 / lat.branching();
    AlphaConfig base = cfg.alpha;
    if (base.schedule.empty()) base.schedule = {RegionShape::strip(base.n_max + 2, 16)};

    ProbeFn fn = [&](double p, int level) {
        Probe pr;
        pr.p = p;
        pr.reference = target;
        if (p == 0.0) {
            // Nothing is open: alpha(0) = 0 without sampling.
            pr.verdict = -1;
            pr.note = "trivial: p = 0";
            return pr;
        }
        const AlphaConfig c = escalate(base, level);
        const RateEstimate r = estimate_alpha(lat, p, c);
        pr.value = r.slope_fit;
        pr.ci_low = r.slope_low;
        pr.ci_high = r.slope_high;
        pr.trials = r.series.points.empty() ? 0 : r.series.points.front().estimate.samples;
        pr.depth = c.n_max;
        pr.region = r.region;
        pr.note = r.method_note;
        pr.verdict = r.fit_to > 0 ? verdict_of(pr.ci_low, pr.ci_high, target) : 0;
        return pr;
    };
    Prober prober(fn, cfg.max_probes, out.probes);

    run_scan_and_bisect(prober, lat, cfg.scan_points, cfg.tol, cfg.max_escalations, out);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

PcResult estimate_pc_direct(const Lattice& lat, const PcDirectConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!(cfg.tol > 0.0)) throw ConfigError("tolerance must be positive");
    const int r_max = cfg.r_max > 0 ? cfg.r_max : std::min(40, lat.max_depth());
    if (r_max < 2) throw ConfigError("r_max must be at least 2");
    const int r_ref = cfg.r_ref > 0 ? cfg.r_ref : r_max / 2;
    if (r_ref < 1 || r_ref >= r_max) throw ConfigError("r_ref must lie in [1, r_max)");
    if (cfg.sampling.trials == 0) throw ConfigError("trials must be positive");
    if (cfg.scan_points < 2) throw ConfigError("scan needs at least two points");
    PcResult out;
    out.method = "direct";
    out.d = lat.degree();
    const double reference = static_cast<double>(r_ref) / r_max;
    const Region region(lat, RegionShape::ball(r_max));

    // Per-field thresholds (p*_{r_ref}, p*_{r_max}) from invasions capped at
    // cap[i]; a threshold of 1 means "not below cap[i]". Invasions above p_c
    // can stall in large ponds, so caps only grow as far as the probes need.
    struct FieldThresholds {
        double ref = 1.0, max = 1.0, cap = 0.0;
    };
    std::vector<FieldThresholds> fields_th;
    auto ensure = [&](std::uint64_t fields, double cap) {
        if (fields_th.size() < fields) fields_th.resize(fields);
        std::vector<std::uint64_t> todo;
        for (std::uint64_t i = 0; i < fields; ++i)
            if (fields_th[i].cap < cap && fields_th[i].max >= fields_th[i].cap) todo.push_back(i);
        const auto fresh = parallel_map<FieldThresholds>(todo.size(), cfg.sampling.workers, [&](std::uint64_t k) {
            const WeightField field(lat, cfg.sampling.seed, todo[k]);
            const auto th = reach_thresholds(field, region, static_cast<std::uint32_t>(r_max), cap,
                                             cfg.sampling.site_budget);
            return FieldThresholds{th[static_cast<std::size_t>(r_ref)], th[static_cast<std::size_t>(r_max)], cap};
        });
        for (std::size_t k = 0; k < todo.size(); ++k) fields_th[todo[k]] = fresh[k];
    };

    ProbeFn fn = [&](double p, int level) {
        Probe pr;
        pr.p = p;
        pr.reference = reference;
        pr.depth = r_max;
        pr.region = region.describe();
        const std::uint64_t fields = cfg.sampling.trials << level;
        // Thresholds equal to the cap are saturated, so a slightly higher cap
        // keeps "threshold < p" exact at p itself.
        ensure(fields, std::nextafter(p, 2.0));
        std::uint64_t reach_ref = 0, reach_max = 0;
        for (std::uint64_t i = 0; i < fields; ++i) {
            reach_ref += fields_th[i].ref < p;
            reach_max += fields_th[i].max < p;
        }
        pr.trials = fields;
        if (reach_ref == 0) {
            // Far below p_c: theta at r_ref is already under 1 / fields.
            pr.verdict = -1;
            pr.note = "no field reaches distance " + std::to_string(r_ref);
            return pr;
        }
        const Estimate q = wilson(reach_max, reach_ref);
        pr.value = q.mean;
        pr.ci_low = q.ci_low;
        pr.ci_high = q.ci_high;
        pr.verdict = verdict_of(q.ci_low, q.ci_high, reference);
        pr.note = "theta(" + std::to_string(r_ref) + ") = " + std::to_string(double(reach_ref) / fields) +
                  ", theta(" + std::to_string(r_max) + ") = " + std::to_string(double(reach_max) / fields);
        return pr;
    };
    Prober prober(fn, cfg.max_probes, out.probes);
    run_scan_and_bisect(prober, lat, cfg.scan_points, cfg.tol, cfg.max_escalations, out);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace tdz
