#include "tdz/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <absl/container/flat_hash_set.h>
#include <boost/math/distributions/students_t.hpp>

#include "tdz/combinatorics.hpp"
#include "tdz/parallel.hpp"

namespace tdz {

Estimate wilson(std::uint64_t hits, std::uint64_t trials, std::uint64_t samples) {
    Estimate e;
    e.hits = hits;
    e.trials = trials;
    e.samples = samples == 0 ? trials : samples;
    if (trials == 0 || e.samples == 0) {
        e.ci_high = 1.0;
        return e;
    }
    const double n = static_cast<double>(e.samples);
    const double ph = static_cast<double>(hits) / static_cast<double>(trials);
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / n;
    const double center = (ph + z2 / (2.0 * n)) / denom;
    const double half = kZ95 * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
    e.mean = ph;
    e.ci_low = std::clamp(center - half, 0.0, ph);
    e.ci_high = std::clamp(center + half, ph, 1.0);
    return e;
}

const char* quantity_name(Quantity q) {
    switch (q) {
        case Quantity::TauHorizontal: return "tau_horizontal";
        case Quantity::TauFiber: return "tau_fiber";
        case Quantity::TauVertical: return "tau_vertical";
    }
    return "unknown";
}

namespace {

void check_p(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
}

void check_sampling(const SamplingConfig& cfg) {
    if (cfg.trials == 0) throw ConfigError("trials must be positive");
    if (cfg.batches < 2) throw ConfigError("at least two batches are needed for interval estimates");
}

double t_quantile(std::uint64_t dof) {
    if (dof == 0) return std::numeric_limits<double>::infinity();
    const boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

// Per-trial rows of doubles, stored trial-major. Rows are filled in
// parallel but every reduction walks trials in index order.
struct Tally {
    std::size_t width = 0;
    std::uint64_t trials = 0;
    std::vector<double> rows;

    explicit Tally(std::size_t w) : width(w) {}

    template <typename RowFn>
    void extend(std::uint64_t end, int workers, RowFn&& fn) {
        const std::uint64_t begin = trials;
        if (end <= begin) return;
        rows.resize(end * width, 0.0);
        parallel_blocks(end - begin, workers, [&](int, std::uint64_t lo, std::uint64_t hi) {
            for (std::uint64_t t = begin + lo; t < begin + hi; ++t) fn(t, rows.data() + t * width);
        });
        trials = end;
    }

    double total(std::size_t col) const {
        double s = 0.0;
        for (std::uint64_t t = 0; t < trials; ++t) s += rows[t * width + col];
        return s;
    }

    std::uint64_t batch_count(int batches) const {
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(batches), trials);
    }
    std::uint64_t batch_begin(std::uint64_t b, std::uint64_t nb) const { return trials * b / nb; }

    // sums[b] of col over batch b.
    std::vector<double> batch_sums(std::size_t col, std::uint64_t nb) const {
        std::vector<double> out(nb, 0.0);
        for (std::uint64_t b = 0; b < nb; ++b)
            for (std::uint64_t t = batch_begin(b, nb); t < batch_begin(b + 1, nb); ++t) out[b] += rows[t * width + col];
        return out;
    }
    std::vector<double> batch_sizes(std::uint64_t nb) const {
        std::vector<double> out(nb);
        for (std::uint64_t b = 0; b < nb; ++b)
            out[b] = static_cast<double>(batch_begin(b + 1, nb) - batch_begin(b, nb));
        return out;
    }
};

// Batch-means interval for (sum of col-values times scale) per trial.
SumEstimate sum_estimate(const Tally& tally, const std::vector<std::size_t>& cols, const std::vector<double>& scale,
                         int batches) {
    SumEstimate out;
    out.trials = tally.trials;
    if (tally.trials == 0) return out;
    const std::uint64_t nb = tally.batch_count(batches);
    std::vector<double> sums(nb, 0.0);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const auto s = tally.batch_sums(cols[i], nb);
        for (std::uint64_t b = 0; b < nb; ++b) sums[b] += s[b] * scale[i];
    }
    const auto sizes = tally.batch_sizes(nb);
    const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
    const double t = static_cast<double>(tally.trials);
    out.mean = total / t;
    if (nb < 2) {
        out.ci_low = 0.0;
        out.ci_high = std::numeric_limits<double>::infinity();
        return out;
    }
    double var = 0.0;
    for (std::uint64_t b = 0; b < nb; ++b) {
        const double w = sizes[b] / t;
        const double d = sums[b] / sizes[b] - out.mean;
        var += w * w * d * d;
    }
    var *= static_cast<double>(nb) / static_cast<double>(nb - 1);
    const double half = t_quantile(nb - 1) * std::sqrt(var);
    out.ci_low = std::max(0.0, out.mean - half);
    out.ci_high = out.mean + half;
    return out;
}

struct SlopeFit {
    bool ok = false;
    double slope = 0.0;  // log scale
    double low = 0.0;
    double high = 0.0;
    int from = 0;
    int to = 0;
};

double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

// Least-squares slope of log(mean_i) against index_i with a leave-one-batch-out
// jackknife interval. sums[i][b] are batch sums for index i, denom[i] the
// number of targets per trial.
SlopeFit jackknife_slope(const std::vector<int>& index, const std::vector<std::vector<double>>& sums,
                         const std::vector<double>& sizes, const std::vector<double>& denom) {
    SlopeFit fit;
    const std::size_t nb = sizes.size();
    std::vector<std::size_t> keep;
    std::vector<double> totals(index.size(), 0.0);
    const double trials = std::accumulate(sizes.begin(), sizes.end(), 0.0);
    for (std::size_t i = 0; i < index.size(); ++i) {
        totals[i] = std::accumulate(sums[i].begin(), sums[i].end(), 0.0);
        bool usable = totals[i] > 0.0;
        for (std::size_t b = 0; b < nb && usable; ++b) usable = totals[i] - sums[i][b] > 0.0;
        if (usable) keep.push_back(i);
    }
    if (keep.size() < 2) return fit;
    std::vector<double> xs, ys;
    for (auto i : keep) {
        xs.push_back(index[i]);
        ys.push_back(std::log(totals[i] / (trials * denom[i])));
    }
    fit.slope = ls_slope(xs, ys);
    fit.from = index[keep.front()];
    fit.to = index[keep.back()];
    fit.ok = true;
    if (nb < 2) {
        fit.low = -std::numeric_limits<double>::infinity();
        fit.high = std::numeric_limits<double>::infinity();
        return fit;
    }
    std::vector<double> loo(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t k = 0; k < keep.size(); ++k) {
            const auto i = keep[k];
            ys[k] = std::log((totals[i] - sums[i][b]) / ((trials - sizes[b]) * denom[i]));
        }
        loo[b] = ls_slope(xs, ys);
    }
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(nb);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss * static_cast<double>(nb - 1) / static_cast<double>(nb));
    const double half = t_quantile(nb - 1) * se;
    fit.low = fit.slope - half;
    fit.high = fit.slope + half;
    return fit;
}

void require_reach(const Region& region, const SiteCoord& s, const std::string& what) {
    if (!region.contains(s))
        throw ConfigError(region.describe() + " does not contain " + what + " " + region.lattice().format(s));
}

// Sorted copy of ps with the permutation back to caller order.
struct SortedGrid {
    std::vector<double> ps;
    std::vector<std::size_t> order;  // ps[k] = input[order[k]]

    explicit SortedGrid(const std::vector<double>& in) : order(in.size()) {
        if (in.empty()) throw ConfigError("empty p grid");
        for (double p : in) check_p(p);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return in[a] < in[b]; });
        for (auto i : order) ps.push_back(in[i]);
    }
};

// Runs trials [tally.trials, end) collecting per-p counts. classify(site)
// returns a column in [0, cols) or -1; a site counts for every p at which it
// is connected to o. With a single p the cluster is explored breadth-first;
// otherwise one minimax invasion serves the whole grid.
template <typename MakeClassifier>
void run_counts(const Lattice& lat, const std::vector<double>& ps, const Region& region, std::size_t cols,
                const SamplingConfig& cfg, Tally& tally, std::uint64_t end, MakeClassifier&& make) {
    tally.extend(end, cfg.workers, [&](std::uint64_t t, double* row) {
        const WeightField field(lat, cfg.seed, t);
        auto classify = make();
        if (ps.size() == 1) {
            const ConfigurationView view{&field, ps[0], &region};
            explore_cluster(
                SiteCoord{}, view,
                [&](const SiteCoord& s) {
                    const int c = classify(s);
                    if (c >= 0) row[c] += 1.0;
                    return true;
                },
                cfg.site_budget);
            return;
        }
        invade(
            SiteCoord{}, field, region, ps.back(),
            [&](const SiteCoord& s, double key) {
                const int c = classify(s);
                if (c < 0) return;
                const auto i = static_cast<std::size_t>(std::upper_bound(ps.begin(), ps.end(), key) - ps.begin());
                if (i < ps.size()) row[i * cols + static_cast<std::size_t>(c)] += 1.0;
            },
            cfg.site_budget);
        for (std::size_t i = 1; i < ps.size(); ++i)
            for (std::size_t c = 0; c < cols; ++c) row[i * cols + c] += row[(i - 1) * cols + c];
    });
}

// Counts of sphere targets: column n in 1..n_max.
auto sphere_classifier(const SphereSeriesSpec& spec) {
    return [spec] {
        return [spec, seen = absl::flat_hash_set<TreeVertex>()](const SiteCoord& s) mutable -> int {
            const auto n = static_cast<int>(s.tree.depth);
            if (n == 0 || n > spec.n_max) return -1;
            if (spec.target == SphereTarget::Site) return s.layer == spec.layer ? n : -1;
            return seen.insert(s.tree).second ? n : -1;
        };
    };
}

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
    if (b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b)
        throw ResourceError("trial count times sphere size overflows 64 bits");
    return a * b;
}

struct CountSeries {
    std::vector<int> index;
    std::vector<double> denom;  // targets per trial
};

DecaySeries series_from(const Tally& tally, std::size_t p_slot, std::size_t cols, const CountSeries& cs, Quantity q,
                        double p, const std::string& region, std::uint64_t min_hits) {
    DecaySeries out{q, p, {}};
    for (std::size_t i = 0; i < cs.index.size(); ++i) {
        const auto hits = static_cast<std::uint64_t>(tally.total(p_slot * cols + static_cast<std::size_t>(cs.index[i])));
        const auto denom = static_cast<std::uint64_t>(cs.denom[i]);
        SeriesPoint pt;
        pt.index = cs.index[i];
        pt.estimate = wilson(hits, checked_product(tally.trials, denom), tally.trials);
        pt.region = region;
        pt.censored = hits < min_hits;
        out.points.push_back(pt);
    }
    return out;
}

RateEstimate rate_from(const Tally& tally, std::size_t p_slot, std::size_t cols, const CountSeries& cs,
                       DecaySeries series, int fit_from, const SamplingConfig& cfg) {
    RateEstimate r;
    for (const auto& pt : series.points) {
        const double inv = 1.0 / pt.index;
        if (pt.estimate.mean > 0.0) r.sup_root = std::max(r.sup_root, std::pow(pt.estimate.mean, inv));
        r.band_low = std::max(r.band_low, std::pow(pt.estimate.ci_low, inv));
        r.band_high = std::max(r.band_high, std::pow(pt.estimate.ci_high, inv));
    }
    const std::uint64_t nb = tally.batch_count(cfg.batches);
    std::vector<int> idx;
    std::vector<std::vector<double>> sums;
    std::vector<double> denom;
    for (std::size_t i = 0; i < cs.index.size(); ++i) {
        if (cs.index[i] < fit_from || series.points[i].censored) continue;
        idx.push_back(cs.index[i]);
        sums.push_back(tally.batch_sums(p_slot * cols + static_cast<std::size_t>(cs.index[i]), nb));
        denom.push_back(cs.denom[i]);
    }
    const SlopeFit fit = jackknife_slope(idx, sums, tally.batch_sizes(nb), denom);
    if (fit.ok) {
        r.slope_fit = std::exp(fit.slope);
        r.slope_low = std::exp(fit.low);
        r.slope_high = std::exp(fit.high);
        r.fit_from = fit.from;
        r.fit_to = fit.to;
        r.method_note = "slope fit over uncensored indices " + std::to_string(fit.from) + ".." + std::to_string(fit.to) +
                        ", jackknife over " + std::to_string(nb) + " batches";
    } else {
        r.slope_fit = r.sup_root;
        r.slope_low = r.band_low;
        r.slope_high = r.band_high;
        r.method_note = "fewer than two uncensored indices in the fit window; slope fields hold the sup-root band";
        if (series.p > 0.0) r.warnings.push_back("slope fit unavailable: too few uncensored points");
    }
    // Non-decaying: the fitted rate, or the top of its interval, reaches 1.
    if (r.slope_fit >= 1.0 || (fit.ok && r.slope_high >= 1.0)) {
        r.capped = true;
        r.warnings.push_back("no decay established; rate capped at 1");
    }
    r.slope_fit = std::min(r.slope_fit, 1.0);
    r.slope_low = std::min(r.slope_low, 1.0);
    r.slope_high = std::min(r.slope_high, 1.0);
    r.series = std::move(series);
    return r;
}

bool needs_more(const Tally& tally, std::size_t cols, std::size_t slots, const CountSeries& cs, int fit_from,
                std::uint64_t min_hits) {
    for (std::size_t s = 0; s < slots; ++s)
        for (int n : cs.index) {
            if (n < fit_from) continue;
            const double h = tally.total(s * cols + static_cast<std::size_t>(n));
            if (h > 0.0 && h < static_cast<double>(min_hits)) return true;
        }
    return false;
}

}  // namespace

Estimate estimate_tau_site(const Lattice& lat, const SiteCoord& target, double p, const RegionShape& shape,
                           const SamplingConfig& cfg) {
    check_p(p);
    check_sampling(cfg);
    const Region region(lat, shape);
    const auto event = ConnectionEvent::to_site(SiteCoord{}, target);
    event.validate(region);
    const auto hits = parallel_map<std::uint8_t>(cfg.trials, cfg.workers, [&](std::uint64_t t) -> std::uint8_t {
        const WeightField field(lat, cfg.seed, t);
        return occurs(event, ConfigurationView{&field, p, &region}, cfg.site_budget) ? 1 : 0;
    });
    return wilson(static_cast<std::uint64_t>(std::count(hits.begin(), hits.end(), 1)), cfg.trials);
}

Estimate estimate_tau(const Lattice& lat, int n, double p, const RegionShape& region, const SamplingConfig& cfg) {
    if (n < 0) throw DomainError("n must be nonnegative");
    return estimate_tau_site(lat, SiteCoord{lat.ray_vertex(static_cast<std::uint32_t>(n)), 0}, p, region, cfg);
}

Estimate estimate_tau(const Lattice& lat, int n, double p, int ball_radius, const SamplingConfig& cfg) {
    if (ball_radius < n)
        throw ConfigError("target (v_" + std::to_string(n) + ", 0) lies outside ProductBall(" +
                          std::to_string(ball_radius) + "): impossible event");
    return estimate_tau(lat, n, p, RegionShape::ball(ball_radius), cfg);
}

Estimate estimate_tau_fiber(const Lattice& lat, int n, double p, const RegionShape& shape, const SamplingConfig& cfg) {
    check_p(p);
    check_sampling(cfg);
    if (n < 0) throw DomainError("n must be nonnegative");
    const Region region(lat, shape);
    const auto event = ConnectionEvent::to_fiber(SiteCoord{}, lat.ray_vertex(static_cast<std::uint32_t>(n)));
    event.validate(region);
    const auto hits = parallel_map<std::uint8_t>(cfg.trials, cfg.workers, [&](std::uint64_t t) -> std::uint8_t {
        const WeightField field(lat, cfg.seed, t);
        return occurs(event, ConfigurationView{&field, p, &region}, cfg.site_budget) ? 1 : 0;
    });
    return wilson(static_cast<std::uint64_t>(std::count(hits.begin(), hits.end(), 1)), cfg.trials);
}

namespace {

struct SphereRun {
    SortedGrid grid;
    std::size_t cols;
    CountSeries cs;
    Tally tally;
    std::string region;
};

SphereRun run_sphere(const Lattice& lat, const std::vector<double>& ps, const SphereSeriesSpec& spec,
                     const RegionShape& shape, const SamplingConfig& cfg, int fit_from) {
    check_sampling(cfg);
    if (spec.n_max < 1) throw ConfigError("n_max must be at least 1");
    if (spec.n_max > lat.max_depth()) throw ResourceError("n_max exceeds the encodable tree depth");
    const Region region(lat, shape);
    require_reach(region, SiteCoord{TreeVertex{static_cast<std::uint32_t>(spec.n_max), 0},
                                    spec.target == SphereTarget::Site ? spec.layer : 0},
                  "target depth");
    const std::size_t cols = static_cast<std::size_t>(spec.n_max) + 1;
    SphereRun run{SortedGrid(ps), cols, {}, Tally(cols * ps.size()), region.describe()};
    for (int n = 1; n <= spec.n_max; ++n) {
        run.cs.index.push_back(n);
        run.cs.denom.push_back(static_cast<double>(lat.sphere_size(n)));
    }
    run_counts(lat, run.grid.ps, region, cols, cfg, run.tally, cfg.trials, sphere_classifier(spec));
    while (cfg.max_trials > run.tally.trials &&
           needs_more(run.tally, cols, ps.size(), run.cs, fit_from, cfg.min_hits))
        run_counts(lat, run.grid.ps, region, cols, cfg, run.tally, std::min(cfg.max_trials, 2 * run.tally.trials),
                   sphere_classifier(spec));
    return run;
}

Quantity sphere_quantity(const SphereSeriesSpec& spec) {
    return spec.target == SphereTarget::Fiber ? Quantity::TauFiber : Quantity::TauHorizontal;
}

}  // namespace

std::vector<DecaySeries> sphere_series(const Lattice& lat, const std::vector<double>& ps, const SphereSeriesSpec& spec,
                                       const RegionShape& shape, const SamplingConfig& cfg) {
    auto run = run_sphere(lat, ps, spec, shape, cfg, spec.n_max + 1);
    std::vector<DecaySeries> out(ps.size());
    for (std::size_t k = 0; k < run.grid.ps.size(); ++k)
        out[run.grid.order[k]] = series_from(run.tally, k, run.cols, run.cs, sphere_quantity(spec), run.grid.ps[k],
                                             run.region, cfg.min_hits);
    return out;
}

std::vector<RegionShape> default_alpha_schedule(int n_max) {
    std::vector<RegionShape> out;
    for (int m : {2, 4, 8, 16}) out.push_back(RegionShape::strip(n_max + 2, m));
    return out;
}

std::vector<RateEstimate> estimate_alpha_grid(const Lattice& lat, const std::vector<double>& ps,
                                              const AlphaConfig& cfg) {
    const auto schedule = cfg.schedule.empty() ? default_alpha_schedule(cfg.n_max) : cfg.schedule;
    const int fit_from = cfg.fit_from > 0 ? cfg.fit_from : std::max(1, cfg.n_max / 2);
    const SphereSeriesSpec spec{cfg.target, 0, cfg.n_max};
    std::vector<RateEstimate> prev;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        auto run = run_sphere(lat, ps, spec, schedule[s], cfg.sampling, fit_from);
        std::vector<RateEstimate> cur(ps.size());
        for (std::size_t k = 0; k < run.grid.ps.size(); ++k) {
            auto series = series_from(run.tally, k, run.cols, run.cs, sphere_quantity(spec), run.grid.ps[k],
                                      run.region, cfg.sampling.min_hits);
            auto r = rate_from(run.tally, k, run.cols, run.cs, std::move(series), fit_from, cfg.sampling);
            r.region = run.region;
            cur[run.grid.order[k]] = std::move(r);
        }
        double change = 0.0;
        if (!prev.empty())
            for (std::size_t i = 0; i < cur.size(); ++i)
                for (std::size_t j = 0; j < cur[i].series.points.size(); ++j)
                    change = std::max(change, std::abs(cur[i].series.points[j].estimate.mean -
                                                       prev[i].series.points[j].estimate.mean));
        const bool last = s + 1 == schedule.size();
        const bool settled = !prev.empty() && change < cfg.eps_stab;
        prev = std::move(cur);
        if (settled || last) {
            for (auto& r : prev) {
                r.stabilized = settled || schedule.size() == 1;
                if (schedule.size() == 1) r.method_note += "; fixed region";
                else if (settled) r.method_note += "; stabilized (max change " + std::to_string(change) + ")";
                else r.warnings.push_back("region schedule exhausted before means changed by less than " +
                                          std::to_string(cfg.eps_stab));
            }
            break;
        }
    }
    return prev;
}

RateEstimate estimate_alpha(const Lattice& lat, double p, const AlphaConfig& cfg) {
    return estimate_alpha_grid(lat, {p}, cfg).front();
}

std::vector<RegionShape> default_beta_schedule(int m_max) {
    std::vector<RegionShape> out;
    for (int r : {1, 2, 4, 8}) out.push_back(RegionShape::strip(r, m_max + 2));
    return out;
}

RateEstimate estimate_beta(const Lattice& lat, double p, const BetaConfig& cfg) {
    check_p(p);
    check_sampling(cfg.sampling);
    if (cfg.m_max < 1) throw ConfigError("m_max must be at least 1");
    const auto schedule = cfg.schedule.empty() ? default_beta_schedule(cfg.m_max) : cfg.schedule;
    const int fit_from = cfg.fit_from > 0 ? cfg.fit_from : std::max(1, cfg.m_max / 2);
    const std::size_t cols = static_cast<std::size_t>(cfg.m_max) + 1;
    CountSeries cs;
    for (int m = 1; m <= cfg.m_max; ++m) {
        cs.index.push_back(m);
        cs.denom.push_back(2.0);
    }
    const int m_max = cfg.m_max;
    auto classifier = [m_max] {
        return [m_max](const SiteCoord& s) -> int {
            if (!s.tree.is_origin() || s.layer == 0) return -1;
            const int m = s.layer < 0 ? -s.layer : s.layer;
            return m <= m_max ? m : -1;
        };
    };
    RateEstimate prev;
    bool have_prev = false;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        const Region region(lat, schedule[s]);
        require_reach(region, SiteCoord{TreeVertex{}, cfg.m_max}, "vertical target");
        require_reach(region, SiteCoord{TreeVertex{}, -cfg.m_max}, "vertical target");
        Tally tally(cols);
        run_counts(lat, {p}, region, cols, cfg.sampling, tally, cfg.sampling.trials, classifier);
        while (cfg.sampling.max_trials > tally.trials && needs_more(tally, cols, 1, cs, fit_from, cfg.sampling.min_hits))
            run_counts(lat, {p}, region, cols, cfg.sampling, tally,
                       std::min(cfg.sampling.max_trials, 2 * tally.trials), classifier);
        auto series =
            series_from(tally, 0, cols, cs, Quantity::TauVertical, p, region.describe(), cfg.sampling.min_hits);
        auto cur = rate_from(tally, 0, cols, cs, std::move(series), fit_from, cfg.sampling);
        cur.region = region.describe();
        double change = 0.0;
        if (have_prev)
            for (std::size_t j = 0; j < cur.series.points.size(); ++j)
                change = std::max(change, std::abs(cur.series.points[j].estimate.mean -
                                                   prev.series.points[j].estimate.mean));
        const bool settled = have_prev && change < cfg.eps_stab;
        const bool last = s + 1 == schedule.size();
        prev = std::move(cur);
        have_prev = true;
        if (settled || last) {
            prev.stabilized = settled || schedule.size() == 1;
            if (!prev.stabilized)
                prev.warnings.push_back("region schedule exhausted before means changed by less than " +
                                        std::to_string(cfg.eps_stab));
            break;
        }
    }
    return prev;
}

int choose_k_cut(double beta_upper, double eps_tail) {
    if (!(beta_upper >= 0.0) || beta_upper >= 1.0)
        throw DomainError("vertical decay not established: beta upper bound " + std::to_string(beta_upper) +
                          " is not below 1");
    if (!(eps_tail > 0.0)) throw ConfigError("tail tolerance must be positive");
    for (int k = 0; k < 100000; ++k)
        if (2.0 * std::pow(beta_upper, k + 1) / (1.0 - beta_upper) < eps_tail) return k;
    throw ResourceError("no layer cutoff below 100000 meets the tail tolerance");
}

std::vector<InResult> estimate_I_series(const Lattice& lat, double p, int n_max, int k_cut, const RegionShape& shape,
                                        double beta_upper, const SamplingConfig& cfg) {
    check_p(p);
    check_sampling(cfg);
    if (!(beta_upper >= 0.0) || beta_upper >= 1.0)
        throw DomainError("vertical decay not established: beta upper bound " + std::to_string(beta_upper) +
                          " is not below 1");
    if (n_max < 0 || k_cut < 0) throw ConfigError("n_max and k_cut must be nonnegative");
    const Region region(lat, shape);
    require_reach(region, SiteCoord{TreeVertex{static_cast<std::uint32_t>(n_max), 0}, k_cut}, "corner");
    require_reach(region, SiteCoord{TreeVertex{static_cast<std::uint32_t>(n_max), 0}, -k_cut}, "corner");
    const auto kk = static_cast<std::size_t>(k_cut) + 1;
    const std::size_t cols = (static_cast<std::size_t>(n_max) + 1) * kk;
    Tally tally(cols);
    auto classifier = [n_max, k_cut, kk] {
        return [n_max, k_cut, kk](const SiteCoord& s) -> int {
            const int n = static_cast<int>(s.tree.depth);
            const int k = s.layer < 0 ? -s.layer : s.layer;
            if (n > n_max || k > k_cut) return -1;
            return static_cast<int>(static_cast<std::size_t>(n) * kk + static_cast<std::size_t>(k));
        };
    };
    run_counts(lat, {p}, region, cols, cfg, tally, cfg.trials, classifier);
    const double tail = 2.0 * std::pow(beta_upper, k_cut + 1) / (1.0 - beta_upper);
    std::vector<InResult> out;
    for (int n = 0; n <= n_max; ++n) {
        InResult r;
        r.n = n;
        r.k_cut = k_cut;
        r.tail_bound = tail;
        r.beta_upper = beta_upper;
        r.region = region.describe();
        const double inv = 1.0 / static_cast<double>(lat.sphere_size(n));
        std::vector<std::size_t> colv;
        double run = 0.0;
        for (std::size_t k = 0; k < kk; ++k) {
            const std::size_t c = static_cast<std::size_t>(n) * kk + k;
            colv.push_back(c);
            run += tally.total(c) * inv / static_cast<double>(tally.trials);
            r.truncations.push_back(run);
        }
        r.value = sum_estimate(tally, colv, std::vector<double>(colv.size(), inv), cfg.batches);
        out.push_back(std::move(r));
    }
    return out;
}

InResult estimate_I_n(const Lattice& lat, int n, double p, int k_cut, const RegionShape& region, double beta_upper,
                      const SamplingConfig& cfg) {
    if (n < 0) throw DomainError("n must be nonnegative");
    return estimate_I_series(lat, p, n, k_cut, region, beta_upper, cfg).back();
}

EtaEstimate estimate_eta(const Lattice& lat, double p, int n_max, int fit_from, int k_cut, const RegionShape& shape,
                         double beta_upper, const SamplingConfig& cfg) {
    check_p(p);
    check_sampling(cfg);
    if (n_max < 1) throw ConfigError("n_max must be at least 1");
    if (!(beta_upper >= 0.0) || beta_upper >= 1.0)
        throw DomainError("vertical decay not established: beta upper bound " + std::to_string(beta_upper) +
                          " is not below 1");
    const Region region(lat, shape);
    require_reach(region, SiteCoord{TreeVertex{static_cast<std::uint32_t>(n_max), 0}, k_cut}, "corner");
    // One column per depth, counting every layer within the cutoff.
    const std::size_t cols = static_cast<std::size_t>(n_max) + 1;
    Tally tally(cols);
    auto classifier = [n_max, k_cut] {
        return [n_max, k_cut](const SiteCoord& s) -> int {
            const int n = static_cast<int>(s.tree.depth);
            const int k = s.layer < 0 ? -s.layer : s.layer;
            return n <= n_max && k <= k_cut ? n : -1;
        };
    };
    run_counts(lat, {p}, region, cols, cfg, tally, cfg.trials, classifier);
    const int from = fit_from > 0 ? fit_from : std::max(1, n_max / 2);
    const double tail = 2.0 * std::pow(beta_upper, k_cut + 1) / (1.0 - beta_upper);
    EtaEstimate out;
    out.inf_root = std::numeric_limits<double>::infinity();
    const std::uint64_t nb = tally.batch_count(cfg.batches);
    std::vector<int> idx;
    std::vector<std::vector<double>> sums;
    std::vector<double> denom;
    for (int n = 0; n <= n_max; ++n) {
        InResult r;
        r.n = n;
        r.k_cut = k_cut;
        r.tail_bound = tail;
        r.beta_upper = beta_upper;
        r.region = region.describe();
        const double size = static_cast<double>(lat.sphere_size(n));
        r.value = sum_estimate(tally, {static_cast<std::size_t>(n)}, {1.0 / size}, cfg.batches);
        if (n >= 1) out.inf_root = std::min(out.inf_root, std::pow(r.value.mean, 1.0 / n));
        if (n >= from) {
            idx.push_back(n);
            sums.push_back(tally.batch_sums(static_cast<std::size_t>(n), nb));
            denom.push_back(size);
        }
        out.series.push_back(std::move(r));
    }
    const SlopeFit fit = jackknife_slope(idx, sums, tally.batch_sizes(nb), denom);
    if (fit.ok) {
        out.slope_fit = std::exp(fit.slope);
        out.slope_low = std::exp(fit.low);
        out.slope_high = std::exp(fit.high);
        out.fit_from = fit.from;
        out.fit_to = fit.to;
    } else {
        out.slope_fit = out.inf_root;
        out.slope_low = 0.0;
        out.slope_high = out.inf_root;
        if (p > 0.0) out.warnings.push_back("slope fit unavailable: too few nonzero points");
    }
    return out;
}

bool j_window_contains(double alpha_upper, double z, int b) {
    return alpha_upper > 0.0 ? (z > alpha_upper && z < 1.0 / (alpha_upper * b)) : z > 0.0;
}

std::vector<JResult> estimate_J_series(const Lattice& lat, double p, const JConfig& cfg) {
    check_p(p);
    check_sampling(cfg.sampling);
    if (!(cfg.z > 0.0)) throw DomainError("z must be positive");
    if (cfg.m_max < 0 || cfg.n_cut < 0) throw ConfigError("m_max and n_cut must be nonnegative");
    const int b = lat.branching();
    const bool window = j_window_contains(cfg.alpha_upper, cfg.z, b);
    if (!window && cfg.require_window) {
        if (cfg.alpha_upper * cfg.alpha_upper * b >= 1.0)
            throw DomainError("the z window (alpha, 1/(alpha b)) is empty: alpha upper bound " +
                              std::to_string(cfg.alpha_upper) + " is not below 1/sqrt(b) = " +
                              std::to_string(1.0 / std::sqrt(b)));
        throw ConfigError("z = " + std::to_string(cfg.z) + " lies outside the window (" +
                          std::to_string(cfg.alpha_upper) + ", " + std::to_string(1.0 / (cfg.alpha_upper * b)) +
                          ") set by the alpha upper bound");
    }
    if (cfg.ray + 2 > static_cast<std::uint32_t>(lat.degree())) throw ConfigError("ray index must be at most d - 2");
    const Region region(lat, cfg.region);
    require_reach(region, SiteCoord{TreeVertex{static_cast<std::uint32_t>(cfg.n_cut), 0}, cfg.m_max}, "corner");
    require_reach(region, SiteCoord{TreeVertex{static_cast<std::uint32_t>(cfg.n_cut), 0}, -cfg.m_max}, "corner");

    const std::size_t cols = static_cast<std::size_t>(cfg.m_max) + 1;
    std::vector<double> weight(static_cast<std::size_t>(cfg.n_cut) + 1);
    for (int n = 0; n <= cfg.n_cut; ++n)
        weight[static_cast<std::size_t>(n)] = a_n_closed(n, cfg.z, b) / static_cast<double>(lat.sphere_size(n));

    Tally tally(cols);
    tally.extend(cfg.sampling.trials, cfg.sampling.workers, [&](std::uint64_t t, double* row) {
        const WeightField field(lat, cfg.sampling.seed, t);
        const ConfigurationView view{&field, p, &region};
        explore_cluster(
            SiteCoord{}, view,
            [&](const SiteCoord& s) {
                const int n = static_cast<int>(s.tree.depth);
                const int m = s.layer < 0 ? -s.layer : s.layer;
                if (n > cfg.n_cut || m > cfg.m_max) return true;
                const double pool = m == 0 ? 1.0 : 0.5;
                const double w = cfg.estimator == JEstimator::SphereAveraged
                                     ? weight[static_cast<std::size_t>(n)]
                                     : std::pow(cfg.z, static_cast<double>(level(lat, s.tree, cfg.ray)));
                row[m] += pool * w;
                return true;
            },
            cfg.sampling.site_budget);
    });

    const double tail = window ? (cfg.alpha_upper > 0.0 ? a_n_weighted_tail(cfg.n_cut, cfg.alpha_upper, cfg.z, b) : 0.0)
                               : std::numeric_limits<double>::infinity();
    std::vector<JResult> out;
    for (int m = 0; m <= cfg.m_max; ++m) {
        JResult r;
        r.m = m;
        r.z = cfg.z;
        r.n_cut = cfg.n_cut;
        r.value = sum_estimate(tally, {static_cast<std::size_t>(m)}, {1.0}, cfg.sampling.batches);
        r.tail_bound = tail;
        r.window_ok = window;
        r.region = region.describe();
        out.push_back(r);
    }
    return out;
}

JResult estimate_J(const Lattice& lat, int m, double p, const JConfig& cfg) {
    if (m < 0) throw DomainError("m must be nonnegative");
    JConfig c = cfg;
    c.m_max = m;
    return estimate_J_series(lat, p, c).back();
}

double phi_slope(const std::vector<JResult>& series) {
    std::vector<double> xs, ys;
    for (const auto& r : series)
        if (r.m >= 1 && r.value.mean > 0.0) {
            xs.push_back(r.m);
            ys.push_back(std::log(r.value.mean));
        }
    if (xs.size() < 2) return 0.0;
    return std::exp(ls_slope(xs, ys));
}

std::vector<SchonmannRow> alpha_schonmann_check(const Lattice& lat, const std::vector<double>& ps,
                                                const AlphaConfig& cfg) {
    const auto rates = estimate_alpha_grid(lat, ps, cfg);
    const double bound = 1.0 / std::sqrt(static_cast<double>(lat.branching()));
    std::vector<SchonmannRow> out;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        SchonmannRow row;
        row.p = ps[i];
        row.alpha = rates[i];
        row.bound = bound;
        row.below = rates[i].slope_high < bound;
        row.crosses = rates[i].slope_low <= bound && bound <= rates[i].slope_high;
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace tdz
