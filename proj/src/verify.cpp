#include "tdz/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tdz/combinatorics.hpp"
#include "tdz/oracle.hpp"
#include "tdz/parallel.hpp"

namespace tdz {

using nlohmann::json;

json CheckTally::to_json() const {
    return {{"checks", checks}, {"failures", failures}, {"worst", worst}, {"pass", pass()}, {"details", details}};
}

json McTally::to_json() const {
    return {{"cells", cells}, {"passes", passes}, {"pass_rate", pass_rate()}, {"details", details}};
}

json InequalityTally::to_json() const {
    return {{"fkg", fkg.to_json()}, {"bk", bk.to_json()}, {"power", power.to_json()}};
}

namespace {

SiteCoord site(std::uint32_t depth, std::uint64_t rank, std::int32_t layer) { return {TreeVertex{depth, rank}, layer}; }

std::vector<EdgeCoord> edges_of(const Region& r) { return r.edges(); }

std::vector<EdgeCoord> chain(const Lattice& lat, const std::vector<SiteCoord>& sites, bool close) {
    std::vector<EdgeCoord> out;
    for (std::size_t i = 0; i + 1 < sites.size(); ++i) out.push_back(lat.edge_between(sites[i], sites[i + 1]));
    if (close) out.push_back(lat.edge_between(sites.back(), sites.front()));
    return out;
}

std::vector<EdgeCoord> shape_edges(int d, RegionShape shape) {
    const Lattice lat(d);
    Region r(lat, shape);
    r.materialize();
    return edges_of(r);
}

// Sub-region of ProductBall(2): fibers over o and two of its neighbors,
// layers -1..1.
std::vector<EdgeCoord> fan_edges(const Lattice& lat) {
    std::vector<EdgeCoord> out;
    for (int k = -1; k <= 1; ++k) {
        out.push_back(lat.edge_between(site(0, 0, k), site(1, 0, k)));
        out.push_back(lat.edge_between(site(0, 0, k), site(1, 1, k)));
    }
    for (const auto& v : {TreeVertex{}, TreeVertex{1, 0}, TreeVertex{1, 1}})
        for (int k = -1; k < 1; ++k) out.push_back(lat.edge_between({v, k}, {v, k + 1}));
    return out;
}

// 2 x 4 grid: fibers over o and its first neighbor, layers 0..3.
std::vector<EdgeCoord> ladder_edges(const Lattice& lat) {
    std::vector<EdgeCoord> out;
    for (int k = 0; k <= 3; ++k) out.push_back(lat.edge_between(site(0, 0, k), site(1, 0, k)));
    for (const auto& v : {TreeVertex{}, TreeVertex{1, 0}})
        for (int k = 0; k < 3; ++k) out.push_back(lat.edge_between({v, k}, {v, k + 1}));
    return out;
}

}  // namespace

std::vector<ShippedRegion> shipped_regions() {
    const Lattice l3(3);
    std::vector<ShippedRegion> out;
    out.push_back({"single_edge", 3, chain(l3, {site(0, 0, 0), site(0, 0, 1)}, false)});
    out.push_back({"tree_path_2", 3, chain(l3, {site(0, 0, 0), site(1, 0, 0), site(2, 0, 0)}, false)});
    out.push_back({"four_cycle", 3, chain(l3, {site(0, 0, 0), site(0, 0, 1), site(1, 0, 1), site(1, 0, 0)}, true)});
    out.push_back({"ladder_2x4", 3, ladder_edges(l3)});
    out.push_back({"fan_3x3", 3, fan_edges(l3)});
    out.push_back({"ball_1_d3", 3, shape_edges(3, RegionShape::ball(1))});
    out.push_back({"ball_1_d4", 4, shape_edges(4, RegionShape::ball(1))});
    out.push_back({"tree_strip_2_0", 3, shape_edges(3, RegionShape::strip(2, 0))});
    out.push_back({"line_strip_0_5", 3, shape_edges(3, RegionShape::strip(0, 5))});
    out.push_back({"strip_1_1_d3", 3, shape_edges(3, RegionShape::strip(1, 1))});
    out.push_back({"strip_1_1_d4", 4, shape_edges(4, RegionShape::strip(1, 1))});
    return out;
}

Region materialize_shipped(const ShippedRegion& r) { return Region::from_edges(Lattice(r.d), r.edges); }

std::vector<ConnectionEvent> shipped_events(const Region& region) {
    const auto& vs = region.vertices();
    std::size_t far = 0;
    for (std::size_t i = 0; i < vs.size(); ++i)
        if (Lattice::norm(vs[i]) >= Lattice::norm(vs[far])) far = i;
    const std::uint64_t half = (Lattice::norm(vs[far]) + 1) / 2;
    std::size_t mid = far;
    for (std::size_t i = 0; i < vs.size(); ++i)
        if (Lattice::norm(vs[i]) == half) {
            mid = i;
            break;
        }
    std::vector<ConnectionEvent> out{ConnectionEvent::to_site(SiteCoord{}, vs[far])};
    if (mid != far) out.push_back(ConnectionEvent::to_site(SiteCoord{}, vs[mid]));
    // A pair avoiding o: the first non-origin vertex to the farthest one.
    for (const auto& v : vs)
        if (v != SiteCoord{} && v != vs[far]) {
            out.push_back(ConnectionEvent::to_site(v, vs[far]));
            break;
        }
    return out;
}

CheckTally verify_combinatorics() {
    CheckTally t;
    auto fail = [&](const std::string& what) {
        ++t.failures;
        if (t.details.size() < 20) t.details.push_back(what);
    };
    for (int d : {3, 4, 5}) {
        const int b = d - 1;
        const Lattice lat(d);
        for (int n = 0; n <= 12; ++n) {
            const auto census = LevelCensus::compute(n, b);
            ++t.checks;
            if (census.total() != lat.sphere_size(n))
                fail("census total d=" + std::to_string(d) + " n=" + std::to_string(n));
            for (int k = 0; k <= 36; ++k) {
                const double z = 0.2 + 0.05 * k;
                const double direct = a_n_direct(n, z, b);
                const double closed = a_n_closed(n, z, b);
                const double rel = std::abs(direct - closed) / std::abs(direct);
                t.worst = std::max(t.worst, rel);
                ++t.checks;
                if (!(rel <= 1e-12)) fail("closed form d=" + std::to_string(d) + " n=" + std::to_string(n) +
                                          " z=" + std::to_string(z));
                ++t.checks;
                if (!check_reflection(n, z, b))
                    fail("reflection d=" + std::to_string(d) + " n=" + std::to_string(n) + " z=" + std::to_string(z));
            }
            const double zs = 1.0 / std::sqrt(static_cast<double>(b));
            const double direct = a_n_direct(n, zs, b);
            const double rel = std::abs(direct - a_n_closed(n, zs, b)) / direct;
            ++t.checks;
            if (!(rel <= 1e-10)) fail("singular branch d=" + std::to_string(d) + " n=" + std::to_string(n));
        }
    }
    return t;
}

CheckTally verify_levels(std::uint64_t seed, std::uint64_t random_pairs) {
    const Lattice lat(3);
    CheckTally t;
    auto check = [&](TreeVertex x, TreeVertex y) {
        ++t.checks;
        const std::int64_t lhs = level(lat, x);
        const std::int64_t rhs = level(lat, y) + level_relative(lat, y, x);
        if (lhs != rhs) {
            ++t.failures;
            t.worst = std::max(t.worst, static_cast<double>(std::llabs(lhs - rhs)));
            if (t.details.size() < 20) t.details.push_back(lat.format(x) + " from " + lat.format(y));
        }
    };
    std::vector<TreeVertex> ball;
    for (int n = 0; n <= 5; ++n)
        for (const auto& v : lat.sphere(n)) ball.push_back(v);
    for (const auto& x : ball)
        for (const auto& y : ball) check(x, y);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, lat.tree_ball_size(8) - 1);
    auto from_id = [&](std::uint64_t id) {
        std::uint32_t depth = 0;
        while (id >= lat.sphere_size(static_cast<int>(depth))) id -= lat.sphere_size(static_cast<int>(depth++));
        return TreeVertex{depth, id};
    };
    for (std::uint64_t i = 0; i < random_pairs; ++i) check(from_id(pick(rng)), from_id(pick(rng)));
    return t;
}

McTally verify_oracle_mc(std::uint64_t trials, std::uint64_t seed, int workers) {
    McTally t;
    std::uint64_t cell = 0;
    for (const auto& shipped : shipped_regions()) {
        const Region region = materialize_shipped(shipped);
        const auto event = shipped_events(region).front();
        for (double p : {0.2, 0.5, 0.8}) {
            const auto r = mc_vs_exact(event, region, p, trials, seed + cell++, workers);
            ++t.cells;
            t.passes += r.pass;
            t.details.push_back({{"region", shipped.name},
                                 {"edges", region.edges().size()},
                                 {"p", p},
                                 {"empirical", r.empirical},
                                 {"exact", r.exact},
                                 {"sigma", r.sigma},
                                 {"pass", r.pass}});
        }
    }
    return t;
}

InequalityTally verify_inequalities(int workers) {
    InequalityTally t;
    const std::vector<Rational> ps{Rational(1, 4), Rational(1, 2), Rational(3, 4)};
    for (const auto& shipped : shipped_regions()) {
        const Region region = materialize_shipped(shipped);
        const auto events = shipped_events(region);
        const bool bk_ok = region.edges().size() <= 22;
        for (std::size_t i = 0; i < events.size(); ++i) {
            for (std::size_t j = i; j < events.size(); ++j) {
                const auto polys = exact_pair(events[i], events[j], region, bk_ok, kDefaultEnumerationBudget, workers);
                for (const auto& p : ps) {
                    const Rational pa = polys.a.eval(p), pb = polys.b.eval(p);
                    const Rational prod = pa * pb;
                    const Rational both = polys.both.eval(p);
                    ++t.fkg.checks;
                    if (both < prod) {
                        ++t.fkg.failures;
                        t.fkg.worst = std::max(t.fkg.worst, static_cast<double>(prod - both));
                        t.fkg.details.push_back(shipped.name);
                    }
                    if (!bk_ok) continue;
                    const Rational disjoint = polys.disjoint.eval(p);
                    ++t.bk.checks;
                    if (disjoint > prod) {
                        ++t.bk.failures;
                        t.bk.worst = std::max(t.bk.worst, static_cast<double>(disjoint - prod));
                        t.bk.details.push_back(shipped.name);
                    }
                }
            }
            const auto poly = exact_probability(events[i], region, kDefaultEnumerationBudget, workers);
            for (double p : {0.3, 0.5, 0.7})
                for (double gamma : {1.0, 1.5, 2.0, 3.0}) {
                    const double lhs = poly.eval(std::pow(p, gamma));
                    const double rhs = std::pow(poly.eval(p), gamma);
                    ++t.power.checks;
                    if (lhs > rhs + 1e-12) {
                        ++t.power.failures;
                        t.power.worst = std::max(t.power.worst, lhs - rhs);
                        t.power.details.push_back(shipped.name);
                    }
                }
        }
    }
    return t;
}

CheckTally verify_coupling(std::uint64_t fields, std::uint64_t seed, int workers) {
    const Lattice lat(3);
    const Region region(lat, RegionShape::ball(3));
    const std::vector<ConnectionEvent> events{ConnectionEvent::to_ball_boundary(SiteCoord{}, 3),
                                              ConnectionEvent::to_site(SiteCoord{}, {lat.ray_vertex(2), 1})};
    struct Counts {
        std::uint32_t checks = 0, monotone = 0, threshold = 0;
    };
    const auto per = parallel_map<Counts>(fields, workers, [&](std::uint64_t f) {
        Counts c;
        const WeightField field(lat, seed, f);
        for (const auto& ev : events) {
            const double thr = bottleneck_threshold(ev, field, region).threshold;
            bool prev = false;
            for (int k = 0; k <= 10; ++k) {
                const double p = k / 10.0;
                const bool now = occurs(ev, ConfigurationView{&field, p, &region});
                c.checks += 2;
                if (prev && !now) ++c.monotone;
                if (now != (p > thr)) ++c.threshold;
                prev = now;
            }
        }
        return c;
    });
    CheckTally t;
    std::uint64_t mono = 0, thr = 0;
    for (const auto& c : per) {
        t.checks += c.checks;
        mono += c.monotone;
        thr += c.threshold;
    }
    t.failures = mono + thr;
    t.details.push_back({{"monotonicity_violations", mono}, {"threshold_disagreements", thr}, {"fields", fields}});
    return t;
}

json run_suite(const std::string& suite, std::uint64_t seed, int workers) {
    const bool all = suite == "all";
    if (!all && suite != "combinatorics" && suite != "lattice" && suite != "oracle" && suite != "coupling")
        throw ConfigError("unknown verify suite '" + suite + "' (expected combinatorics, lattice, oracle, coupling, all)");
    json report{{"suite", suite}, {"seed", seed}};
    bool pass = true;
    if (all || suite == "combinatorics") {
        const auto t = verify_combinatorics();
        report["combinatorics"] = t.to_json();
        pass = pass && t.pass();
    }
    if (all || suite == "lattice") {
        const auto t = verify_levels(seed);
        report["lattice"] = t.to_json();
        pass = pass && t.pass();
    }
    if (all || suite == "oracle") {
        const auto mc = verify_oracle_mc(100000, seed, workers);
        const auto ineq = verify_inequalities(workers);
        report["oracle_mc"] = mc.to_json();
        report["inequalities"] = ineq.to_json();
        pass = pass && mc.cells >= 10 && mc.pass_rate() >= 0.95 && ineq.fkg.pass() && ineq.bk.pass() &&
               ineq.power.pass();
    }
    if (all || suite == "coupling") {
        const auto t = verify_coupling(10000, seed, workers);
        report["coupling"] = t.to_json();
        pass = pass && t.pass();
    }
    report["pass"] = pass;
    return report;
}

}  // namespace tdz
