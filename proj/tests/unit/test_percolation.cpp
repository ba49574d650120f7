#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tdz/parallel.hpp"
#include "tdz/percolation.hpp"
#include "tdz/weight_field.hpp"

using namespace tdz;

namespace {

Region line_edge(const Lattice& lat) { return Region::from_edges(lat, {lat.edge_between(SiteCoord{}, SiteCoord{{}, 1})}); }

}  // namespace

TEST_SUITE("percolation") {
    TEST_CASE("Philox4x32-10 known-answer vectors") {
        using C = Philox4x32::Counter;
        CHECK(Philox4x32::apply(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
        CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
              C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
        CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
              C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
    }

    TEST_CASE("weight field is a pure function of (seed, trial, edge)") {
        const Lattice lat(3);
        Region r(lat, RegionShape::ball(3));
        r.materialize();
        const WeightField a(lat, 7, 3), b(lat, 7, 3), c(lat, 7, 4), e(lat, 8, 3);
        double mean = 0.0;
        int diff_trial = 0, diff_seed = 0;
        for (const auto& edge : r.edges()) {
            const double w = a.weight(edge);
            CHECK(w >= 0.0);
            CHECK(w < 1.0);
            CHECK(w == b.weight(edge));
            diff_trial += w != c.weight(edge);
            diff_seed += w != e.weight(edge);
            mean += w;
        }
        const double n = static_cast<double>(r.edges().size());
        CHECK(diff_trial == static_cast<int>(n));
        CHECK(diff_seed == static_cast<int>(n));
        CHECK(mean / n == doctest::Approx(0.5).epsilon(0.1));
    }

    TEST_CASE("weights are close to uniform") {
        const Lattice lat(3);
        const EdgeCoord e = lat.edge_between(SiteCoord{}, SiteCoord{{1, 0}, 0});
        std::vector<int> bins(10, 0);
        const int n = 100000;
        for (int t = 0; t < n; ++t) ++bins[static_cast<std::size_t>(WeightField(lat, 1, t).weight(e) * 10)];
        double chi2 = 0.0;
        for (int c : bins) chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
        CHECK(chi2 < 27.9);  // chi^2_9 at 0.001
    }

    TEST_CASE("cluster at p = 0 and p = 1") {
        const Lattice lat(3);
        const Region r(lat, RegionShape::ball(2));
        const WeightField f(lat, 1, 0);
        CHECK(sample_cluster(SiteCoord{}, {&f, 0.0, &r}).size() == 1);
        CHECK(sample_cluster(SiteCoord{}, {&f, 1.0, &r}).size() == 20);
    }

    TEST_CASE("trivial events") {
        const Lattice lat(3);
        const Region r(lat, RegionShape::ball(2));
        const WeightField f(lat, 1, 0);
        CHECK(occurs(ConnectionEvent::to_site(SiteCoord{}, SiteCoord{}), {&f, 0.0, &r}));
        CHECK(occurs(ConnectionEvent::to_site(SiteCoord{}, SiteCoord{{2, 3}, 0}), {&f, 1.0, &r}));
        CHECK(bottleneck_threshold(ConnectionEvent::to_site(SiteCoord{}, SiteCoord{}), f, r).threshold == 0.0);
    }

    TEST_CASE("single edge threshold is its weight") {
        const Lattice lat(3);
        const Region r = line_edge(lat);
        for (std::uint64_t t = 0; t < 20; ++t) {
            const WeightField f(lat, 5, t);
            const double w = f.weight(r.edges().front());
            const auto ev = ConnectionEvent::to_site(SiteCoord{}, SiteCoord{{}, 1});
            const auto res = bottleneck_threshold(ev, f, r);
            CHECK(res.threshold == w);
            CHECK(res.witness.size() == 1);
            CHECK_FALSE(occurs(ev, {&f, w, &r}));
            CHECK(occurs(ev, {&f, std::nextafter(w, 2.0), &r}));
        }
    }

    TEST_CASE("bottleneck threshold separates occurrence on a p grid") {
        const Lattice lat(3);
        const Region r(lat, RegionShape::ball(3));
        const auto ev = ConnectionEvent::to_site(SiteCoord{}, SiteCoord{{2, 1}, 1});
        for (std::uint64_t t = 0; t < 200; ++t) {
            const WeightField f(lat, 9, t);
            const double th = bottleneck_threshold(ev, f, r).threshold;
            for (int k = 0; k <= 20; ++k) {
                const double p = k / 20.0;
                REQUIRE(occurs(ev, {&f, p, &r}) == (p > th));
            }
        }
    }

    TEST_CASE("invasion keys reproduce the cluster at every p") {
        const Lattice lat(3);
        const Region r(lat, RegionShape::strip(4, 2));
        for (std::uint64_t t = 0; t < 30; ++t) {
            const WeightField f(lat, 3, t);
            std::vector<std::pair<SiteCoord, double>> keyed;
            invade(SiteCoord{}, f, r, 1.0, [&](const SiteCoord& s, double key) { keyed.emplace_back(s, key); });
            for (double p : {0.2, 0.35, 0.5, 0.7}) {
                std::set<SiteCoord> by_key;
                for (const auto& [s, k] : keyed)
                    if (k < p) by_key.insert(s);
                const auto cl = sample_cluster(SiteCoord{}, {&f, p, &r});
                REQUIRE(std::set<SiteCoord>(cl.begin(), cl.end()) == by_key);
            }
        }
    }

    TEST_CASE("reach thresholds are monotone in r and match boundary events") {
        const Lattice lat(3);
        const Region r(lat, RegionShape::ball(6));
        for (std::uint64_t t = 0; t < 50; ++t) {
            const WeightField f(lat, 4, t);
            const auto th = reach_thresholds(f, r, 6);
            CHECK(th[0] == 0.0);
            for (std::size_t k = 1; k < th.size(); ++k) CHECK(th[k] >= th[k - 1]);
            for (std::uint32_t radius : {2u, 5u}) {
                ConnectionEvent ev{SiteCoord{}, {ConnectionTarget::Kind::BallBoundary, {}, {}, radius}};
                CHECK(bottleneck_threshold(ev, f, r).threshold == th[radius]);
            }
            // Every weight is below 1, so p = 1 always reaches the boundary.
            CHECK(th[6] < 1.0);
        }
    }

    TEST_CASE("site budget") {
        const Lattice lat(3);
        const Region r(lat, RegionShape::ball(8));
        const WeightField f(lat, 1, 0);
        CHECK_THROWS_AS(sample_cluster(SiteCoord{}, {&f, 1.0, &r}, 50), ResourceError);
    }

    TEST_CASE("parallel_map is independent of the worker count") {
        auto run = [](int workers) {
            return parallel_map<double>(257, workers, [](std::uint64_t i) {
                const Lattice lat(3);
                const Region r(lat, RegionShape::ball(3));
                const WeightField f(lat, 2, i);
                return static_cast<double>(sample_cluster(SiteCoord{}, {&f, 0.45, &r}).size());
            });
        };
        const auto one = run(1);
        CHECK(run(3) == one);
        CHECK(run(8) == one);
    }
}
