#include <doctest.h>

#include <cmath>

#include "tdz/error.hpp"
#include "tdz/oracle.hpp"
#include "tdz/verify.hpp"

using namespace tdz;

namespace {

const SiteCoord o{};

Region four_cycle(const Lattice& lat) {
    const TreeVertex c0{1, 0};
    return Region::from_edges(lat, {lat.edge_between(o, {o.tree, 1}), lat.edge_between({o.tree, 1}, {c0, 1}),
                                    lat.edge_between({c0, 1}, {c0, 0}), lat.edge_between({c0, 0}, o)});
}

const SiteCoord opposite{{1, 0}, 1};

// A o B by brute force: some split of the open edges into two parts gives
// A on one part and B on the other.
bool disjoint_by_splits(const DenseGraph& g, const DenseEvent& a, const DenseEvent& b, std::uint64_t open) {
    for (std::uint64_t s = open;; s = (s - 1) & open) {
        const bool in_a = a.trivial() || (g.reach(a.source, s) & a.target_mask);
        const bool in_b = b.trivial() || (g.reach(b.source, open & ~s) & b.target_mask);
        if (in_a && in_b) return true;
        if (s == 0) return false;
    }
}

// Same-pair disjointness by Menger: connected, and no single open edge
// separates source from target.
bool two_paths_by_cuts(const DenseGraph& g, const DenseEvent& a, std::uint64_t open) {
    if (!(g.reach(a.source, open) & a.target_mask)) return false;
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        if (!(open >> e & 1u)) continue;
        if (!(g.reach(a.source, open & ~(std::uint64_t{1} << e)) & a.target_mask)) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("oracle") {
    TEST_CASE("small polynomials") {
        const Lattice lat(3);
        const Region edge = Region::from_edges(lat, {lat.edge_between(o, {o.tree, 1})});
        const auto p1 = exact_probability(ConnectionEvent::to_site(o, {o.tree, 1}), edge);
        CHECK(p1.coeffs == std::vector<std::uint64_t>{0, 1});
        CHECK(p1.eval(0.37) == doctest::Approx(0.37));

        const Region path = Region::from_edges(lat, {lat.edge_between(o, {{1, 0}, 0}), lat.edge_between({{1, 0}, 0}, {{2, 0}, 0})});
        const auto p2 = exact_probability(ConnectionEvent::to_site(o, {{2, 0}, 0}), path);
        CHECK(p2.coeffs == std::vector<std::uint64_t>{0, 0, 1});

        // Enumerating the 16 configurations of the 4-cycle by hand:
        // two 2-edge witnesses, all four 3-edge sets, and the full cycle.
        const auto pc = exact_probability(ConnectionEvent::to_site(o, opposite), four_cycle(lat));
        CHECK(pc.coeffs == std::vector<std::uint64_t>{0, 0, 2, 4, 1});
        CHECK(pc.well_formed());
        for (double p : {0.1, 0.5, 0.9}) CHECK(pc.eval(p) == doctest::Approx(2 * p * p - std::pow(p, 4)));
        CHECK(pc.eval(Rational(1, 2)) == Rational(7, 16));
    }

    TEST_CASE("enumeration budget") {
        const Lattice lat(3);
        Region b2(lat, RegionShape::ball(2));
        b2.materialize();
        CHECK_THROWS_AS(exact_probability(ConnectionEvent::to_site(o, {{1, 0}, 0}), b2), ResourceError);
    }

    TEST_CASE("FKG, BK and power examples") {
        const Lattice lat(3);
        const Region cyc = four_cycle(lat);
        const auto a = ConnectionEvent::to_site(o, opposite);

        const auto fkg = check_fkg(a, a, cyc, Rational(1, 2));
        CHECK(fkg.pass);
        CHECK(fkg.exact);

        const auto bk = check_bk(a, a, cyc, Rational(1, 2));
        CHECK(bk.pass);
        CHECK(bk.lhs == doctest::Approx(0.0625));
        CHECK(bk.rhs == doctest::Approx(0.19140625));

        const Region edge = Region::from_edges(lat, {lat.edge_between(o, {o.tree, 1})});
        const auto e = ConnectionEvent::to_site(o, {o.tree, 1});
        const auto bk1 = check_bk(e, e, edge, Rational(3, 10));
        CHECK(bk1.pass);
        CHECK(bk1.lhs == 0.0);
        CHECK(bk1.rhs == doctest::Approx(0.09));

        const auto pw = check_power_inequality(a, cyc, 0.4, 1.0);
        CHECK(pw.pass);
        CHECK(pw.lhs == doctest::Approx(pw.rhs).epsilon(1e-15));
        CHECK(check_power_inequality(a, cyc, 0.4, 2.5).pass);
    }

    TEST_CASE("disjoint occurrence: flow, path search and brute force agree") {
        for (const auto& shipped : shipped_regions()) {
            const Region region = materialize_shipped(shipped);
            if (region.edges().size() > 13) continue;
            const DenseGraph g(region);
            const auto events = shipped_events(region);
            const std::uint64_t all = (std::uint64_t{1} << region.edges().size()) - 1;
            for (const auto& ea : events)
                for (const auto& eb : events) {
                    const DenseEvent a = compile_event(ea, region), b = compile_event(eb, region);
                    for (std::uint64_t mask = 0; mask <= all; ++mask) {
                        const bool fast = disjoint_occurrence(g, a, b, mask);
                        REQUIRE(fast == disjoint_by_splits(g, a, b, mask));
                        if (!a.trivial() && !b.trivial())
                            REQUIRE(disjoint_occurrence_by_paths(g, a, b, mask) == fast);
                    }
                }
            for (const auto& ea : events) {
                const DenseEvent a = compile_event(ea, region);
                if (a.trivial()) continue;
                for (std::uint64_t mask = 0; mask <= all; ++mask)
                    REQUIRE((disjoint_path_count(g, a, mask) >= 2) == two_paths_by_cuts(g, a, mask));
            }
        }
    }

    TEST_CASE("Monte Carlo agrees with the exact polynomial") {
        const Lattice lat(3);
        const Region edge = Region::from_edges(lat, {lat.edge_between(o, {o.tree, 1})});
        const auto single = mc_vs_exact(ConnectionEvent::to_site(o, {o.tree, 1}), edge, 0.37, 100000, 3, 1);
        CHECK(single.pass);
        CHECK(single.exact == doctest::Approx(0.37));
        const auto cyc = mc_vs_exact(ConnectionEvent::to_site(o, opposite), four_cycle(lat), 0.5, 100000, 3, 1);
        CHECK(cyc.pass);
        CHECK(cyc.exact == doctest::Approx(0.4375));
    }

    TEST_CASE("shipped regions") {
        const auto regions = shipped_regions();
        CHECK(regions.size() >= 10);
        for (const auto& r : regions) {
            const Region region = materialize_shipped(r);
            CHECK(region.edges().size() <= 22);
            CHECK(region.index_of(o) >= 0);
        }
    }
}
