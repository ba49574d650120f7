#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tdz/error.hpp"
#include "tdz/lattice.hpp"

using namespace tdz;

TEST_SUITE("lattice") {
    TEST_CASE("origin has d + 2 neighbors") {
        const Lattice lat(3);
        const SiteCoord o{};
        const auto nb = lat.neighbors(o);
        const std::set<SiteCoord> got(nb.begin(), nb.end());
        const std::set<SiteCoord> want{{{1, 0}, 0}, {{1, 1}, 0}, {{1, 2}, 0}, {{}, 1}, {{}, -1}};
        CHECK(got == want);
        CHECK(nb.size() == 5);
    }

    TEST_CASE("neighbors of <0> follow the encoding") {
        const Lattice lat(3);
        const SiteCoord x{{1, 0}, 0};
        const auto nb = lat.neighbors(x);
        const std::set<SiteCoord> got(nb.begin(), nb.end());
        const std::set<SiteCoord> want{{{}, 0}, {{2, 0}, 0}, {{2, 1}, 0}, {{1, 0}, 1}, {{1, 0}, -1}};
        CHECK(got == want);
        CHECK(lat.branches({2, 1}) == std::vector<std::uint32_t>{0, 1});
    }

    TEST_CASE("malformed branch index is an encoding error") {
        const Lattice lat(3);
        const std::vector<std::uint32_t> root_bad{3};
        const std::vector<std::uint32_t> inner_bad{0, 2};
        CHECK_THROWS_AS(lat.from_branches(root_bad), EncodingError);
        CHECK_THROWS_AS(lat.from_branches(inner_bad), EncodingError);
        const std::vector<std::uint32_t> ok{2, 1, 0};
        const TreeVertex v = lat.from_branches(ok);
        CHECK(lat.branches(v) == ok);
    }

    TEST_CASE("sphere sizes") {
        CHECK(Lattice(3).sphere(1).size() == 3);
        CHECK(Lattice(3).sphere(4).size() == 24);
        CHECK(Lattice(4).sphere(2).size() == 12);
        CHECK(Lattice(3).sphere(0).size() == 1);
        for (int d : {3, 4, 6})
            for (int n = 0; n <= 6; ++n) {
                const Lattice lat(d);
                const auto s = lat.sphere(n);
                CHECK(s.size() == lat.sphere_size(n));
                CHECK(std::all_of(s.begin(), s.end(), [&](TreeVertex v) { return v.depth == unsigned(n); }));
            }
    }

    TEST_CASE("level on and off the ray") {
        const Lattice lat(3);
        CHECK(level(lat, TreeVertex{}) == 0);
        CHECK(level(lat, TreeVertex{2, 0}) == -2);
        CHECK(level(lat, TreeVertex{1, 1}) == 1);
    }

    TEST_CASE("level agrees with the digit oracle on B_T(7)") {
        for (int d : {3, 5})
            for (std::uint32_t ray = 0; ray + 1 < static_cast<std::uint32_t>(d); ++ray) {
                const Lattice lat(d);
                for (int n = 0; n <= 7; ++n)
                    for (TreeVertex v : lat.sphere(n)) REQUIRE(level(lat, v, ray) == tdz_test::level_by_digits(lat, v, ray));
            }
    }

    TEST_CASE("relative level identities") {
        const Lattice lat(3);
        std::vector<TreeVertex> ball;
        for (int n = 0; n <= 6; ++n)
            for (TreeVertex v : lat.sphere(n)) ball.push_back(v);
        for (TreeVertex x : ball) {
            CHECK(level_relative(lat, TreeVertex{}, x) == level(lat, x));
            CHECK(level_relative(lat, x, x) == 0);
        }
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<std::size_t> pick(0, ball.size() - 1);
        for (int i = 0; i < 200; ++i) {
            const TreeVertex x = ball[pick(rng)], y = ball[pick(rng)];
            CHECK(level(lat, x) == level(lat, y) + level_relative(lat, y, x));
        }
    }

    TEST_CASE("region counts match the layer oracle") {
        const Lattice lat3(3);
        Region s(lat3, RegionShape::strip(1, 0));
        CHECK(s.vertex_count() == 4);
        CHECK(s.edge_count() == 3);
        Region b1(lat3, RegionShape::ball(1));
        CHECK(b1.vertex_count() == 6);
        CHECK(b1.edge_count() == 5);

        Region b2(lat3, RegionShape::ball(2));
        b2.materialize();
        CHECK(b2.vertices().size() == 20);
        CHECK(b2.edges().size() == 25);

        for (int d : {3, 4})
            for (int k = 0; k <= 4; ++k) {
                const Lattice lat(d);
                Region r(lat, RegionShape::ball(k));
                r.materialize();
                const auto [v, e] = tdz_test::product_ball_counts(d, k);
                CHECK(r.vertices().size() == v);
                CHECK(r.edges().size() == e);
                CHECK(r.vertex_count() == v);
                CHECK(r.edge_count() == e);
            }
    }

    TEST_CASE("materialized indices are canonical and consistent") {
        const Lattice lat(3);
        Region r(lat, RegionShape::strip(2, 1));
        r.materialize();
        Region again(lat, RegionShape::strip(2, 1));
        again.materialize();
        CHECK(r.vertices() == again.vertices());
        CHECK(r.edges() == again.edges());
        for (std::size_t i = 0; i < r.edges().size(); ++i) {
            const auto [a, b] = lat.endpoints(r.edges()[i]);
            CHECK(r.edge_ends()[i].first == r.index_of(a));
            CHECK(r.edge_ends()[i].second == r.index_of(b));
            CHECK(r.contains(r.edges()[i]));
        }
        CHECK(r.index_of(SiteCoord{{}, 5}) == -1);
    }

    TEST_CASE("edge budget refusal") {
        const Lattice lat(3);
        Region r(lat, RegionShape::ball(6));
        CHECK_THROWS_AS(r.materialize(100), ResourceError);
        CHECK_THROWS_AS(Region(lat, RegionShape::ball(-1)), ConfigError);
        CHECK_THROWS_AS(Lattice(2), DomainError);
    }

    TEST_CASE("edge_between rejects non-adjacent sites") {
        const Lattice lat(3);
        CHECK_THROWS_AS(lat.edge_between(SiteCoord{}, SiteCoord{{2, 0}, 0}), DomainError);
        const EdgeCoord e = lat.edge_between(SiteCoord{}, SiteCoord{{}, 1});
        CHECK(e.kind == EdgeKind::Line);
        CHECK(lat.edge_between(SiteCoord{{}, 1}, SiteCoord{}) == e);
    }
}
