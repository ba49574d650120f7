#include <doctest.h>

#include "tdz/error.hpp"
#include "tdz/inversion.hpp"

using namespace tdz;

namespace {

PcDirectConfig small_direct() {
    PcDirectConfig c;
    c.tol = 0.04;
    c.r_max = 16;
    c.sampling.trials = 800;
    c.sampling.seed = 3;
    return c;
}

}  // namespace

TEST_SUITE("inversion") {
    TEST_CASE("direct method brackets and is deterministic") {
        const Lattice lat(3);
        const PcResult a = estimate_pc_direct(lat, small_direct());
        CHECK(a.method == "direct");
        CHECK(a.lo < a.hi);
        REQUIRE_FALSE(a.probes.empty());
        CHECK(a.probes.front().p == 0.0);
        CHECK(a.probes.front().verdict == -1);
        if (a.status == PcStatus::Decided) CHECK(a.hi - a.lo <= 0.04);
        // p_c(T_3 x Z) lies between 1/(d+1) and 1/(d-1).
        CHECK(a.hi > 0.25);
        CHECK(a.lo < 0.5);
        const PcResult b = estimate_pc_direct(lat, small_direct());
        CHECK(a.lo == b.lo);
        CHECK(a.hi == b.hi);
        CHECK(a.probes.size() == b.probes.size());
    }

    TEST_CASE("bracket ends are backed by decided probes") {
        const Lattice lat(3);
        const PcResult r = estimate_pc_direct(lat, small_direct());
        bool lo_backed = false, hi_backed = false;
        for (const auto& p : r.probes) {
            if (p.p == r.lo && p.verdict == -1) lo_backed = true;
            if (p.p == r.hi && p.verdict == 1) hi_backed = true;
        }
        CHECK(lo_backed);
        CHECK(hi_backed);
    }

    TEST_CASE("alpha method on a small configuration") {
        const Lattice lat(3);
        PcAlphaConfig c;
        c.tol = 0.05;
        c.max_escalations = 1;
        c.alpha.n_max = 10;
        c.alpha.schedule = {RegionShape::strip(12, 8)};
        c.alpha.sampling.trials = 1000;
        c.alpha.sampling.seed = 2;
        const PcResult r = estimate_pc_via_alpha(lat, c);
        CHECK(r.method == "alpha");
        CHECK(r.lo < r.hi);
        CHECK(r.probes.front().verdict == -1);
        CHECK(r.probes.front().reference == doctest::Approx(0.5));
        for (const auto& p : r.probes) {
            if (p.verdict == -1) CHECK(p.p <= r.lo);
            if (p.verdict == 1) CHECK(p.p >= r.hi);
        }
    }

    TEST_CASE("configuration errors") {
        const Lattice lat(3);
        PcDirectConfig d = small_direct();
        d.tol = 0.0;
        CHECK_THROWS_AS(estimate_pc_direct(lat, d), ConfigError);
        d = small_direct();
        d.r_ref = 16;
        CHECK_THROWS_AS(estimate_pc_direct(lat, d), ConfigError);
        PcAlphaConfig a;
        a.scan_points = 1;
        CHECK_THROWS_AS(estimate_pc_via_alpha(lat, a), ConfigError);
    }
}
