#include <doctest.h>

#include <cmath>

#include "tdz/error.hpp"
#include "tdz/estimators.hpp"

using namespace tdz;

namespace {

SamplingConfig sampling(std::uint64_t trials, std::uint64_t seed = 1, int workers = 1) {
    SamplingConfig c;
    c.trials = trials;
    c.seed = seed;
    c.workers = workers;
    return c;
}

bool within(double x, const Estimate& e, double slack = 0.0) { return e.ci_low - slack <= x && x <= e.ci_high + slack; }

}  // namespace

TEST_SUITE("estimators") {
    TEST_CASE("Wilson interval") {
        const Estimate a = wilson(50, 100);
        CHECK(a.mean == 0.5);
        CHECK(a.ci_low == doctest::Approx(0.4038315303659956).epsilon(1e-12));
        CHECK(a.ci_high == doctest::Approx(0.5961684696340044).epsilon(1e-12));
        const Estimate z = wilson(0, 100);
        CHECK(z.ci_low == doctest::Approx(0.0));
        CHECK(z.ci_high == doctest::Approx(0.03699349820698568).epsilon(1e-12));
        const Estimate s = wilson(7, 16);
        CHECK(s.ci_low == doctest::Approx(0.23098652405492354).epsilon(1e-12));
        CHECK(s.ci_high == doctest::Approx(0.6682144360118811).epsilon(1e-12));
    }

    TEST_CASE("tau at p = 0 and p = 1") {
        const Lattice lat(3);
        for (int n = 1; n <= 4; ++n) {
            CHECK(estimate_tau(lat, n, 0.0, 6, sampling(200)).mean == 0.0);
            CHECK(estimate_tau(lat, n, 1.0, 6, sampling(200)).mean == 1.0);
        }
        CHECK(estimate_tau(lat, 0, 0.0, 6, sampling(10)).mean == 1.0);
    }

    TEST_CASE("ball smaller than the target is an impossible event") {
        const Lattice lat(3);
        CHECK_THROWS_AS(estimate_tau(lat, 5, 0.5, 3, sampling(10)), ConfigError);
    }

    TEST_CASE("pure tree: tau = p^n") {
        const Lattice lat(3);
        for (double p : {0.3, 0.6})
            for (int n : {1, 3}) {
                const Estimate e = estimate_tau(lat, n, p, RegionShape::strip(n + 1, 0), sampling(20000));
                CHECK(within(std::pow(p, n), e));
                const Estimate f = estimate_tau_fiber(lat, n, p, RegionShape::strip(n + 1, 0), sampling(20000));
                CHECK(f.mean == e.mean);
            }
    }

    TEST_CASE("fiber event contains the point event") {
        const Lattice lat(3);
        for (int n : {1, 2, 4}) {
            const auto region = RegionShape::strip(6, 4);
            const Estimate pt = estimate_tau(lat, n, 0.4, region, sampling(2000));
            const Estimate fb = estimate_tau_fiber(lat, n, 0.4, region, sampling(2000));
            CHECK(fb.hits >= pt.hits);
        }
    }

    TEST_CASE("fiber: strip and ball runs agree below p_c") {
        const Lattice lat(3);
        const Estimate s = estimate_tau_fiber(lat, 3, 0.25, RegionShape::strip(6, 8), sampling(20000, 1));
        const Estimate b = estimate_tau_fiber(lat, 3, 0.25, RegionShape::ball(12), sampling(20000, 2));
        const double sd = std::sqrt(s.mean * (1 - s.mean) / 20000 + b.mean * (1 - b.mean) / 20000);
        CHECK(std::abs(s.mean - b.mean) <= 3 * sd);
    }

    TEST_CASE("fiber: nested regions are ordered on coupled fields") {
        // strip(6, 8) lies inside ball(14); above p_c the truncation is visible
        // but can only lower the estimate.
        const Lattice lat(3);
        const Estimate s = estimate_tau_fiber(lat, 3, 0.45, RegionShape::strip(6, 8), sampling(3000, 4));
        const Estimate b = estimate_tau_fiber(lat, 3, 0.45, RegionShape::ball(14), sampling(3000, 4));
        CHECK(b.hits >= s.hits);
    }

    TEST_CASE("layer reflection symmetry") {
        const Lattice lat(3);
        for (int k : {1, 2}) {
            const auto region = RegionShape::strip(4, 4);
            const Estimate up = estimate_tau_site(lat, {{2, 0}, k}, 0.45, region, sampling(20000, 1));
            const Estimate dn = estimate_tau_site(lat, {{2, 0}, -k}, 0.45, region, sampling(20000, 2));
            const double sd = std::sqrt(up.mean * (1 - up.mean) / 20000 + dn.mean * (1 - dn.mean) / 20000);
            CHECK(std::abs(up.mean - dn.mean) <= 3 * sd);
        }
    }

    TEST_CASE("results do not depend on the worker count") {
        const Lattice lat(3);
        AlphaConfig c;
        c.n_max = 6;
        c.schedule = {RegionShape::strip(8, 2)};
        c.sampling = sampling(600, 5, 1);
        const RateEstimate one = estimate_alpha(lat, 0.3, c);
        c.sampling.workers = 4;
        const RateEstimate four = estimate_alpha(lat, 0.3, c);
        REQUIRE(one.series.points.size() == four.series.points.size());
        for (std::size_t i = 0; i < one.series.points.size(); ++i)
            CHECK(one.series.points[i].estimate.mean == four.series.points[i].estimate.mean);
        CHECK(one.slope_fit == four.slope_fit);
        CHECK(one.slope_low == four.slope_low);
        CHECK(one.slope_high == four.slope_high);
    }

    TEST_CASE("alpha at p = 0 and near 1") {
        const Lattice lat(3);
        AlphaConfig c;
        c.n_max = 6;
        c.schedule = {RegionShape::strip(8, 1)};
        c.sampling = sampling(200);
        const RateEstimate zero = estimate_alpha(lat, 0.0, c);
        CHECK(zero.sup_root == 0.0);
        CHECK(zero.slope_fit == 0.0);
        const RateEstimate high = estimate_alpha(lat, 0.98, c);
        CHECK(high.capped);
        CHECK(high.sup_root <= 1.0);
        CHECK_FALSE(high.warnings.empty());
    }

    TEST_CASE("alpha on the pure tree recovers p") {
        const Lattice lat(3);
        AlphaConfig c;
        c.n_max = 10;
        c.fit_from = 2;
        c.schedule = {RegionShape::strip(11, 0)};
        c.sampling = sampling(4000);
        for (double p : {0.5, 0.7}) {
            const RateEstimate r = estimate_alpha(lat, p, c);
            CHECK(r.slope_low <= p);
            CHECK(p <= r.slope_high);
        }
    }

    TEST_CASE("coupled alpha grid is monotone index by index") {
        const Lattice lat(3);
        AlphaConfig c;
        c.n_max = 6;
        c.schedule = {RegionShape::strip(8, 2)};
        c.sampling = sampling(400);
        const std::vector<double> ps{0.1, 0.2, 0.3, 0.4, 0.5};
        const auto grid = estimate_alpha_grid(lat, ps, c);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            CHECK(grid[i].sup_root >= grid[i - 1].sup_root);
            for (std::size_t k = 0; k < grid[i].series.points.size(); ++k)
                CHECK(grid[i].series.points[k].estimate.mean >= grid[i - 1].series.points[k].estimate.mean);
        }
    }

    TEST_CASE("beta on the pure line recovers p") {
        const Lattice lat(3);
        BetaConfig c;
        c.m_max = 8;
        c.fit_from = 2;
        c.schedule = {RegionShape::strip(0, 10)};
        c.sampling = sampling(4000);
        const RateEstimate r = estimate_beta(lat, 0.6, c);
        CHECK(r.slope_low <= 0.6);
        CHECK(0.6 <= r.slope_high);
        c.sampling = sampling(100);
        CHECK(estimate_beta(lat, 0.0, c).sup_root == 0.0);
    }

    TEST_CASE("layer truncation") {
        int k = 0;
        while (2 * std::pow(0.5, k + 1) / 0.5 >= 1e-3) ++k;
        CHECK(choose_k_cut(0.5, 1e-3) == k);
        CHECK(choose_k_cut(0.5, 1e-3) == 11);
        CHECK_THROWS_AS(choose_k_cut(1.0, 1e-3), DomainError);
    }

    TEST_CASE("I_n at p = 0 and refusal without vertical decay") {
        const Lattice lat(3);
        const auto s = estimate_I_series(lat, 0.0, 3, 2, RegionShape::strip(5, 4), 0.5, sampling(50));
        REQUIRE(s.size() == 4);
        CHECK(s[0].value.mean == 1.0);
        for (int n = 1; n <= 3; ++n) CHECK(s[static_cast<std::size_t>(n)].value.mean == 0.0);
        CHECK(s[2].tail_bound == doctest::Approx(2 * std::pow(0.5, 3) / 0.5));
        CHECK_THROWS_AS(estimate_I_series(lat, 0.3, 3, 2, RegionShape::strip(5, 4), 1.0, sampling(50)), DomainError);
    }

    TEST_CASE("J at p = 0") {
        const Lattice lat(3);
        JConfig c;
        c.z = 0.9;
        c.n_cut = 4;
        c.m_max = 2;
        c.region = RegionShape::strip(6, 4);
        c.alpha_upper = 0.5;
        c.sampling = sampling(50);
        const auto s = estimate_J_series(lat, 0.0, c);
        CHECK(s[0].value.mean == 1.0);
        CHECK(s[1].value.mean == 0.0);
        CHECK(s[2].value.mean == 0.0);
    }

    TEST_CASE("J window errors") {
        const Lattice lat(3);
        JConfig c;
        c.n_cut = 4;
        c.m_max = 1;
        c.region = RegionShape::strip(6, 4);
        c.sampling = sampling(10);
        c.alpha_upper = 0.8;  // 0.8^2 * 2 >= 1: empty window
        CHECK_THROWS_AS(estimate_J_series(lat, 0.3, c), DomainError);
        c.alpha_upper = 0.5;  // window (0.5, 1)
        c.z = 1.2;
        CHECK_THROWS_AS(estimate_J_series(lat, 0.3, c), ConfigError);
        c.require_window = false;
        const auto s = estimate_J_series(lat, 0.3, c);
        CHECK(std::isinf(s[0].tail_bound));
        CHECK_FALSE(s[0].window_ok);
        CHECK(j_window_contains(0.5, 0.9, 2));
        CHECK_FALSE(j_window_contains(0.5, 1.0, 2));
    }

    TEST_CASE("J reflection z <-> 1/(bz) on coupled fields") {
        const Lattice lat(3);
        JConfig c;
        c.n_cut = 6;
        c.m_max = 2;
        c.region = RegionShape::strip(8, 4);
        c.alpha_upper = 0.45;
        c.sampling = sampling(400);
        c.z = 0.8;
        const auto a = estimate_J_series(lat, 0.25, c);
        c.z = 1.0 / (2 * 0.8);
        const auto b = estimate_J_series(lat, 0.25, c);
        for (std::size_t m = 0; m < a.size(); ++m)
            CHECK(a[m].value.mean == doctest::Approx(b[m].value.mean).epsilon(1e-9));
    }

    TEST_CASE("level-weighted and sphere-averaged J estimate the same sum") {
        const Lattice lat(3);
        JConfig c;
        c.n_cut = 5;
        c.m_max = 1;
        c.z = 0.9;
        c.region = RegionShape::strip(7, 3);
        c.alpha_upper = 0.5;
        c.sampling = sampling(6000, 1);
        const auto s = estimate_J_series(lat, 0.3, c);
        c.estimator = JEstimator::LevelWeighted;
        c.sampling = sampling(6000, 2);
        const auto l = estimate_J_series(lat, 0.3, c);
        for (std::size_t m = 0; m < s.size(); ++m) {
            const double hw = (s[m].value.ci_high - s[m].value.ci_low) / 2 + (l[m].value.ci_high - l[m].value.ci_low) / 2;
            CHECK(std::abs(s[m].value.mean - l[m].value.mean) <= 1.5 * hw);
        }
    }

    TEST_CASE("level-weighted J does not depend on the reference ray") {
        const Lattice lat(3);
        JConfig c;
        c.n_cut = 5;
        c.m_max = 1;
        c.z = 0.9;
        c.region = RegionShape::strip(7, 3);
        c.alpha_upper = 0.5;
        c.estimator = JEstimator::LevelWeighted;
        c.sampling = sampling(6000, 3);
        const auto a = estimate_J_series(lat, 0.3, c);
        c.ray = 1;
        c.sampling = sampling(6000, 4);
        const auto b = estimate_J_series(lat, 0.3, c);
        for (std::size_t m = 0; m < a.size(); ++m) {
            const double hw = (a[m].value.ci_high - a[m].value.ci_low) / 2 + (b[m].value.ci_high - b[m].value.ci_low) / 2;
            CHECK(std::abs(a[m].value.mean - b[m].value.mean) <= 1.5 * hw);
        }
    }

    TEST_CASE("phi slope of a geometric series") {
        std::vector<JResult> s;
        for (int m = 0; m <= 5; ++m) {
            JResult r;
            r.m = m;
            r.value.mean = 3.0 * std::pow(0.4, m);
            s.push_back(r);
        }
        CHECK(phi_slope(s) == doctest::Approx(0.4).epsilon(1e-12));
    }
}
