// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include <json.hpp>

#include "tdz/tdz.h"

TEST_CASE("version and strings") {
    CHECK(std::string(tdz_version()) == "1.0.0");
    tdz_free_string(nullptr);
}

TEST_CASE("status codes and last error") {
    std::uint64_t n = 0;
    CHECK(tdz_sphere_size(2, 1, &n) == TDZ_ERR_DOMAIN);
    CHECK(std::string(tdz_last_error()).find("d must be >= 3") != std::string::npos);
    CHECK(tdz_sphere_size(3, 4, nullptr) == TDZ_ERR_CONFIG);
    CHECK(tdz_sphere_size(3, 4, &n) == TDZ_OK);
    CHECK(n == 24);

    const std::uint32_t bad[] = {3};
    tdz_vertex v;
    CHECK(tdz_vertex_from_branches(3, bad, 1, &v) == TDZ_ERR_ENCODING);

    tdz_region* r = nullptr;
    CHECK(tdz_region_create(3, {TDZ_REGION_BALL, 100, 0}, &r) == TDZ_ERR_RESOURCE);
    CHECK(r == nullptr);
}

TEST_CASE("combinatorics and levels") {
    std::uint64_t c = 0;
    CHECK(tdz_stacey_count(2, 0, 2, &c) == TDZ_OK);
    CHECK(c == 4);
    double a = 0.0, b = 0.0;
    CHECK(tdz_an_direct(2, 0.7, 2, &a) == TDZ_OK);
    CHECK(tdz_an_closed(2, 0.7, 2, &b) == TDZ_OK);
    CHECK(a == doctest::Approx(4 * 0.49 + 1 + 1 / 0.49));
    CHECK(b == doctest::Approx(a).epsilon(1e-12));
    int ok = 0;
    CHECK(tdz_check_reflection(5, 0.8, 2, &ok) == TDZ_OK);
    CHECK(ok == 1);

    const std::uint32_t path[] = {0, 0};
    tdz_vertex v;
    REQUIRE(tdz_vertex_from_branches(3, path, 2, &v) == TDZ_OK);
    std::int64_t lv = 0;
    CHECK(tdz_level(3, v, 0, &lv) == TDZ_OK);
    CHECK(lv == -2);
    CHECK(tdz_level_relative(3, v, v, 0, &lv) == TDZ_OK);
    CHECK(lv == 0);
}

TEST_CASE("region handle") {
    tdz_region* r = nullptr;
    REQUIRE(tdz_region_create(3, {TDZ_REGION_BALL, 2, 0}, &r) == TDZ_OK);
    std::uint64_t nv = 0, ne = 0;
    CHECK(tdz_region_counts(r, &nv, &ne) == TDZ_OK);
    CHECK(nv == 20);
    CHECK(ne == 25);
    char* s = nullptr;
    CHECK(tdz_region_describe(r, &s) == TDZ_OK);
    CHECK(std::string(s) == "ball(2)");
    tdz_free_string(s);
    tdz_region_destroy(r);
}

TEST_CASE("tau and impossible events") {
    tdz_sampling s;
    tdz_sampling_default(&s);
    s.trials = 500;
    tdz_estimate e;
    CHECK(tdz_estimate_tau(3, 2, 1.0, {TDZ_REGION_BALL, 4, 0}, &s, &e) == TDZ_OK);
    CHECK(e.mean == 1.0);
    CHECK(e.trials == 500);
    CHECK(tdz_estimate_tau(3, 5, 0.5, {TDZ_REGION_BALL, 3, 0}, &s, &e) == TDZ_ERR_CONFIG);
    CHECK(tdz_estimate_tau_fiber(3, 2, 0.0, {TDZ_REGION_STRIP, 4, 2}, &s, &e) == TDZ_OK);
    CHECK(e.mean == 0.0);
}

TEST_CASE("alpha grid handles") {
    tdz_alpha_config c;
    tdz_alpha_config_default(&c);
    const tdz_region_shape strip{TDZ_REGION_STRIP, 8, 2};
    c.n_max = 6;
    c.schedule = &strip;
    c.schedule_len = 1;
    c.sampling.trials = 300;
    c.sampling.workers = 1;
    const double ps[] = {0.0, 0.2, 0.4};
    tdz_rate* out[3] = {nullptr, nullptr, nullptr};
    REQUIRE(tdz_estimate_alpha_grid(3, ps, 3, &c, out) == TDZ_OK);
    double last = -1.0;
    for (auto* r : out) {
        tdz_rate_summary s;
        REQUIRE(tdz_rate_summary_get(r, &s) == TDZ_OK);
        CHECK(s.sup_root >= last);
        last = s.sup_root;
        CHECK(s.points == 6);
        tdz_series_point pt;
        CHECK(tdz_rate_point(r, 0, &pt) == TDZ_OK);
        CHECK(pt.index == 1);
        CHECK(tdz_rate_point(r, 99, &pt) == TDZ_ERR_CONFIG);
        CHECK(std::string(tdz_rate_quantity(r)) == "alpha");
        CHECK(std::string(tdz_rate_region(r)) == "strip(8,2)");
        tdz_rate_destroy(r);
    }
}

TEST_CASE("J window through the C API") {
    tdz_j_config c;
    tdz_j_config_default(&c);
    c.n_cut = 4;
    c.m_max = 2;
    c.region = {TDZ_REGION_STRIP, 6, 4};
    c.sampling.trials = 100;
    c.alpha_upper = 0.9;
    tdz_j_result rows[3];
    CHECK(tdz_estimate_j_series(3, 0.2, &c, rows, nullptr) == TDZ_ERR_DOMAIN);
    c.alpha_upper = 0.5;
    c.z = 1.5;
    CHECK(tdz_estimate_j_series(3, 0.2, &c, rows, nullptr) == TDZ_ERR_CONFIG);
    c.z = 0.8;
    double phi = 0.0;
    CHECK(tdz_estimate_j_series(3, 0.2, &c, rows, &phi) == TDZ_OK);
    CHECK(rows[0].window_ok == 1);
    CHECK(std::isfinite(rows[0].tail_bound));
}

TEST_CASE("pc handle") {
    tdz_pc_config c;
    tdz_pc_config_default(&c);
    c.method = TDZ_PC_DIRECT;
    c.tol = 0.05;
    c.r_max = 12;
    c.direct_sampling.trials = 400;
    tdz_pc* pc = nullptr;
    const tdz_status st = tdz_estimate_pc(3, &c, &pc);
    REQUIRE((st == TDZ_OK || st == TDZ_UNDECIDED));
    REQUIRE(pc != nullptr);
    double lo = 0, hi = 0, wall = 0;
    int decided = 0;
    CHECK(tdz_pc_interval(pc, &lo, &hi, &decided, &wall) == TDZ_OK);
    CHECK(lo < hi);
    CHECK(decided == (st == TDZ_OK ? 1 : 0));
    CHECK(tdz_pc_probe_count(pc) > 0);
    tdz_probe p;
    CHECK(tdz_pc_probe(pc, 0, &p) == TDZ_OK);
    CHECK(p.p == 0.0);
    tdz_pc_destroy(pc);
}

TEST_CASE("verify and oracle JSON") {
    char* s = nullptr;
    REQUIRE(tdz_verify_suite("combinatorics", 1, 1, &s) == TDZ_OK);
    const auto report = nlohmann::json::parse(s);
    tdz_free_string(s);
    CHECK(report["pass"] == true);
    CHECK(tdz_verify_suite("nonsense", 1, 1, &s) == TDZ_ERR_CONFIG);

    const std::uint32_t path[] = {0};
    tdz_vertex v;
    REQUIRE(tdz_vertex_from_branches(3, path, 1, &v) == TDZ_OK);
    const double ps[] = {0.5};
    REQUIRE(tdz_oracle_exact(3, {TDZ_REGION_BALL, 1, 0}, v, 0, ps, 1, &s) == TDZ_OK);
    const auto j = nlohmann::json::parse(s);
    tdz_free_string(s);
    CHECK(j["edges"] == 5);
    CHECK(j["evaluations"][0]["probability"].get<double>() == doctest::Approx(0.5));
    CHECK(tdz_oracle_exact(3, {TDZ_REGION_BALL, 2, 0}, v, 0, ps, 1, &s) == TDZ_ERR_RESOURCE);
}
