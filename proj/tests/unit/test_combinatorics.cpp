#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "tdz/combinatorics.hpp"
#include "tdz/error.hpp"

using namespace tdz;

TEST_SUITE("combinatorics") {
    TEST_CASE("stacey counts") {
        CHECK(stacey_count(2, 0, 2) == 4);
        CHECK(stacey_count(2, 2, 2) == 1);
        CHECK_THROWS_AS(stacey_count(3, 4, 2), DomainError);
        CHECK_THROWS_AS(stacey_count(3, -1, 2), DomainError);
    }

    TEST_CASE("stacey counts match a census of the sphere") {
        for (int d : {3, 4}) {
            const Lattice lat(d);
            const int b = d - 1;
            for (int n = 0; n <= 6; ++n) {
                std::map<int, std::uint64_t> census;
                for (TreeVertex v : lat.sphere(n)) ++census[static_cast<int>((n - tdz_test::level_by_digits(lat, v)) / 2)];
                std::uint64_t total = 0;
                for (int t = 0; t <= n; ++t) {
                    CHECK(stacey_count(n, t, b) == census[t]);
                    total += stacey_count(n, t, b);
                }
                CHECK(total == lat.sphere_size(n));
            }
        }
        CHECK(stacey_count(5, 2, 2) == 4);
    }

    TEST_CASE("a_n values") {
        CHECK(a_n_direct(1, 1.0, 2) == doctest::Approx(3.0));
        CHECK(a_n_direct(2, 1.0, 2) == doctest::Approx(6.0));
        const double z = 0.7;
        CHECK(a_n_direct(2, z, 2) == doctest::Approx(4 * z * z + 1 + 1 / (z * z)).epsilon(1e-14));
        CHECK(a_n_closed(2, z, 2) == doctest::Approx(4 * z * z + 1 + 1 / (z * z)).epsilon(1e-12));
        CHECK(a_n_closed(2, 1.0, 2) == doctest::Approx(6.0));
        CHECK(a_n_closed(3, 1 / std::sqrt(2.0), 2) == doctest::Approx(6 * std::sqrt(2.0)).epsilon(1e-12));
        CHECK(a_n_closed(4, 0.6, 2) == doctest::Approx(a_n_direct(4, 0.6, 2)).epsilon(1e-12));
        CHECK(a_n_direct(0, 0.3, 2) == 1.0);
    }

    TEST_CASE("a_n by brute force over the sphere") {
        const Lattice lat(3);
        for (int n = 0; n <= 6; ++n)
            for (double z : {0.3, 0.8, 1.7}) {
                double sum = 0.0;
                for (TreeVertex v : lat.sphere(n)) sum += std::pow(z, static_cast<double>(tdz_test::level_by_digits(lat, v)));
                CHECK(a_n_direct(n, z, 2) == doctest::Approx(sum).epsilon(1e-12));
                CHECK(a_n_closed(n, z, 2) == doctest::Approx(sum).epsilon(1e-12));
            }
    }

    TEST_CASE("reflection") {
        CHECK(check_reflection(2, 1.0, 2));
        CHECK(a_n_direct(2, 0.5, 2) == doctest::Approx(6.0));
        CHECK(check_reflection(1, 1 / std::sqrt(2.0), 2));
        for (int b : {2, 3, 4})
            for (int n = 0; n <= 12; ++n)
                for (double z = 0.3; z <= 1.5001; z += 0.1) CHECK(check_reflection(n, z, b));
    }

    TEST_CASE("singular branch is continuous") {
        for (int b : {2, 3, 4}) {
            const double zc = 1 / std::sqrt(static_cast<double>(b));
            for (int n = 0; n <= 12; ++n) {
                CHECK(a_n_closed(n, zc, b) == doctest::Approx(a_n_direct(n, zc, b)).epsilon(1e-10));
                CHECK(a_n_closed(n, zc * (1 + 1e-7), b) == doctest::Approx(a_n_direct(n, zc * (1 + 1e-7), b)).epsilon(1e-8));
            }
        }
    }

    TEST_CASE("weighted tail") {
        // sum_{n > 3} r^n a_n(z) against a long partial sum.
        const double r = 0.3, z = 0.9;
        double partial = 0.0;
        for (int n = 4; n <= 200; ++n) partial += std::pow(r, n) * a_n_direct(n, z, 2);
        CHECK(a_n_weighted_tail(3, r, z, 2) == doctest::Approx(partial).epsilon(1e-9));
        CHECK_THROWS_AS(a_n_weighted_tail(3, 0.5, 1.5, 2), DomainError);
    }

    TEST_CASE("domain errors") {
        CHECK_THROWS_AS(a_n_direct(2, 0.0, 2), DomainError);
        CHECK_THROWS_AS(a_n_closed(-1, 1.0, 2), DomainError);
        CHECK_THROWS_AS(a_n_direct(2, 1.0, 1), DomainError);
    }
}
