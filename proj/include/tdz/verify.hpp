#pragma once

// Self-checks that run without external data: the combinatorial identities,
// the level-function cocycle, exact enumeration against Monte Carlo, the
// exact inequality suites on the shipped tiny regions, and coupling
// monotonicity. Each check returns counts; run_suite wraps them as JSON.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdz/lattice.hpp"
#include "tdz/percolation.hpp"

namespace tdz {

struct ShippedRegion {
    std::string name;
    int d = 3;
    std::vector<EdgeCoord> edges;
};

// Tiny regions with at most 22 edges, each containing o.
std::vector<ShippedRegion> shipped_regions();
Region materialize_shipped(const ShippedRegion& r);

// o <-> farthest vertex, o <-> a vertex at half that distance, and a pair
// not involving o.
std::vector<ConnectionEvent> shipped_events(const Region& region);

struct CheckTally {
    std::uint64_t checks = 0;
    std::uint64_t failures = 0;
    double worst = 0.0;  // largest observed error or violation
    nlohmann::json details = nlohmann::json::array();

    bool pass() const { return checks > 0 && failures == 0; }
    nlohmann::json to_json() const;
};

// a_n direct vs closed form, reflection, census totals and the singular
// branch for d in {3,4,5}, n <= 12, z in [0.2, 2].
CheckTally verify_combinatorics();

// L(x) = L(y) + L_y(x) on every pair of B_T(5) and `random_pairs` random
// pairs of B_T(8), for d = 3.
CheckTally verify_levels(std::uint64_t seed, std::uint64_t random_pairs = 10000);

struct McTally {
    std::uint64_t cells = 0;
    std::uint64_t passes = 0;
    nlohmann::json details = nlohmann::json::array();

    double pass_rate() const { return cells == 0 ? 0.0 : static_cast<double>(passes) / static_cast<double>(cells); }
    nlohmann::json to_json() const;
};

// Empirical frequency over `trials` fields vs the exact polynomial, on every
// shipped region at p in {0.2, 0.5, 0.8}.
McTally verify_oracle_mc(std::uint64_t trials, std::uint64_t seed, int workers);

struct InequalityTally {
    CheckTally fkg, bk, power;
    nlohmann::json to_json() const;
};

// FKG and BK on event pairs at p in {1/4, 1/2, 3/4}, and the power
// inequality at p in {0.3, 0.5, 0.7} with gamma in {1, 1.5, 2, 3}.
InequalityTally verify_inequalities(int workers);

// occurs(event, p) nondecreasing along an 11-point p grid for `fields`
// stored fields on ProductBall(3), d = 3.
CheckTally verify_coupling(std::uint64_t fields, std::uint64_t seed, int workers);

// suite in {combinatorics, lattice, oracle, coupling, all}; unknown names
// raise ConfigError. The report carries "pass" and per-check details.
nlohmann::json run_suite(const std::string& suite, std::uint64_t seed, int workers);

}  // namespace tdz
