#pragma once

// Exact ground truth on tiny regions: every one of the 2^|E| configurations
// is enumerated and event counts are aggregated by open-edge count, giving
// P(A) = sum_j c_j p^j (1-p)^{|E|-j} with exact integer c_j.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tdz/lattice.hpp"
#include "tdz/percolation.hpp"

namespace tdz {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr int kDefaultEnumerationBudget = 24;

struct ExactPolynomial {
    int num_edges = 0;
    std::vector<std::uint64_t> coeffs;  // c_j, j = 0..num_edges

    double eval(double p) const;
    Rational eval(const Rational& p) const;
    // 0 <= c_j <= binomial(|E|, j) for every j.
    bool well_formed() const;
    std::string to_string() const;
};

// Event resolved against the dense indices of a materialized region.
struct DenseEvent {
    std::uint32_t source = 0;
    std::uint64_t target_mask = 0;  // vertices satisfying the target

    bool trivial() const { return (target_mask >> source) & 1u; }
};

DenseEvent compile_event(const ConnectionEvent& event, const Region& region);

// Throws ResourceError when the region has more than edge_budget edges.
ExactPolynomial exact_probability(const ConnectionEvent& event, const Region& region,
                                  int edge_budget = kDefaultEnumerationBudget, int workers = 0);

struct InequalityCheck {
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
    bool exact = false;  // decided in rational arithmetic
};

// FKG for increasing events: P(A and B) >= P(A) P(B), decided exactly at the
// rational value of p.
InequalityCheck check_fkg(const ConnectionEvent& a, const ConnectionEvent& b, const Region& region, const Rational& p,
                          int edge_budget = kDefaultEnumerationBudget, int workers = 0);

// BK: P(A o B) <= P(A) P(B). A o B holds in a configuration when A and B have
// edge-disjoint open witness paths.
InequalityCheck check_bk(const ConnectionEvent& a, const ConnectionEvent& b, const Region& region, const Rational& p,
                         int edge_budget = kDefaultEnumerationBudget, int workers = 0);

// P_{p^gamma}(A) <= P_p(A)^gamma (+1e-12), evaluated in floating point.
InequalityCheck check_power_inequality(const ConnectionEvent& a, const Region& region, double p, double gamma,
                                       int edge_budget = kDefaultEnumerationBudget, int workers = 0);

// Per-configuration disjoint occurrence for dense events. Same-pair events use
// a two-unit flow; distinct pairs enumerate simple witness paths of A and
// test B on the remaining open edges.
bool disjoint_occurrence(const DenseGraph& g, const DenseEvent& a, const DenseEvent& b, std::uint64_t open_mask);
bool disjoint_occurrence_by_paths(const DenseGraph& g, const DenseEvent& a, const DenseEvent& b,
                                  std::uint64_t open_mask);
// Number of edge-disjoint open paths from a.source to a's target, capped at 2.
int disjoint_path_count(const DenseGraph& g, const DenseEvent& a, std::uint64_t open_mask);

// Exact polynomials for A, B, A and B, and A o B in a single enumeration.
struct PairPolynomials {
    ExactPolynomial a, b, both, disjoint;
};
PairPolynomials exact_pair(const ConnectionEvent& a, const ConnectionEvent& b, const Region& region, bool with_disjoint,
                           int edge_budget = kDefaultEnumerationBudget, int workers = 0);

struct McComparison {
    double empirical = 0.0;
    double exact = 0.0;
    double sigma = 0.0;  // sqrt(exact (1 - exact) / trials)
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    bool pass = false;   // |empirical - exact| <= 3 sigma
};

// Monte Carlo frequency of the event under the weight field against the
// exact polynomial.
McComparison mc_vs_exact(const ConnectionEvent& event, const Region& region, double p, std::uint64_t trials,
                         std::uint64_t seed, int workers = 0, int edge_budget = kDefaultEnumerationBudget);

}  // namespace tdz
