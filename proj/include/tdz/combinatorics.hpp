#pragma once

// Level census of tree spheres and the generating function
// a_n(z) = sum_{|x| = n} z^{L(x)}.

#include <cstdint>
#include <vector>

namespace tdz {

// Number of x with |x| = n and L(x) = n - 2t, for branching number b = d - 1:
// b^n at t = 0, (b-1) b^{n-t-1} for 0 < t < n, and 1 at t = n.
// Throws DomainError for t outside 0..n and ResourceError on 64-bit overflow.
std::uint64_t stacey_count(int n, int t, int b);

struct LevelCensus {
    int n = 0;
    int b = 2;
    std::vector<std::uint64_t> counts;  // counts[t], t = 0..n

    static LevelCensus compute(int n, int b);
    std::uint64_t total() const;
};

// a_n(z) summed term by term over the census.
double a_n_direct(int n, double z, int b);

// Rational closed form; switches to the removable-singularity branch
// sqrt(b)^n ((n+1) - (n-1)/b) when |b z^2 - 1| < kSingularSwitch.
double a_n_closed(int n, double z, int b);
inline constexpr double kSingularSwitch = 1e-9;

// |a_n(z) - a_n(1/(bz))| <= 1e-10 a_n(z).
bool check_reflection(int n, double z, int b);

// sum_{n > n_cut} r^n a_n(z); finite when r b z < 1 and r < z.
// Used as the geometric tail of J_m sums.
double a_n_weighted_tail(int n_cut, double r, double z, int b);

}  // namespace tdz
