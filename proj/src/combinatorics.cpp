#include "tdz/combinatorics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tdz/error.hpp"

namespace tdz {

namespace {

std::uint64_t checked_pow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base)
            throw ResourceError("census count overflows 64 bits");
        r *= base;
    }
    return r;
}

void require_b(int b) {
    if (b < 2) throw DomainError("branching number b must be >= 2, got " + std::to_string(b));
}

}  // namespace

std::uint64_t stacey_count(int n, int t, int b) {
    require_b(b);
    if (n < 0) throw DomainError("n must be >= 0");
    if (t < 0 || t > n) throw DomainError("t = " + std::to_string(t) + " outside 0.." + std::to_string(n));
    if (t == n) return 1;
    if (t == 0) return checked_pow(static_cast<std::uint64_t>(b), n);
    const std::uint64_t tail = checked_pow(static_cast<std::uint64_t>(b), n - t - 1);
    if (tail > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(b - 1))
        throw ResourceError("census count overflows 64 bits");
    return static_cast<std::uint64_t>(b - 1) * tail;
}

LevelCensus LevelCensus::compute(int n, int b) {
    LevelCensus c{n, b, {}};
    c.counts.resize(static_cast<std::size_t>(n) + 1);
    for (int t = 0; t <= n; ++t) c.counts[static_cast<std::size_t>(t)] = stacey_count(n, t, b);
    return c;
}

std::uint64_t LevelCensus::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) {
        if (s > std::numeric_limits<std::uint64_t>::max() - c) throw ResourceError("census total overflows 64 bits");
        s += c;
    }
    return s;
}

double a_n_direct(int n, double z, int b) {
    require_b(b);
    if (!(z > 0)) throw DomainError("z must be > 0");
    if (n < 0) throw DomainError("n must be >= 0");
    if (n == 0) return 1.0;
    // (bz)^n + sum_{t=1}^{n-1} (b-1) b^{n-t-1} z^{n-2t} + z^{-n}
    double sum = std::pow(b * z, n) + std::pow(z, -n);
    for (int t = 1; t <= n - 1; ++t) sum += (b - 1) * std::pow(static_cast<double>(b), n - t - 1) * std::pow(z, n - 2 * t);
    return sum;
}

double a_n_closed(int n, double z, int b) {
    require_b(b);
    if (!(z > 0)) throw DomainError("z must be > 0");
    if (n < 0) throw DomainError("n must be >= 0");
    if (n == 0) return 1.0;
    const double bd = b;
    const double den = bd * z * z - 1.0;
    if (std::abs(den) < kSingularSwitch) return std::pow(std::sqrt(bd), n) * ((n + 1) - (n - 1) / bd);
    const double num = std::pow(bd, n - 1) * std::pow(z, n) * (bd * bd * z * z - 1.0) + std::pow(z, -n) * (z * z - 1.0);
    return num / den;
}

bool check_reflection(int n, double z, int b) {
    const double a = a_n_closed(n, z, b);
    const double r = a_n_closed(n, 1.0 / (b * z), b);
    return std::abs(a - r) <= 1e-10 * a;
}

double a_n_weighted_tail(int n_cut, double r, double z, int b) {
    require_b(b);
    if (!(z > 0) || r < 0) throw DomainError("tail needs z > 0 and r >= 0");
    if (r == 0) return 0.0;
    const double bd = b;
    const double q1 = r * bd * z;  // ratio of the (bz)^n part
    const double q2 = r / z;       // ratio of the z^{-n} part
    if (q1 >= 1.0 || q2 >= 1.0)
        throw DomainError("tail diverges: need r < z < 1/(r b), got r=" + std::to_string(r) + " z=" + std::to_string(z));
    const int N = n_cut;
    auto geo = [N](double q) { return std::pow(q, N + 1) / (1.0 - q); };
    const double den = bd * z * z - 1.0;
    if (std::abs(den) < 1e-6) {
        // a_n = q^n-weighted arithmetic-geometric series at b z^2 = 1.
        const double q = r * std::sqrt(bd);
        const double s0 = geo(q);
        const double s1 = std::pow(q, N + 1) * ((N + 1) - N * q) / ((1.0 - q) * (1.0 - q));
        return (1.0 - 1.0 / bd) * s1 + (1.0 + 1.0 / bd) * s0;
    }
    return ((bd * bd * z * z - 1.0) / bd * geo(q1) + (z * z - 1.0) * geo(q2)) / den;
}

}  // namespace tdz
