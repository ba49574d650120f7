#pragma once

// Counter-based edge weights realizing the uniform coupling: every edge e
// gets one uniform X_e in [0,1), and the configuration at parameter p opens
// exactly the edges with X_e < p. Weights are a pure function of
// (master_seed, trial_index, edge), so evaluation order and thread count
// never change a sample.

#include <array>
#include <cstdint>

#include "tdz/lattice.hpp"

namespace tdz {

// Philox4x32-10 (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) {
        constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
        constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class WeightField {
public:
    WeightField(const Lattice& lat, std::uint64_t master_seed, std::uint64_t trial_index)
        : lat_(&lat), seed_(master_seed), trial_(trial_index) {
        const std::uint64_t k = splitmix64(master_seed ^ splitmix64(trial_index >> 32));
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    }

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t trial_index() const { return trial_; }
    const Lattice& lattice() const { return *lat_; }

    // X_e in [0,1) with 53 random bits.
    double weight(const EdgeCoord& e) const {
        auto ctr = lat_->edge_counter(e);
        ctr[3] = static_cast<std::uint32_t>(trial_);
        const auto out = Philox4x32::apply(ctr, key_);
        const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32 | out[1]) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    bool open(const EdgeCoord& e, double p) const { return weight(e) < p; }

private:
    const Lattice* lat_;
    std::uint64_t seed_;
    std::uint64_t trial_;
    Philox4x32::Key key_{};
};

}  // namespace tdz
