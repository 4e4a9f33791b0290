#pragma once

#include <cstdint>

namespace hct {

// Counter-based stream RNG (Philox 2x64, 10 rounds). A stream is addressed
// by (base_seed, stream_index) and draw i depends only on
// (base_seed, stream_index, i): replications can run on any thread in any
// order and still reproduce bit-identically. Distinct stream indices use
// disjoint counter blocks, so streams never overlap.
class RngStream {
public:
    RngStream(std::uint64_t base_seed, std::uint64_t stream_index)
        : key_(base_seed), stream_(stream_index) {}

    std::uint64_t base_seed() const { return key_; }
    std::uint64_t stream_index() const { return stream_; }

    std::uint64_t next_u64() {
        std::uint64_t x0 = counter_++;
        std::uint64_t x1 = stream_;
        std::uint64_t k = key_;
        for (int r = 0; r < kRounds; ++r) {
            const unsigned __int128 prod =
                static_cast<unsigned __int128>(kMultiplier) * x0;
            const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
            const std::uint64_t lo = static_cast<std::uint64_t>(prod);
            x0 = hi ^ k ^ x1;
            x1 = lo;
            k += kWeylIncrement;
        }
        return x0;
    }

    // Uniform on the open interval (0,1); never returns an exact 0 or 1,
    // so the result can be fed straight into norm_quantile.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

private:
    static constexpr std::uint64_t kMultiplier = 0xD2B74407B1CE6E93ull;
    static constexpr std::uint64_t kWeylIncrement = 0x9E3779B97F4A7C15ull;
    static constexpr int kRounds = 10;

    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

// N(mean, sd^2) via inverse-CDF sampling; consumes exactly one uniform per
// call even when sd == 0, which keeps draw sequences aligned across runs
// that differ only in sd.
double draw_normal(RngStream& s, double mean, double sd);

// Bernoulli(p); consumes exactly one uniform per call.
int draw_bernoulli(RngStream& s, double p);

} // namespace hct
