#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace shgb {

/// SplitMix64 finalizer; used to derive independent master seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0)
{
    return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

/// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

/// Counter-based stream: key = master seed, counter = (stream id, draw index).
/// Stream k of seed s is the same sequence no matter which thread runs it.
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class PhiloxStream {
public:
    using result_type = std::uint64_t;

    PhiloxStream(std::uint64_t master_seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
          stream_(stream)
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        if (have_ == 0) {
            const auto out = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                            static_cast<std::uint32_t>(stream_),
                                            static_cast<std::uint32_t>(stream_ >> 32)},
                                           key_);
            buf_[0] = (std::uint64_t{out[1]} << 32) | out[0];
            buf_[1] = (std::uint64_t{out[3]} << 32) | out[2];
            have_ = 2;
            ++block_;
        }
        return buf_[2 - have_--];
    }

    /// Uniform draw in the open interval (0, 1).
    double uniform_open()
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    [[nodiscard]] std::uint64_t draws() const { return 2 * block_ - have_; }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int have_ = 0;
};

/// Per-trajectory random source: uniform draws straight from the stream,
/// normals through a distribution object owned by this trajectory.
class RandomSource {
public:
    RandomSource(std::uint64_t master_seed, std::uint64_t stream) : bits_(master_seed, stream) {}

    double uniform() { return bits_.uniform_open(); }
    double normal(double mean, double stddev)
    {
        return normal_(bits_, std::normal_distribution<double>::param_type(mean, stddev));
    }
    PhiloxStream& bits() { return bits_; }

private:
    PhiloxStream bits_;
    std::normal_distribution<double> normal_;
};

} // namespace shgb
