#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A stream is identified by (key = 64-bit seed, 64-bit stream id); the
// 64-bit draw counter makes every draw addressable, so results do not
// depend on how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>

namespace kslab {

using Philox4x32Ctr = std::array<uint32_t, 4>;
using Philox4x32Key = std::array<uint32_t, 2>;

inline Philox4x32Ctr philox4x32_10(Philox4x32Ctr c, Philox4x32Key k)
{
    constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        uint64_t p0 = uint64_t(M0) * c[0];
        uint64_t p1 = uint64_t(M1) * c[2];
        uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
        uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += W0;
        k[1] += W1;
    }
    return c;
}

// Combine indices into one 64-bit stream id (SplitMix64 finaliser).
inline uint64_t mix64(uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t stream_id(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ (b + 0x632BE59BD9B4E019ull)); }

class Rng {
public:
    Rng(uint64_t seed, uint64_t stream)
        : key_{uint32_t(seed), uint32_t(seed >> 32)}, stream_(stream) {}

    uint64_t next_u64()
    {
        if (avail_ == 0) refill();
        uint64_t r = (uint64_t(buf_[4 - avail_]) << 32) | buf_[5 - avail_];
        avail_ -= 2;
        return r;
    }

    // Uniform on the open interval (0,1), 53-bit resolution.
    double uniform()
    {
        return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    uint64_t counter() const { return counter_; }

private:
    void refill()
    {
        Philox4x32Ctr c{uint32_t(counter_), uint32_t(counter_ >> 32), uint32_t(stream_), uint32_t(stream_ >> 32)};
        buf_ = philox4x32_10(c, key_);
        ++counter_;
        avail_ = 4;
    }

    Philox4x32Key key_;
    uint64_t stream_;
    uint64_t counter_ = 0;
    Philox4x32Ctr buf_{};
    int avail_ = 0;
    bool has_spare_ = false;
    double spare_ = 0;
};

} // namespace kslab
