#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace qdetect {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A stream is identified by (key, stream id); the i-th block of output is a
/// pure function of (key, stream id, i), so trajectories can be generated in
/// any order or on any thread and still reproduce bit for bit.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block counter, Key key)
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t(kMul0) * counter[0];
            const std::uint64_t p1 = std::uint64_t(kMul1) * counter[2];
            counter = {std::uint32_t(p1 >> 32) ^ counter[1] ^ key[0], std::uint32_t(p1),
                       std::uint32_t(p0 >> 32) ^ counter[3] ^ key[1], std::uint32_t(p0)};
        }
        return counter;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Sequential uniform draws from one Philox stream.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t key, std::uint64_t stream_id)
        : key_{std::uint32_t(key), std::uint32_t(key >> 32)},
          stream_lo_(std::uint32_t(stream_id)),
          stream_hi_(std::uint32_t(stream_id >> 32))
    {
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform()
    {
        if (pos_ == 4) refill();
        const std::uint64_t hi = buffer_[pos_++];
        if (pos_ == 4) refill();
        const std::uint64_t lo = buffer_[pos_++];
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return double(bits) * 0x1.0p-53;
    }

    /// Exponential variate with the given rate.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Standard normal variate (Box–Muller, one value per call).
    double normal()
    {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    void refill()
    {
        buffer_ = Philox4x32::generate({std::uint32_t(block_), std::uint32_t(block_ >> 32), stream_lo_, stream_hi_},
                                       key_);
        ++block_;
        pos_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t block_ = 0;
    Philox4x32::Block buffer_{};
    int pos_ = 4;
};

}  // namespace qdetect
