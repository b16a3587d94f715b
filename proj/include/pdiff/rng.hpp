#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pdiff {

/// Counter-keyed random stream built on xoshiro256++ with splitmix64 seeding.
///
/// A stream is identified by (seed, stream_id); the same pair always yields
/// the same draw sequence, independent of platform, because every transform
/// below is defined in terms of integer operations plus IEEE double
/// arithmetic.  Streams are plain values: copy one to replay a sequence,
/// or derive independent substreams for parallel work.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
        for (auto& w : state_) w = splitmix64(x);
        // xoshiro must not start from the all-zero state
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform draw on the open interval (0, 1); never returns an endpoint,
    /// so it is safe to feed into logs and quantile functions.
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Independent child stream keyed by `id`.  Does not advance this stream,
    /// so indexed fan-out (one substream per sample) is order-free and safe
    /// to evaluate from any thread.
    RngStream substream(std::uint64_t id) const {
        std::uint64_t x = seed_ ^ (stream_id_ * 0xbf58476d1ce4e5b9ULL);
        RngStream child;
        child.seed_ = seed_;
        child.stream_id_ = splitmix64(x) ^ (id * 0x94d049bb133111ebULL + 0x2545f4914f6cdd1dULL);
        std::uint64_t y = child.stream_id_ ^ splitmix64(x);
        for (auto& w : child.state_) w = splitmix64(y);
        if ((child.state_[0] | child.state_[1] | child.state_[2] | child.state_[3]) == 0)
            child.state_[3] = 1;
        return child;
    }

    /// Draw a fresh child stream, advancing this stream.  Consecutive forks
    /// are independent of each other and of the parent's later output.
    RngStream fork() { return substream(next()); }

    std::array<std::uint64_t, 4> state() const { return state_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace pdiff
