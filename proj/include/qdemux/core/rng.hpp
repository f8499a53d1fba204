// Deterministic random streams keyed by (seed, stream id).
//
// Every stochastic stage draws from a stream whose identity is fixed by what
// it simulates (which pulse block, which process), never by which worker
// thread happens to run it. Two runs with the same seed therefore produce the
// same output regardless of the number of threads.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qdemux {

struct RngStreamSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

/// Stream purposes; the high byte of a stream id.
enum class StreamKind : std::uint64_t {
    blinking = 1,
    block = 2,
    hom = 3,
    debug = 4,
    detection = 5,
    test = 15,
};

/// Stream id for `kind`, indexed by `index` (e.g. a pulse-block number).
constexpr std::uint64_t stream_id(StreamKind kind, std::uint64_t index = 0)
{
    return (static_cast<std::uint64_t>(kind) << 56) | (index & ((1ULL << 56) - 1));
}

class RngStream {
public:
    explicit RngStream(const RngStreamSpec& spec);
    RngStream(std::uint64_t seed, std::uint64_t stream) : RngStream(RngStreamSpec{seed, stream}) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() { return 1.0 - uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double mean) { return -mean * std::log(uniform_open0()); }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double normal();

    /// Number of failures before the first success of a Bernoulli(p) process.
    /// Saturates at UINT64_MAX for p == 0.
    std::uint64_t geometric(double p);

private:
    std::mt19937_64 engine_;
};

}  // namespace qdemux
