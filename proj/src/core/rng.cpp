#include "qdemux/core/rng.hpp"

#include <limits>
#include <numbers>

namespace qdemux {

namespace {

std::mt19937_64 make_engine(const RngStreamSpec& spec)
{
    // seed_seq and mt19937_64 are fully specified by the standard, so the
    // sequence is identical across toolchains.
    std::seed_seq seq{
        static_cast<std::uint32_t>(spec.seed),
        static_cast<std::uint32_t>(spec.seed >> 32),
        static_cast<std::uint32_t>(spec.stream_id),
        static_cast<std::uint32_t>(spec.stream_id >> 32),
        0x9e3779b9u,
    };
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(const RngStreamSpec& spec) : engine_(make_engine(spec)) {}

double RngStream::normal()
{
    const double u1 = uniform_open0();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::geometric(double p)
{
    if (p >= 1.0)
        return 0;
    if (p <= 0.0)
        return std::numeric_limits<std::uint64_t>::max();
    const double k = std::floor(std::log(uniform_open0()) / std::log1p(-p));
    if (k >= 1.8e19)
        return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(k);
}

}  // namespace qdemux
