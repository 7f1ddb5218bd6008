#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace bcdp {

/// Seeded random source used everywhere a draw is made.
///
/// Distributions are computed from raw 64-bit words rather than through
/// <random> distribution objects, whose output is implementation-defined;
/// this keeps every stream bit-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    double normal();

    double gamma(double shape);

    std::string state() const;
    void set_state(const std::string& text);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes a base seed with a stream index into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace bcdp
