#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace memdrop {

/// Seeded generator used by every stochastic operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform and normal draws are derived here rather than through
/// std::*_distribution, whose algorithms are implementation-defined, so that
/// the same seed reproduces the same operation sequence on any toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal();

    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a over the raw bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Independent seed for a named sub-stream of an experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_tag) noexcept;

}  // namespace memdrop
