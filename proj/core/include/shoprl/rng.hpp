// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace shoprl
{

/// Seedable, splittable random stream.
///
/// Child streams are derived by hashing the parent seed with a path of stream
/// ids, so a child never depends on how much of the parent has been consumed.
/// Sampling helpers avoid the implementation-defined std distributions so a
/// seed reproduces the same values on every standard library.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed = 0);

    /// Stream for `seed` refined by `path`, e.g. derive(run_seed, {step, query, k}).
    static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    /// Child stream of this generator's seed; independent of consumption so far.
    [[nodiscard]] Rng split(std::uint64_t stream) const;

    [[nodiscard]] std::uint64_t seed() const noexcept { return _seed; }

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

    /// Engine state as text, restorable with restore().
    [[nodiscard]] std::string state() const;
    void restore(std::uint64_t seed, const std::string& state);

  private:
    std::uint64_t _seed;
    std::mt19937_64 _engine;
};

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

} // namespace shoprl
