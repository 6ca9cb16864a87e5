#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace tcf {

/// Seeded random source with platform-stable derived distributions.
///
/// The standard distribution adaptors are implementation-defined, so every
/// draw here is computed from raw mt19937_64 output. Identical seeds give
/// identical streams on every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed from a master seed and a coordinate path, e.g.
/// derive_seed(master, {cell, trial}). Independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path);

}  // namespace tcf
