#include "tcf/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace tcf {

std::size_t Rng::uniform_index(std::size_t n) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return static_cast<std::size_t>(r % bound);
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (const std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace tcf
