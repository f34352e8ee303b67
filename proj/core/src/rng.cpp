#include "unlearn/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace unlearn {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a) {
  return splitmix64(splitmix64(root) ^ (a + kGolden));
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                          std::uint64_t b) {
  return derive_seed(derive_seed(root, a), b);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  return derive_seed(derive_seed(root, a, b), c);
}

DeterministicRng::DeterministicRng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t DeterministicRng::next_u64() { return engine_(); }

double DeterministicRng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double DeterministicRng::uniform01_open() {
  // (x >> 11) in [0, 2^53); offset by 0.5 before scaling to stay inside (0,1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double DeterministicRng::normal01() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform01_open();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  cached_normal_ = radius * std::sin(kTwoPi * u2);
  has_cached_normal_ = true;
  return radius * std::cos(kTwoPi * u2);
}

double DeterministicRng::laplace(double scale) {
  if (scale < 0.0) throw std::invalid_argument("laplace: negative scale");
  // u uniform on (-1/2, 1/2); inverse CDF is -scale*sgn(u)*log(1-2|u|).
  const double u = uniform01_open() - 0.5;
  const double sign = (u < 0.0) ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::fabs(u));
}

std::uint64_t DeterministicRng::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace unlearn
