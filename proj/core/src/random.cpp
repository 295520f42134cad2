#include "fcausal/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace fcausal {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (b + 0x8cb92ba72f3d8dd7ULL));
  h = splitmix64(h ^ (c + 0x3c6ef372fe94f82bULL));
  return h;
}

double Rng::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire-free rejection: fine for the small n used here.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  // Box-Muller, one value per call (no cached state).
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::laplace(double scale) {
  double u;
  do {
    u = uniform() - 0.5;
  } while (u == -0.5);
  const double s = u < 0 ? -1.0 : 1.0;
  return -scale * s * std::log(1.0 - 2.0 * std::abs(u));
}

double Rng::chi_square(int dof) {
  double acc = 0.0;
  for (int k = 0; k < dof; ++k) {
    const double z = normal();
    acc += z * z;
  }
  return acc;
}

double Rng::student_t(int dof) {
  const double z = normal();
  return z / std::sqrt(chi_square(dof) / dof);
}

}  // namespace fcausal
