#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

namespace marker_slam {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Folds any number of words into one well-spread seed. Used to derive
// independent per-sequence / per-cell streams from a master seed.
inline std::uint64_t seed_mix(std::uint64_t seed) {
  return detail::splitmix64(seed);
}

template <typename... Rest>
std::uint64_t seed_mix(std::uint64_t seed, std::uint64_t next, Rest... rest) {
  return seed_mix(detail::splitmix64(seed ^ detail::splitmix64(next)), rest...);
}

// Seeded generator with hand-rolled uniform/normal transforms so that the
// produced streams do not depend on the standard library's distribution
// implementations. Byte-identical output is part of the contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; caches the second value of each pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform direction via a normalized Gaussian triple.
  Eigen::Vector3d unit_sphere() {
    while (true) {
      const Eigen::Vector3d v(normal(), normal(), normal());
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace marker_slam
