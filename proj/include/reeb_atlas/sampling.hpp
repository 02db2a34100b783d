#pragma once

#include "reeb_atlas/linalg.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace reeb_atlas {

/// Radical inverse of `index` in `base` (van der Corput).
inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

/// Quasi-uniform point on the unit S^3 from the Halton triple (2, 3, 5).
/// |z1|^2 is uniform on [0,1] for the round measure, so Hopf coordinates
/// with a uniform first coordinate are exact.
inline Vec4 halton_s3(std::uint64_t index) {
  double u = radical_inverse(index + 1, 2);
  double a = two_pi * radical_inverse(index + 1, 3);
  double b = two_pi * radical_inverse(index + 1, 5);
  double r1 = std::sqrt(u);
  double r2 = std::sqrt(1.0 - u);
  return {r1 * std::cos(a), r1 * std::sin(a), r2 * std::cos(b), r2 * std::sin(b)};
}

inline std::vector<Vec4> halton_s3_points(std::size_t n) {
  std::vector<Vec4> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(halton_s3(i));
  return pts;
}

/// Deterministic RNG. The engine output is specified by the standard; the
/// conversions below avoid implementation-defined distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  Vec3 unit3() {
    Vec3 v(normal(), normal(), normal());
    return v.normalized();
  }

  Vec4 unit4() {
    Vec4 v(normal(), normal(), normal(), normal());
    return v.normalized();
  }

  std::uint64_t next_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace reeb_atlas
