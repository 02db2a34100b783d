#pragma once

// Randomized fixtures shared by the unit tests and the acceptance suite.

#include "reeb_atlas/cz_index.hpp"
#include "reeb_atlas/link_topology.hpp"

namespace reeb_atlas::fixtures {

// exp of a trace-free 2x2 matrix: X^2 = -det(X) I
inline Mat2 expm_sl2(const Mat2& X) {
  double d = -X.determinant();
  if (d > 1e-14) {
    double r = std::sqrt(d);
    return std::cosh(r) * Mat2::Identity() + std::sinh(r) / r * X;
  }
  if (d < -1e-14) {
    double r = std::sqrt(-d);
    return std::cos(r) * Mat2::Identity() + std::sin(r) / r * X;
  }
  return Mat2::Identity() + X;
}

inline Mat2 random_symmetric(Rng& rng, double scale) {
  Mat2 s;
  s(0, 0) = rng.uniform(-scale, scale);
  s(1, 1) = rng.uniform(-scale, scale);
  s(0, 1) = s(1, 0) = rng.uniform(-scale, scale);
  return s;
}

// Path generated by phi' = J0 S(t) phi, S a random rotation rate plus a
// bounded trigonometric symmetric part, redrawn until the endpoint is safely
// non-degenerate.
inline SymplecticPath random_path(Rng& rng) {
  for (;;) {
    const double rate = rng.uniform(-3.0 * pi, 3.0 * pi);
    std::array<Mat2, 3> a, b;
    for (int m = 0; m < 3; ++m) {
      a[m] = random_symmetric(rng, 1.5);
      b[m] = random_symmetric(rng, 1.5);
    }
    auto gen = [=](double t) {
      Mat2 s = rate * Mat2::Identity();
      for (int m = 0; m < 3; ++m) s += a[m] * std::cos(two_pi * m * t) + b[m] * std::sin(two_pi * m * t);
      return Mat2(j0() * s);
    };
    SymplecticPath p = path_from_generator(gen, 512);
    const RotationInterval I = rotation_interval(p);
    if (I.degenerate_margin > 1e-2) return p;
  }
}

// contractible symplectic loop times m full rotations
inline SymplecticPath random_loop(Rng& rng, int m, int n = 512) {
  double a = rng.uniform(-1.0, 1.0);
  double beta = rng.uniform(0.0, pi);
  SymplecticPath p;
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    double s = a * std::pow(std::sin(pi * t), 2);
    Mat2 c = rotation(beta) * Eigen::Vector2d(std::exp(s), std::exp(-s)).asDiagonal() * rotation(-beta);
    p.samples.push_back(rotation(two_pi * m * t) * c);
  }
  p.samples.front() = Mat2::Identity();
  p.samples.back() = Mat2::Identity();
  return p;
}

// C0-small homotopy of phi fixing phi(0)
inline SymplecticPath perturbed_path(Rng& rng, const SymplecticPath& phi) {
  const Mat2 X = j0() * random_symmetric(rng, 1.0);
  SymplecticPath pert;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    double t = static_cast<double>(i) / (phi.size() - 1);
    pert.samples.push_back(phi.samples[i] * expm_sl2(2e-4 * std::sin(pi * t / 2) * X));
  }
  pert.samples.front() = Mat2::Identity();
  return pert;
}

inline Eigen::Matrix4d random_rotation(Rng& rng) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 16; ++i) m(i) = rng.normal();
  Eigen::HouseholderQR<Eigen::Matrix4d> qr(m);
  Eigen::Matrix4d q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

// (cos eta e^{ipt}, sin eta e^{iqt}) on the unit sphere
inline Vec4 torus_curve(double eta, int p, int q, double t) {
  return from_complex(std::cos(eta) * std::exp(cplx(0, p * t)), std::sin(eta) * std::exp(cplx(0, q * t)));
}

inline LoopTrace trefoil(int n = 1024) {
  return loop_from_curve([](double t) { return torus_curve(pi / 4, 2, 3, t); }, n);
}

/// A wobbled great circle and a wobbled (p, q) torus curve under a common
/// random rotation; their linking number is q.
struct LinkPair {
  LoopTrace a, b;
  int lk = 0;
};

inline LinkPair random_link_pair(Rng& rng, int k) {
  struct Type {
    int p, q;
  };
  static const Type types[] = {{1, 1}, {1, -1}, {1, 2}, {2, 1}, {1, 0}, {3, 2}, {2, -3}, {1, 3}};
  const Type ty = types[k % 8];
  const Eigen::Matrix4d rot = random_rotation(rng);
  const double eta = rng.uniform(0.35, 1.2);
  std::array<Vec4, 3> pert;
  for (auto& v : pert) v = 0.02 * rng.unit4();
  auto wobble = [&](double t) { return pert[0] * std::sin(t) + pert[1] * std::cos(2 * t) + pert[2] * std::sin(3 * t); };
  LinkPair out;
  out.a = loop_from_curve(
      [&](double t) { return Vec4((rot * (Vec4(std::cos(t), std::sin(t), 0, 0) + wobble(t))).normalized()); }, 512);
  out.b = loop_from_curve(
      [&](double t) { return Vec4((rot * (torus_curve(eta, ty.p, ty.q, t) + wobble(t + 1.0))).normalized()); }, 1024);
  out.lk = ty.q;
  return out;
}

}  // namespace reeb_atlas::fixtures
