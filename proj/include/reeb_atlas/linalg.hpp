#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

namespace reeb_atlas {

// Coordinates on R^4 are ordered (q1, p1, q2, p2); z_j = q_j + i p_j.
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// omega = dq1^dp1 + dq2^dp2, so omega(u, v) = u^T Omega v.
inline Mat4 omega_matrix() {
  Mat4 m = Mat4::Zero();
  m(0, 1) = 1.0;
  m(1, 0) = -1.0;
  m(2, 3) = 1.0;
  m(3, 2) = -1.0;
  return m;
}

inline double omega(const Vec4& u, const Vec4& v) {
  return u[0] * v[1] - u[1] * v[0] + u[2] * v[3] - u[3] * v[2];
}

/// lambda0 = 1/2 sum (q dp - p dq), evaluated at x on v.
inline double lambda0(const Vec4& x, const Vec4& v) { return 0.5 * omega(x, v); }

/// Matrix of v -> X with i_X omega = -dH applied to a gradient: X = (-H_p1, H_q1, -H_p2, H_q2).
inline Mat4 hamiltonian_matrix() { return -omega_matrix(); }

inline cplx z1(const Vec4& x) { return {x[0], x[1]}; }
inline cplx z2(const Vec4& x) { return {x[2], x[3]}; }
inline Vec4 from_complex(cplx a, cplx b) { return {a.real(), a.imag(), b.real(), b.imag()}; }

/// Standard complex structure on R^2 (rotation by +pi/2).
inline Mat2 j0() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

inline Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

/// Principal value of a - b wrapped into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, two_pi);
  if (r <= -pi) r += two_pi;
  return r;
}

inline double det4(const Vec4& a, const Vec4& b, const Vec4& c, const Vec4& d) {
  Mat4 m;
  m.col(0) = a;
  m.col(1) = b;
  m.col(2) = c;
  m.col(3) = d;
  return m.determinant();
}

}  // namespace reeb_atlas
