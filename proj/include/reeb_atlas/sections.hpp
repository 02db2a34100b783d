#pragma once

// Candidate spanning disks of a binding orbit: grid representation,
// transversality to R, the characteristic foliation, first-return maps and
// dlambda-area.

#include "reeb_atlas/link_topology.hpp"

#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace reeb_atlas {

/// Structured disk u(s_i, t_j): s_i = i/(n_r-1) radial (row 0 is the centre,
/// collapsed), t_j = j/n_t angular and periodic. Storage is s-major.
struct DiskGrid {
  int n_r = 0;
  int n_t = 0;
  std::vector<Vec4> samples;
  std::string orbit_ref;

  const Vec4& at(int i, int j) const { return samples[static_cast<std::size_t>(i) * n_t + ((j % n_t) + n_t) % n_t]; }
  double s(int i) const { return static_cast<double>(i) / (n_r - 1); }
  double t(int j) const { return static_cast<double>(j) / n_t; }
};

namespace detail {

/// n with n . v = det[a, b, c, v].
inline Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c) {
  Vec4 n;
  for (int k = 0; k < 4; ++k) n[k] = det4(a, b, c, Vec4::Unit(k));
  return n;
}

inline double wedge_norm(const Vec4& a, const Vec4& b) {
  return std::sqrt(std::max(0.0, a.squaredNorm() * b.squaredNorm() - std::pow(a.dot(b), 2)));
}

/// Radial projection N(y) = y / sqrt(H(y)) and its derivative.
inline Vec4 radial_derivative(const StarForm& f, const Vec4& y, const Vec4& v) {
  const HamiltonianJet jet = hamiltonian_jet(f, y, false);
  return v / std::sqrt(jet.value) - y * jet.grad.dot(v) / (2.0 * std::pow(jet.value, 1.5));
}

}  // namespace detail

inline double disk_diameter(const DiskGrid& d) { return trace_diameter(d.samples); }

/// Level, spacing and embeddedness checks.
inline void validate_disk(const StarForm& form, const DiskGrid& d) {
  require(d.n_r >= 3 && d.n_t >= 8, ErrorKind::grid_quality, "disk grid needs n_r >= 3 and n_t >= 8");
  require(d.samples.size() == static_cast<std::size_t>(d.n_r) * d.n_t, ErrorKind::grid_quality,
          "disk sample count does not match n_r x n_t");
  for (const auto& x : d.samples)
    if (std::abs(eval_H(form, x) - 1.0) > 1e-9) fail(ErrorKind::grid_quality, "disk sample off the level");
  for (int j = 1; j < d.n_t; ++j)
    if ((d.at(0, j) - d.at(0, 0)).norm() > 1e-12) fail(ErrorKind::grid_quality, "centre row is not collapsed");
  const double limit = 0.05 * disk_diameter(d);
  for (int i = 0; i < d.n_r; ++i)
    for (int j = 0; j < d.n_t; ++j) {
      if (i + 1 < d.n_r && (d.at(i + 1, j) - d.at(i, j)).norm() >= limit)
        fail(ErrorKind::grid_quality, "radial spacing too coarse at row " + std::to_string(i));
      if ((d.at(i, j + 1) - d.at(i, j)).norm() >= limit)
        fail(ErrorKind::grid_quality, "angular spacing too coarse at row " + std::to_string(i));
    }
  // Embeddedness: no two samples that are not grid neighbours may nearly coincide.
  const double tol = 1e-4;
  std::unordered_map<std::uint64_t, std::vector<int>> bins;
  auto key = [&](const Vec4& x, const std::array<int, 4>& off) {
    std::uint64_t k = 1469598103934665603ull;
    for (int c = 0; c < 4; ++c) {
      auto b = static_cast<std::int64_t>(std::floor(x[c] / tol)) + off[c];
      k = (k ^ static_cast<std::uint64_t>(b)) * 1099511628211ull;
    }
    return k;
  };
  auto index_of = [&](int i, int j) { return i * d.n_t + j; };
  for (int i = 1; i < d.n_r; ++i)
    for (int j = 0; j < d.n_t; ++j) bins[key(d.at(i, j), {0, 0, 0, 0})].push_back(index_of(i, j));
  bins[key(d.at(0, 0), {0, 0, 0, 0})].push_back(0);
  for (const auto& [k, members] : bins) {
    (void)k;
    for (int a : members) {
      const Vec4& xa = d.samples[a];
      for (int m = 0; m < 81; ++m) {
        std::array<int, 4> off{m % 3 - 1, (m / 3) % 3 - 1, (m / 9) % 3 - 1, (m / 27) % 3 - 1};
        auto it = bins.find(key(xa, off));
        if (it == bins.end()) continue;
        for (int b : it->second) {
          if (b <= a) continue;
          const int ia = a / d.n_t, ja = a % d.n_t, ib = b / d.n_t, jb = b % d.n_t;
          const int dj = std::min(std::abs(ja - jb), d.n_t - std::abs(ja - jb));
          const bool neighbour = (ia == 0 || ib == 0) ? std::max(ia, ib) <= 1 : std::abs(ia - ib) <= 1 && dj <= 1;
          if (!neighbour && (xa - d.samples[b]).norm() < tol)
            fail(ErrorKind::grid_quality, "disk is not embedded: samples " + std::to_string(a) + " and " +
                                              std::to_string(b) + " coincide");
        }
      }
    }
  }
}

/// Boundary row against a trace of the orbit.
inline double boundary_gap(const StarForm& form, const DiskGrid& d, const ReebOrbit& orb) {
  const std::vector<Vec4> tr = orbit_trace(form, orb, d.n_t);
  double gap = 0.0;
  for (int j = 0; j < d.n_t; ++j) gap = std::max(gap, (d.at(d.n_r - 1, j) - tr[j]).norm());
  return gap;
}

namespace detail {

/// u(s,t) = (r1 sin(pi s/2) e^{i(2 pi t + phi0)}, r2 cos(pi s/2) e^{i theta(s,t)}).
template <class Theta>
DiskGrid ellipsoid_page(const StarForm& form, const ReebOrbit& orb, int n_r, int n_t, Theta&& theta) {
  require(form.is_ellipsoid(), ErrorKind::unsupported, "builtin disks exist only for exact ellipsoids; supply a disk file");
  require(orb.multiplicity == 1 && std::abs(z2(orb.x0.x)) < 1e-9, ErrorKind::precondition,
          "builtin disk needs the simply covered z1-plane circle");
  require(n_r >= 3 && n_t >= 8, ErrorKind::grid_quality, "disk grid too small");
  const double r1 = std::sqrt(form.r_squared[0]), r2 = std::sqrt(form.r_squared[1]);
  const double phi0 = std::arg(z1(orb.x0.x));
  DiskGrid d{n_r, n_t, {}, {}};
  d.samples.reserve(static_cast<std::size_t>(n_r) * n_t);
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_t; ++j) {
      const double s = d.s(i), t = d.t(j);
      const double a = i == n_r - 1 ? 1.0 : std::sin(0.5 * pi * s);
      const double b = i == n_r - 1 ? 0.0 : std::cos(0.5 * pi * s);
      const cplx w1 = i == 0 ? cplx(0.0) : r1 * a * std::exp(cplx(0, two_pi * t + phi0));
      d.samples.push_back(from_complex(w1, r2 * b * std::exp(cplx(0, theta(s, t)))));
    }
  return d;
}

}  // namespace detail

/// The page {arg z2 = theta0} bounded by the z1-plane circle of an ellipsoid.
inline DiskGrid builtin_disk(const StarForm& form, const ReebOrbit& orb, double theta0, int n_r = 64, int n_t = 256) {
  DiskGrid d = detail::ellipsoid_page(form, orb, n_r, n_t, [&](double, double) { return theta0; });
  d.orbit_ref = "z1-circle";
  return d;
}

/// Same boundary and centre, but the page twists in arg z2 strongly enough
/// that R becomes tangent to it somewhere inside.
inline DiskGrid tangent_test_disk(const StarForm& form, const ReebOrbit& orb, double amplitude = 3.0, int n_r = 64,
                                  int n_t = 256) {
  DiskGrid d = detail::ellipsoid_page(form, orb, n_r, n_t, [&](double s, double t) {
    return amplitude * std::sin(pi * s) * std::sin(two_pi * t);
  });
  d.orbit_ref = "tangent-fixture";
  return d;
}

// --- transversality -----------------------------------------------------------

struct TransversalityResult {
  double min_det = std::numeric_limits<double>::infinity();
  bool sign_constant = true;
  int sign = 0;
  int cells = 0;
};

/// Per cell: sin of the angle between R and the cell plane, divided by the
/// parameter distance 1 - s to the boundary (R is tangent to D along it).
inline TransversalityResult transversality_check(const StarForm& form, const DiskGrid& d, int row_begin = 0,
                                                 int row_end = -1) {
  if (row_end < 0) row_end = d.n_r - 1;
  TransversalityResult out;
  const double ds = 1.0 / (d.n_r - 1), dt = 1.0 / d.n_t;
  for (int i = row_begin; i < row_end; ++i)
    for (int j = 0; j < d.n_t; ++j) {
      const Vec4 &p00 = d.at(i, j), &p10 = d.at(i + 1, j), &p01 = d.at(i, j + 1), &p11 = d.at(i + 1, j + 1);
      const Vec4 us = 0.5 * ((p10 - p00) + (p11 - p01)) / ds;
      const Vec4 ut = 0.5 * ((p01 - p00) + (p11 - p10)) / dt;
      const Vec4 xc = project_to_level(form, 0.25 * (p00 + p10 + p01 + p11));
      const Vec4 g = grad_H(form, xc);
      const Vec4 r = hamiltonian_field(form, xc);
      const double area = detail::wedge_norm(us, ut);
      if (!(area > 1e-12 * us.norm() * ut.norm()) || area == 0.0)
        fail(ErrorKind::grid_quality, "collapsed cell at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      const double sc = (i + 0.5) * ds;
      const double v = det4(g.normalized(), r, us, ut) / (r.norm() * area * (1.0 - sc));
      const int sg = v > 0 ? 1 : (v < 0 ? -1 : 0);
      if (out.sign == 0) out.sign = sg;
      if (sg != out.sign) out.sign_constant = false;
      out.min_det = std::min(out.min_det, std::abs(v));
      ++out.cells;
    }
  return out;
}

// --- characteristic foliation ---------------------------------------------------

struct FoliationSingularity {
  double s = 0, t = 0;
  bool elliptic = false;
  bool nicely_elliptic = false;
  int sign = 0;   // orientation of D against dlambda on xi
  int index = 0;  // index of V
  Mat2 dv = Mat2::Zero();
};

struct CharacteristicField {
  /// V in global-frame coordinates at each sample (row 0 left zero).
  std::vector<Vec2> v;
  std::vector<FoliationSingularity> singularities;
  int boundary_winding = 0;
  double boundary_winding_raw = 0.0;
  bool boundary_outward = false;
};

namespace detail {

inline Vec4 disk_ds(const DiskGrid& d, int i, int j) {
  const double h = 1.0 / (d.n_r - 1);
  if (i == d.n_r - 1) return (3.0 * d.at(i, j) - 4.0 * d.at(i - 1, j) + d.at(i - 2, j)) / (2.0 * h);
  return (d.at(i + 1, j) - d.at(i - 1, j)) / (2.0 * h);
}

inline Vec4 disk_dt(const DiskGrid& d, int i, int j) { return (d.at(i, j + 1) - d.at(i, j - 1)) * (0.5 * d.n_t); }

/// V with i_V lambda = 0 and i_V dlambda = dH_F - dH_F(R) lambda, where dH_F is
/// a conormal of D inside Sigma. In frame coordinates
/// V = dH_F(e2) e1 - dH_F(e1) e2. The conormal is oriented so that positive
/// elliptic points are sources.
inline Vec2 characteristic_vector(const StarForm& form, const Vec4& x, const Vec4& us, const Vec4& ut,
                                  FrameKind kind) {
  const Vec4 nhat = grad_H(form, x).normalized();
  Vec4 nu = -cross4(nhat, us, ut);
  nu /= us.norm() * ut.norm();
  const XiFrame fr = frame_at(form, x, kind);
  return {nu.dot(fr.e2), -nu.dot(fr.e1)};
}

inline double angle_of(const Vec2& v) { return std::atan2(v[1], v[0]); }

/// Affine least-squares fit V ~ v0 + A w over displacement samples.
inline std::pair<Vec2, Mat2> fit_affine(const std::vector<Vec2>& w, const std::vector<Vec2>& v) {
  Eigen::MatrixXd a(w.size(), 3);
  Eigen::MatrixXd b(w.size(), 2);
  for (std::size_t k = 0; k < w.size(); ++k) {
    a.row(k) << 1.0, w[k][0], w[k][1];
    b.row(k) << v[k][0], v[k][1];
  }
  const Eigen::MatrixXd sol = a.colPivHouseholderQr().solve(b);
  Mat2 m;
  m << sol(1, 0), sol(2, 0), sol(1, 1), sol(2, 1);
  return {Vec2(sol(0, 0), sol(0, 1)), m};
}

inline void classify(FoliationSingularity& p) {
  const double tr = p.dv.trace(), det = p.dv.determinant();
  const double disc = 0.25 * tr * tr - det;
  p.elliptic = det > 0;
  // spiralling below 5% of the radial rate is not resolved by the grid
  const double im = disc < 0 ? std::sqrt(-disc) : 0.0;
  p.nicely_elliptic = p.elliptic && im <= 0.05 * std::abs(0.5 * tr);
}

}  // namespace detail

inline CharacteristicField characteristic_field(const StarForm& form, const DiskGrid& d,
                                                FrameKind kind = FrameKind::quaternion) {
  CharacteristicField out;
  out.v.assign(d.samples.size(), Vec2::Zero());
  double vmax = 0.0;
  for (int i = 1; i < d.n_r; ++i)
    for (int j = 0; j < d.n_t; ++j) {
      const Vec2 v = detail::characteristic_vector(form, d.at(i, j), detail::disk_ds(d, i, j), detail::disk_dt(d, i, j), kind);
      out.v[static_cast<std::size_t>(i) * d.n_t + j] = v;
      vmax = std::max(vmax, v.norm());
    }
  auto V = [&](int i, int j) -> const Vec2& { return out.v[static_cast<std::size_t>(i) * d.n_t + ((j % d.n_t) + d.n_t) % d.n_t]; };
  for (int i = 1; i < d.n_r; ++i)
    for (int j = 0; j < d.n_t; ++j)
      if (V(i, j).norm() < 1e-8 * vmax)
        fail(ErrorKind::refinement, "characteristic field vanishes on a grid node: refine the disk grid");

  auto loop_winding = [&](const std::vector<Vec2>& loop) {
    double total = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k)
      total += wrap_angle(detail::angle_of(loop[(k + 1) % loop.size()]) - detail::angle_of(loop[k]));
    return total / two_pi;
  };

  // boundary winding against Z = e1, following the orbit direction
  std::vector<Vec2> bnd;
  for (int j = 0; j < d.n_t; ++j) bnd.push_back(V(d.n_r - 1, j));
  out.boundary_winding_raw = loop_winding(bnd);
  out.boundary_winding = static_cast<int>(std::lround(out.boundary_winding_raw));
  require(std::abs(out.boundary_winding_raw - out.boundary_winding) < 1e-6, ErrorKind::refinement,
          "boundary winding not resolved");
  int outward = 0;
  for (int j = 0; j < d.n_t; ++j) {
    const XiFrame fr = detail::frame_at(form, d.at(d.n_r - 1, j), kind);
    const Vec4 v = V(d.n_r - 1, j)[0] * fr.e1 + V(d.n_r - 1, j)[1] * fr.e2;
    outward += v.dot(detail::disk_ds(d, d.n_r - 1, j)) > 0 ? 1 : -1;
  }
  require(std::abs(outward) == d.n_t, ErrorKind::inconsistency, "V is neither outward nor inward along the boundary");
  out.boundary_outward = outward > 0;

  const XiFrame frc = detail::frame_at(form, d.at(0, 0), kind);
  auto orientation_sign = [&](const Vec4& c, const Vec4& a, const Vec4& b) {
    return omega(a - c, b - c) > 0 ? 1 : -1;
  };

  // centre: the loop of row 1 encloses the collapsed row
  {
    std::vector<Vec2> ring;
    for (int j = 0; j < d.n_t; ++j) ring.push_back(V(1, j));
    const int idx = static_cast<int>(std::lround(loop_winding(ring)));
    if (idx != 0) {
      FoliationSingularity p;
      p.index = idx;
      std::vector<Vec2> w, vv;
      for (int i = 1; i <= std::min(2, d.n_r - 2); ++i)
        for (int j = 0; j < d.n_t; ++j) {
          w.push_back(frame_coords(frc, d.at(i, j) - d.at(0, 0)));
          vv.push_back(V(i, j));
        }
      const auto [v0, a] = detail::fit_affine(w, vv);
      p.dv = a;
      const Vec2 loc = -a.colPivHouseholderQr().solve(v0);
      p.s = loc.norm() / std::max(1e-300, w.front().norm()) / (d.n_r - 1);
      p.t = 0.0;
      p.sign = orientation_sign(d.at(0, 0), d.at(1, 0), d.at(1, 1));
      detail::classify(p);
      out.singularities.push_back(p);
    }
  }
  // interior cells: index of V around the four corners
  for (int i = 1; i + 1 < d.n_r - 1; ++i)
    for (int j = 0; j < d.n_t; ++j) {
      const std::vector<Vec2> corners{V(i, j), V(i + 1, j), V(i + 1, j + 1), V(i, j + 1)};
      const int idx = static_cast<int>(std::lround(loop_winding(corners)));
      if (idx == 0) continue;
      FoliationSingularity p;
      p.index = idx;
      // Newton on the bilinear interpolant for the location inside the cell
      double a = 0.5, b = 0.5;
      for (int it = 0; it < 20; ++it) {
        const Vec2 f = (1 - a) * (1 - b) * corners[0] + a * (1 - b) * corners[1] + a * b * corners[2] + (1 - a) * b * corners[3];
        Mat2 jac;
        jac.col(0) = (1 - b) * (corners[1] - corners[0]) + b * (corners[2] - corners[3]);
        jac.col(1) = (1 - a) * (corners[3] - corners[0]) + a * (corners[2] - corners[1]);
        if (std::abs(jac.determinant()) < 1e-300) break;
        const Vec2 step = jac.inverse() * f;
        a = std::clamp(a - step[0], 0.0, 1.0);
        b = std::clamp(b - step[1], 0.0, 1.0);
      }
      p.s = (i + a) / (d.n_r - 1);
      p.t = (j + b) / d.n_t;
      const XiFrame fr = detail::frame_at(form, d.at(i, j), kind);
      std::vector<Vec2> w, vv;
      for (int di = -1; di <= 2; ++di)
        for (int dj = -1; dj <= 2; ++dj) {
          const int ii = std::clamp(i + di, 1, d.n_r - 1);
          w.push_back(frame_coords(fr, d.at(ii, j + dj) - d.at(i, j)));
          vv.push_back(V(ii, j + dj));
        }
      p.dv = detail::fit_affine(w, vv).second;
      p.sign = orientation_sign(d.at(i, j), d.at(i + 1, j), d.at(i, j + 1));
      detail::classify(p);
      out.singularities.push_back(p);
    }
  return out;
}

// --- dlambda area ---------------------------------------------------------------

struct DiskArea {
  double area = 0.0;
  double boundary_integral = 0.0;
};

/// Polygon integral of lambda0; exact for the straight edges since lambda0 is linear.
inline double loop_action(const std::vector<Vec4>& loop) {
  double a = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) a += 0.5 * omega(loop[k], loop[(k + 1) % loop.size()]);
  return a;
}

/// Two-point Gauss quadrature of u^* dlambda0 on the radially projected
/// bilinear cells of rows [0, rows), plus the lambda0 integral over row `rows`.
inline DiskArea disk_area(const StarForm& form, const DiskGrid& d, int rows = -1) {
  if (rows < 0) rows = d.n_r - 1;
  require(rows >= 1 && rows <= d.n_r - 1, ErrorKind::precondition, "row range outside the disk");
  const double g = 0.5 / std::sqrt(3.0);
  const double nodes[2] = {0.5 - g, 0.5 + g};
  DiskArea out;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d.n_t; ++j) {
      const Vec4 &p00 = d.at(i, j), &p10 = d.at(i + 1, j), &p01 = d.at(i, j + 1), &p11 = d.at(i + 1, j + 1);
      for (double a : nodes)
        for (double b : nodes) {
          const Vec4 y = (1 - a) * (1 - b) * p00 + a * (1 - b) * p10 + a * b * p11 + (1 - a) * b * p01;
          const Vec4 ya = (1 - b) * (p10 - p00) + b * (p11 - p01);
          const Vec4 yb = (1 - a) * (p01 - p00) + a * (p11 - p10);
          out.area += 0.25 * omega(detail::radial_derivative(form, y, ya), detail::radial_derivative(form, y, yb));
        }
    }
  std::vector<Vec4> ring;
  for (int j = 0; j < d.n_t; ++j) ring.push_back(d.at(rows, j));
  out.boundary_integral = loop_action(ring);
  const double rel = std::abs(out.area - out.boundary_integral) / std::abs(out.boundary_integral);
  if (rel > 1e-2)
    fail(ErrorKind::grid_quality, "area quadrature and boundary integral disagree by " + std::to_string(rel));
  return out;
}

// --- first-return map -------------------------------------------------------------

enum class Direction { forward, backward };

inline std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

struct ReturnRecord {
  double seed_s = 0, seed_t = 0;
  bool returned = false;
  double ret_s = 0, ret_t = 0;
  double time = 0;  // flow time elapsed (non-negative)
  int crossing_sign = 0;
};

struct ReturnOptions {
  FlowOptions flow{1e-12, 0.02, 1e-13};
  double boundary_exclusion = 1e-3;
  double time_tol = 1e-10;
  double min_time = 1e-3;  // ignore the departure from the seed itself
};

/// The disk as the radial projection of its grid triangles: each triangle
/// spans with the origin a hyperplane n . x = 0, so seeds and crossings can
/// be placed exactly on the surface.
class EventSurface {
 public:
  EventSurface(const StarForm& form, const DiskGrid& d, double step_reach) : form_(&form), d_(&d) {
    for (int i = 0; i + 1 < d.n_r; ++i)
      for (int j = 0; j < d.n_t; ++j) {
        add(i, j, false, d.at(i, j), d.at(i + 1, j), d.at(i, j + 1));
        add(i, j, true, d.at(i + 1, j + 1), d.at(i, j + 1), d.at(i + 1, j));
      }
    double extent = 0.0;
    for (const auto& t : tris_) extent = std::max(extent, t.radius);
    reach_ = step_reach + 2.0 * extent;
    bin_ = std::max(2.0 * reach_, 0.05);
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      const auto& t = tris_[k];
      std::array<std::int64_t, 4> lo, hi;
      for (int c = 0; c < 4; ++c) {
        lo[c] = bin_index(t.centre[c] - t.radius - reach_);
        hi[c] = bin_index(t.centre[c] + t.radius + reach_);
      }
      for (auto a = lo[0]; a <= hi[0]; ++a)
        for (auto b = lo[1]; b <= hi[1]; ++b)
          for (auto c = lo[2]; c <= hi[2]; ++c)
            for (auto e = lo[3]; e <= hi[3]; ++e) bins_[hash({a, b, c, e})].push_back(static_cast<int>(k));
    }
    for (int j = 0; j < d.n_t; ++j) boundary_.push_back(d.at(d.n_r - 1, j));
  }

  /// Point of the surface with grid parameters (s, t).
  Vec4 point(double s, double t) const {
    const auto [i, j, a, b] = locate(s, t);
    if (a + b <= 1.0)
      return project_to_level(*form_, (1 - a - b) * d_->at(i, j) + a * d_->at(i + 1, j) + b * d_->at(i, j + 1));
    return project_to_level(*form_, (a + b - 1) * d_->at(i + 1, j + 1) + (1 - a) * d_->at(i, j + 1) +
                                        (1 - b) * d_->at(i + 1, j));
  }

  struct Hit {
    int tri = -1;
    double theta = 0.0;
  };

  /// Earliest crossed triangle along the chord x -> y, if any.
  Hit crossing(const Vec4& x, const Vec4& y) const {
    Hit best;
    auto it = bins_.find(hash(bins_of(x)));
    if (it == bins_.end()) return best;
    for (int k : it->second) {
      const auto& t = tris_[k];
      const double fx = t.normal.dot(x), fy = t.normal.dot(y);
      if ((fx > 0) == (fy > 0) || fx == fy) continue;
      const double th = fx / (fx - fy);
      if (best.tri >= 0 && th >= best.theta) continue;
      if (!inside(t, x + th * (y - x), 1e-9)) continue;
      best = {k, th};
    }
    return best;
  }

  double f(int tri, const Vec4& x) const { return tris_[tri].normal.dot(x); }
  double radial_rate(int tri, const Vec4& x) const { return tris_[tri].normal.dot(hamiltonian_field(*form_, x)); }

  /// Grid parameters of a point on triangle `tri`.
  std::pair<double, double> params(int tri, const Vec4& x) const {
    const auto& t = tris_[tri];
    Vec4 c = t.inverse * x;
    Vec3 bary(c[0], c[1], c[2]);
    bary = bary.cwiseMax(0.0);
    bary /= bary.sum();
    double a, b;
    if (!t.upper) {
      a = bary[1];
      b = bary[2];
    } else {
      a = bary[0] + bary[2];
      b = bary[0] + bary[1];
    }
    return {(t.i + a) / (d_->n_r - 1), (t.j + b) / d_->n_t};
  }

  double boundary_distance(const Vec4& x) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = boundary_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Vec4& a = boundary_[k];
      const Vec4 e = boundary_[(k + 1) % n] - a;
      const double u = std::clamp((x - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (x - a - u * e).norm());
    }
    return best;
  }

 private:
  struct Tri {
    int i, j;
    bool upper;
    Vec4 normal;
    Mat4 inverse;  // of [p0 p1 p2 normal]
    Vec4 centre;
    double radius;
  };

  static std::tuple<int, int, double, double> locate_impl(double s, double t, int n_r, int n_t) {
    const double u = std::clamp(s, 0.0, 1.0) * (n_r - 1);
    int i = std::min(static_cast<int>(std::floor(u)), n_r - 2);
    double a = u - i;
    double v = (t - std::floor(t)) * n_t;
    int j = std::min(static_cast<int>(std::floor(v)), n_t - 1);
    return {i, j, a, v - j};
  }
  std::tuple<int, int, double, double> locate(double s, double t) const { return locate_impl(s, t, d_->n_r, d_->n_t); }

  void add(int i, int j, bool upper, const Vec4& p0, const Vec4& p1, const Vec4& p2) {
    Vec4 n = detail::cross4(p0, p1, p2);
    if (n.norm() < 1e-14) return;  // the collapsed half of a centre cell
    n.normalize();
    Mat4 m;
    m.col(0) = p0;
    m.col(1) = p1;
    m.col(2) = p2;
    m.col(3) = n;
    const Vec4 c = (p0 + p1 + p2) / 3.0;
    const double r = std::max({(p0 - c).norm(), (p1 - c).norm(), (p2 - c).norm()});
    tris_.push_back({i, j, upper, n, m.inverse(), c, r});
  }

  static bool inside(const Tri& t, const Vec4& x, double tol) {
    const Vec4 c = t.inverse * x;
    const double sum = c[0] + c[1] + c[2];
    if (sum <= 0) return false;
    return c[0] >= -tol * sum && c[1] >= -tol * sum && c[2] >= -tol * sum;
  }

  std::int64_t bin_index(double v) const { return static_cast<std::int64_t>(std::floor(v / bin_)); }
  std::array<std::int64_t, 4> bins_of(const Vec4& x) const {
    return {bin_index(x[0]), bin_index(x[1]), bin_index(x[2]), bin_index(x[3])};
  }
  static std::uint64_t hash(const std::array<std::int64_t, 4>& b) {
    std::uint64_t k = 1469598103934665603ull;
    for (auto v : b) k = (k ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
    return k;
  }

  const StarForm* form_;
  const DiskGrid* d_;
  std::vector<Tri> tris_;
  std::unordered_map<std::uint64_t, std::vector<int>> bins_;
  std::vector<Vec4> boundary_;
  double reach_ = 0.0;
  double bin_ = 0.0;
};

namespace detail {

inline double max_reeb_speed(const StarForm& form, const DiskGrid& d) {
  double m = 0.0;
  for (const auto& x : d.samples) m = std::max(m, hamiltonian_field(form, x).norm());
  return m;
}

inline ReturnRecord first_return(const StarForm& form, const EventSurface& surf, double s, double t,
                                 double budget, Direction dir, const ReturnOptions& o) {
  ReturnRecord rec;
  rec.seed_s = s;
  rec.seed_t = t;
  const Vec4 x0 = surf.point(s, t);
  if (surf.boundary_distance(x0) < o.boundary_exclusion)
    fail(ErrorKind::precondition, "seed lies on the binding");
  Propagator<false> prop(form, x0, dir == Direction::forward ? 1 : -1, o.flow);
  prop.advance(std::min(o.min_time, budget));
  while (prop.elapsed() < budget) {
    Propagator<false> prev = prop;
    prop.step(budget - prop.elapsed());
    const EventSurface::Hit hit = surf.crossing(prev.point(), prop.point());
    if (hit.tri < 0) continue;
    // bisection in time on the triangle's defining function
    Propagator<false> lo = prev;
    double span = prop.elapsed() - prev.elapsed();
    const bool lo_sign = surf.f(hit.tri, lo.point()) > 0;
    while (span > o.time_tol) {
      Propagator<false> mid = lo;
      mid.advance(0.5 * span);
      span *= 0.5;
      if ((surf.f(hit.tri, mid.point()) > 0) == lo_sign) lo = mid;
    }
    Propagator<false> hit_state = lo;
    hit_state.advance(span);
    const Vec4 y = hit_state.point();
    if (surf.boundary_distance(y) < o.boundary_exclusion) continue;
    rec.returned = true;
    rec.time = hit_state.elapsed();
    std::tie(rec.ret_s, rec.ret_t) = surf.params(hit.tri, y);
    const double rate = surf.radial_rate(hit.tri, y);
    rec.crossing_sign = rate > 0 ? 1 : -1;
    return rec;
  }
  rec.time = budget;
  return rec;
}

}  // namespace detail

/// First returns of seeds given by grid parameters (s, t).
inline std::vector<ReturnRecord> return_map(const StarForm& form, const DiskGrid& d,
                                            const std::vector<std::pair<double, double>>& seeds, double t_budget,
                                            Direction dir, const ReturnOptions& o = {}) {
  require(t_budget > 0, ErrorKind::precondition, "return budget must be positive");
  const TransversalityResult tv = transversality_check(form, d);
  require(tv.sign_constant, ErrorKind::precondition, "disk is not transverse to R with constant sign");
  const EventSurface surf(form, d, o.flow.max_step * detail::max_reeb_speed(form, d) * 1.5);
  std::vector<ReturnRecord> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) {
    out[k] = detail::first_return(form, surf, seeds[k].first, seeds[k].second, t_budget, dir, o);
  });
  return out;
}

/// Quasi-uniform interior seeds in grid parameters, kept off the binding.
inline std::vector<std::pair<double, double>> interior_seeds(std::size_t n, double s_max = 0.96) {
  std::vector<std::pair<double, double>> seeds;
  seeds.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    seeds.emplace_back(std::max(0.01, s_max * std::sqrt(radical_inverse(k + 1, 2))), radical_inverse(k + 1, 3));
  return seeds;
}

inline void write_return_csv(std::ostream& os, const std::vector<ReturnRecord>& recs) {
  os << "seed_s,seed_t,ret_s,ret_t,time\n" << std::setprecision(17);
  for (const auto& r : recs) {
    os << r.seed_s << ',' << r.seed_t << ',';
    if (r.returned)
      os << r.ret_s << ',' << r.ret_t << ',' << r.time << '\n';
    else
      os << "nan,nan,timeout\n";
  }
}

// --- area preservation --------------------------------------------------------------

struct CellAreaCheck {
  double s0, t0;
  double area_before = 0.0;
  double area_after = 0.0;
  bool complete = false;
};

/// dlambda-area of parameter rectangles before and after the forward return map.
inline std::vector<CellAreaCheck> area_preservation(const StarForm& form, const DiskGrid& d,
                                                    const std::vector<std::pair<double, double>>& corners,
                                                    double size, double t_budget, int per_side = 16,
                                                    const ReturnOptions& o = {}) {
  const EventSurface surf(form, d, o.flow.max_step * detail::max_reeb_speed(form, d) * 1.5);
  std::vector<CellAreaCheck> out;
  for (const auto& [s0, t0] : corners) {
    std::vector<std::pair<double, double>> loop;
    for (int k = 0; k < per_side; ++k) loop.emplace_back(s0 + size * k / per_side, t0);
    for (int k = 0; k < per_side; ++k) loop.emplace_back(s0 + size, t0 + size * k / per_side);
    for (int k = 0; k < per_side; ++k) loop.emplace_back(s0 + size - size * k / per_side, t0 + size);
    for (int k = 0; k < per_side; ++k) loop.emplace_back(s0, t0 + size - size * k / per_side);
    std::vector<Vec4> before, after(loop.size());
    for (const auto& [s, t] : loop) before.push_back(surf.point(s, t));
    std::vector<int> ok(loop.size(), 0);
    parallel_for(loop.size(), [&](std::size_t k) {
      const ReturnRecord r = detail::first_return(form, surf, loop[k].first, loop[k].second, t_budget, Direction::forward, o);
      if (r.returned) {
        after[k] = surf.point(r.ret_s, r.ret_t);
        ok[k] = 1;
      }
    });
    CellAreaCheck c{s0, t0};
    c.area_before = loop_action(before);
    c.complete = std::all_of(ok.begin(), ok.end(), [](int v) { return v == 1; });
    if (c.complete) c.area_after = loop_action(after);
    out.push_back(c);
  }
  return out;
}

// --- global-section verdict ------------------------------------------------------

enum class SectionStatus { passes, fails, inconclusive };

inline std::string to_string(SectionStatus s) {
  switch (s) {
    case SectionStatus::passes: return "passes";
    case SectionStatus::fails: return "fails";
    case SectionStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct SectionVerdict {
  SectionStatus status = SectionStatus::inconclusive;
  std::string reason;
  int seeds = 0;
  int timeouts_forward = 0;
  int timeouts_backward = 0;
  double min_transversality = 0.0;
  bool sign_constant = false;
  std::vector<ReturnRecord> forward, backward;

  bool passes() const { return status == SectionStatus::passes; }
};

/// Sampling evidence only: sign-constant transversality plus a return in both
/// time directions for every seed within the budget.
inline SectionVerdict verify_global_section(const StarForm& form, const DiskGrid& d, int n_seeds, double t_budget,
                                            const ReturnOptions& o = {}) {
  SectionVerdict v;
  v.seeds = n_seeds;
  const TransversalityResult tv = transversality_check(form, d);
  v.min_transversality = tv.min_det;
  v.sign_constant = tv.sign_constant;
  if (!tv.sign_constant) {
    v.status = SectionStatus::fails;
    v.reason = "transversality sign changes";
    return v;
  }
  const auto seeds = interior_seeds(n_seeds);
  v.forward = return_map(form, d, seeds, t_budget, Direction::forward, o);
  v.backward = return_map(form, d, seeds, t_budget, Direction::backward, o);
  for (const auto& r : v.forward) v.timeouts_forward += !r.returned;
  for (const auto& r : v.backward) v.timeouts_backward += !r.returned;
  if (v.timeouts_forward + v.timeouts_backward > 0) {
    v.status = SectionStatus::inconclusive;
    v.reason = "seeds without return within budget " + std::to_string(t_budget) + ": " +
               std::to_string(v.timeouts_forward) + " forward, " + std::to_string(v.timeouts_backward) + " backward";
    return v;
  }
  v.status = SectionStatus::passes;
  v.reason = "all seeds return in both directions";
  return v;
}

// --- disk file --------------------------------------------------------------------

/// One JSON header line, then a CSV block of samples in row-major (s-major) order.
inline void write_disk(std::ostream& os, const DiskGrid& d) {
  nlohmann::json h{{"n_r", d.n_r}, {"n_theta", d.n_t}, {"orbit_ref", d.orbit_ref}, {"format", "csv"}};
  os << h.dump() << '\n' << "x1,x2,x3,x4\n" << std::setprecision(17);
  for (const auto& x : d.samples) os << x[0] << ',' << x[1] << ',' << x[2] << ',' << x[3] << '\n';
}

inline DiskGrid read_disk(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::parse, "disk file: missing header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("/: disk header is not JSON: ") + e.what());
  }
  DiskGrid d;
  for (const char* key : {"n_r", "n_theta"})
    if (!h.contains(key) || !h[key].is_number_integer()) fail(ErrorKind::parse, std::string("/") + key + ": integer required");
  d.n_r = h["n_r"];
  d.n_t = h["n_theta"];
  if (h.contains("orbit_ref") && h["orbit_ref"].is_string()) d.orbit_ref = h["orbit_ref"];
  require(std::getline(is, line) && line.rfind("x1", 0) == 0, ErrorKind::parse, "disk file: missing CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    Vec4 x;
    char comma;
    ss >> x[0] >> comma >> x[1] >> comma >> x[2] >> comma >> x[3];
    if (!ss) fail(ErrorKind::parse, "disk file: bad sample row " + std::to_string(d.samples.size()));
    d.samples.push_back(x);
  }
  require(d.samples.size() == static_cast<std::size_t>(d.n_r) * d.n_t, ErrorKind::parse,
          "disk file: expected n_r * n_theta samples");
  return d;
}

}  // namespace reeb_atlas
