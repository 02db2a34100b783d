#pragma once

// Linking and self-linking of closed orbits in S^3, and a conservative
// unknot certificate from Reidemeister I/II reductions of a planar diagram.

#include "reeb_atlas/orbits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace reeb_atlas {

/// Closed polyline; the edge from the last point back to the first is implicit.
struct LoopTrace {
  std::vector<Vec4> points;
};

enum class KnotStatus { certified_unknot, unknown };

inline std::string to_string(KnotStatus s) { return s == KnotStatus::certified_unknot ? "certified_unknot" : "unknown"; }

struct KnotVerdict {
  KnotStatus status = KnotStatus::unknown;
  int crossing_count_after_reduction = 0;
  int crossings_before_reduction = 0;
};

struct LinkResult {
  int lk = 0;
  double raw = 0.0;
  double residual = 0.0;
};

inline constexpr int min_trace_points = 512;

inline double trace_diameter(const std::vector<Vec4>& pts) {
  // bounding-box diagonal: within a factor 2 of the true diameter, linear time
  Vec4 lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

inline void validate_trace(const LoopTrace& tr) {
  const auto& p = tr.points;
  require(p.size() >= static_cast<std::size_t>(min_trace_points), ErrorKind::resolution,
          "trace needs at least 512 points, got " + std::to_string(p.size()));
  const double limit = 0.05 * trace_diameter(p);
  for (std::size_t i = 0; i < p.size(); ++i) {
    double chord = (p[(i + 1) % p.size()] - p[i]).norm();
    if (chord >= limit)
      fail(ErrorKind::resolution, "chord " + std::to_string(chord) + " at point " + std::to_string(i) + ": densify");
  }
}

/// Orbit sampled uniformly in time over its prime period.
inline LoopTrace make_loop_trace(const StarForm& form, const ReebOrbit& orb, int n = min_trace_points,
                                 const FlowOptions& fo = {}) {
  std::vector<double> times(n + 1);
  for (int i = 0; i <= n; ++i) times[i] = orb.T_min * i / n;
  const FlowResult r = sample_flow(form, orb.x0.x, times, false, fo);
  LoopTrace tr;
  tr.points.reserve(n);
  for (int i = 0; i < n; ++i) tr.points.push_back(r.points[i].x);
  const double gap = (r.points[n].x - r.points[0].x).norm();
  require(gap < 1e-8, ErrorKind::resolution, "trace does not close: gap " + std::to_string(gap));
  validate_trace(tr);
  return tr;
}

/// Fixture loops: samples curve(2 pi i / n).
template <class Curve>
LoopTrace loop_from_curve(Curve&& curve, int n = min_trace_points) {
  LoopTrace tr;
  tr.points.reserve(n);
  for (int i = 0; i < n; ++i) tr.points.push_back(curve(two_pi * i / n));
  validate_trace(tr);
  return tr;
}

inline LoopTrace reversed(const LoopTrace& tr) {
  LoopTrace r = tr;
  std::reverse(r.points.begin(), r.points.end());
  return r;
}

// --- stereographic projection ----------------------------------------------

/// The fixed candidate poles: 8 axis directions, the 16 points
/// (+-1,+-1,+-1,+-1)/2 and two mixed diagonals.
inline const std::array<Vec4, 26>& candidate_poles() {
  static const std::array<Vec4, 26> poles = [] {
    std::array<Vec4, 26> p;
    int k = 0;
    for (int i = 0; i < 4; ++i)
      for (double s : {1.0, -1.0}) {
        Vec4 v = Vec4::Zero();
        v[i] = s;
        p[k++] = v;
      }
    for (int m = 0; m < 16; ++m)
      p[k++] = 0.5 * Vec4(m & 1 ? -1 : 1, m & 2 ? -1 : 1, m & 4 ? -1 : 1, m & 8 ? -1 : 1);
    p[k++] = Vec4(1, 1, 0, 0) / std::sqrt(2.0);
    p[k++] = Vec4(0, 0, 1, 1) / std::sqrt(2.0);
    return p;
  }();
  return poles;
}

/// Distance from the radially normalized trace to the pole on S^3.
inline double pole_clearance(const LoopTrace& tr, const Vec4& pole) {
  const Vec4 n = pole.normalized();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : tr.points) best = std::min(best, (x.normalized() - n).norm());
  return best;
}

/// Orthonormal (b1, b2, b3) with det[b1, b2, b3, N] = +1, which makes the
/// projection orientation preserving for S^3 = boundary of the unit ball.
inline std::array<Vec4, 3> pole_basis(const Vec4& pole) {
  const Vec4 n = pole.normalized();
  Eigen::Matrix4d m;
  m.col(0) = n;
  m.col(1) = Vec4::Unit(0);
  m.col(2) = Vec4::Unit(1);
  m.col(3) = Vec4::Unit(2);
  int col = 1;
  for (int i = 0; i < 4 && col < 4; ++i) {
    // skip the axis parallel to n
    if (std::abs(n[i]) > 0.9) continue;
    m.col(col++) = Vec4::Unit(i);
  }
  Eigen::HouseholderQR<Eigen::Matrix4d> qr(m);
  Eigen::Matrix4d q = qr.householderQ();
  if (q.col(0).dot(n) < 0) q.col(0) = -q.col(0);
  std::array<Vec4, 3> b{q.col(1), q.col(2), q.col(3)};
  if (det4(b[0], b[1], b[2], n) < 0) b[2] = -b[2];
  return b;
}

inline std::vector<Vec3> stereo_project(const LoopTrace& tr, const Vec4& pole) {
  const Vec4 n = pole.normalized();
  for (const auto& x : tr.points) {
    // distance to the ray {s n : s > 0}
    double along = std::max(0.0, x.dot(n));
    if ((x - along * n).norm() <= 1e-2) fail(ErrorKind::pole_selection, "pole too close to trace");
  }
  const auto b = pole_basis(n);
  std::vector<Vec3> out;
  out.reserve(tr.points.size());
  for (const auto& x : tr.points) {
    const Vec4 y = x.normalized();
    const double d = 1.0 - y.dot(n);
    out.emplace_back(y.dot(b[0]) / d, y.dot(b[1]) / d, y.dot(b[2]) / d);
  }
  return out;
}

/// First candidate pole with clearance >= min_clearance from every trace.
inline Vec4 select_pole(const std::vector<const LoopTrace*>& traces, double min_clearance = 0.25,
                        std::size_t skip = 0) {
  std::size_t admissible = 0;
  for (const auto& pole : candidate_poles()) {
    bool ok = true;
    for (const auto* t : traces) ok = ok && pole_clearance(*t, pole) >= min_clearance;
    if (ok && admissible++ == skip) return pole;
  }
  fail(ErrorKind::pole_selection, "no admissible pole among the 26 candidates");
}

// --- Gauss linking integral --------------------------------------------------

namespace detail {

inline double clamped_asin(double v) { return std::asin(std::clamp(v, -1.0, 1.0)); }

/// Signed solid-angle contribution of segment pair (p1p2, p3p4) to the Gauss
/// integral, exact for straight segments; divided by 4 pi it sums to lk.
inline double segment_pair_gauss(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4) {
  const Vec3 r13 = p3 - p1, r14 = p4 - p1, r23 = p3 - p2, r24 = p4 - p2;
  Vec3 n[4] = {r13.cross(r14), r14.cross(r24), r24.cross(r23), r23.cross(r13)};
  for (auto& v : n) {
    double len = v.norm();
    if (len < 1e-300) return 0.0;
    v /= len;
  }
  double omega_star = clamped_asin(n[0].dot(n[1])) + clamped_asin(n[1].dot(n[2])) +
                      clamped_asin(n[2].dot(n[3])) + clamped_asin(n[3].dot(n[0]));
  const double orient = (p4 - p3).cross(p2 - p1).dot(r13);
  return orient > 0 ? omega_star : (orient < 0 ? -omega_star : 0.0);
}

inline double gauss_sum(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  const std::size_t na = a.size(), nb = b.size();
  std::vector<double> rows(na, 0.0);
  parallel_for(na, [&](std::size_t i) {
    const Vec3& p1 = a[i];
    const Vec3& p2 = a[(i + 1) % na];
    double s = 0.0;
    for (std::size_t j = 0; j < nb; ++j) s += segment_pair_gauss(p1, p2, b[j], b[(j + 1) % nb]);
    rows[i] = s;
  });
  double total = 0.0;
  for (double r : rows) total += r;
  return total / (4.0 * pi);
}

inline double min_distance(const LoopTrace& a, const LoopTrace& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a.points)
    for (const auto& q : b.points) best = std::min(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

}  // namespace detail

inline LinkResult linking_number(const LoopTrace& a, const LoopTrace& b) {
  validate_trace(a);
  validate_trace(b);
  const double d = detail::min_distance(a, b);
  require(d > 1e-3, ErrorKind::proximity, "traces too close: " + std::to_string(d));
  const Vec4 pole = select_pole({&a, &b});
  const double raw = detail::gauss_sum(stereo_project(a, pole), stereo_project(b, pole));
  LinkResult r;
  r.raw = raw;
  r.lk = static_cast<int>(std::lround(raw));
  r.residual = std::abs(raw - r.lk);
  require(r.residual < 0.1, ErrorKind::resolution,
          "Gauss sum " + std::to_string(raw) + " is not near an integer: densify");
  return r;
}

// --- planar diagrams -------------------------------------------------------

namespace detail {

/// Fixed generic planar projection directions; the first is tried first.
inline Vec3 projection_direction(std::size_t attempt) {
  if (attempt == 0) return Vec3(0.31, 0.47, 0.83).normalized();
  Rng rng(977 + attempt);
  return rng.unit3();
}

struct PlaneFrame {
  Vec3 d, u, v;  // view direction d points toward the viewer
};

inline PlaneFrame plane_frame(const Vec3& d) {
  Vec3 a = std::abs(d[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 u = d.cross(a).normalized();
  return {d, u, d.cross(u)};
}

struct Crossing {
  std::size_t seg_a, seg_b;
  double ta, tb;     // parameters along the two segments
  int sign;          // +1 right-handed
  bool a_over;
};

/// Raised internally when the projection is not generic near a crossing.
struct NonGeneric {};

/// Transverse crossing of planar segments (a0,a1), (b0,b1), if any.
inline std::optional<Crossing> planar_crossing(const PlaneFrame& pf, const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                               const Vec3& b1) {
  const Vec2 p(a0.dot(pf.u), a0.dot(pf.v)), r(Vec2((a1 - a0).dot(pf.u), (a1 - a0).dot(pf.v)));
  const Vec2 q(b0.dot(pf.u), b0.dot(pf.v)), s(Vec2((b1 - b0).dot(pf.u), (b1 - b0).dot(pf.v)));
  const double denom = r[0] * s[1] - r[1] * s[0];
  const Vec2 qp = q - p;
  const double scale = r.norm() * s.norm();
  if (std::abs(denom) <= 1e-9 * scale) {
    // parallel: only a problem if they overlap
    if (std::abs(qp[0] * r[1] - qp[1] * r[0]) <= 1e-9 * r.norm() * std::max(qp.norm(), r.norm())) {
      const double t0 = qp.dot(r) / r.squaredNorm(), t1 = (qp + s).dot(r) / r.squaredNorm();
      if (std::max(t0, t1) >= 0.0 && std::min(t0, t1) <= 1.0) throw NonGeneric{};
    }
    return std::nullopt;
  }
  const double t = (qp[0] * s[1] - qp[1] * s[0]) / denom;
  const double w = (qp[0] * r[1] - qp[1] * r[0]) / denom;
  const double edge = 1e-9;
  if (t < -edge || t > 1.0 + edge || w < -edge || w > 1.0 + edge) return std::nullopt;
  if (t < edge || t > 1.0 - edge || w < edge || w > 1.0 - edge) throw NonGeneric{};
  if (std::abs(denom) < 1e-6 * scale) throw NonGeneric{};
  const double ha = (a0 + t * (a1 - a0)).dot(pf.d);
  const double hb = (b0 + w * (b1 - b0)).dot(pf.d);
  if (std::abs(ha - hb) < 1e-10) throw NonGeneric{};
  Crossing c{0, 0, t, w, 0, ha > hb};
  const Vec3 over = c.a_over ? Vec3(a1 - a0) : Vec3(b1 - b0);
  const Vec3 under = c.a_over ? Vec3(b1 - b0) : Vec3(a1 - a0);
  c.sign = over.cross(under).dot(pf.d) > 0 ? 1 : -1;
  return c;
}

struct Box2 {
  double x0, x1, y0, y1;
};

inline std::vector<Box2> segment_boxes(const PlaneFrame& pf, const std::vector<Vec3>& c) {
  std::vector<Box2> boxes(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3& a = c[i];
    const Vec3& b = c[(i + 1) % c.size()];
    const double au = a.dot(pf.u), av = a.dot(pf.v), bu = b.dot(pf.u), bv = b.dot(pf.v);
    boxes[i] = {std::min(au, bu), std::max(au, bu), std::min(av, bv), std::max(av, bv)};
  }
  return boxes;
}

inline bool boxes_overlap(const Box2& a, const Box2& b) {
  const double pad = 1e-12;
  return a.x0 <= b.x1 + pad && b.x0 <= a.x1 + pad && a.y0 <= b.y1 + pad && b.y0 <= a.y1 + pad;
}

/// Crossings between distinct curves a and b.
inline std::vector<Crossing> mutual_crossings(const PlaneFrame& pf, const std::vector<Vec3>& a,
                                              const std::vector<Vec3>& b) {
  const auto ba = segment_boxes(pf, a), bb = segment_boxes(pf, b);
  std::vector<Crossing> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!boxes_overlap(ba[i], bb[j])) continue;
      if (auto c = planar_crossing(pf, a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) {
        c->seg_a = i;
        c->seg_b = j;
        out.push_back(*c);
      }
    }
  return out;
}

/// Self crossings of one closed curve (seg_a < seg_b, adjacent segments skipped).
inline std::vector<Crossing> self_crossings(const PlaneFrame& pf, const std::vector<Vec3>& c) {
  const std::size_t n = c.size();
  const auto boxes = segment_boxes(pf, c);
  std::vector<Crossing> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (!boxes_overlap(boxes[i], boxes[j])) continue;
      if (auto x = planar_crossing(pf, c[i], c[(i + 1) % n], c[j], c[(j + 1) % n])) {
        x->seg_a = i;
        x->seg_b = j;
        out.push_back(*x);
      }
    }
  return out;
}

}  // namespace detail

/// Independent oracle: half the signed crossings of a generic planar
/// projection of the stereographic images.
inline int crossing_linking(const LoopTrace& a, const LoopTrace& b) {
  validate_trace(a);
  validate_trace(b);
  const double d = detail::min_distance(a, b);
  require(d > 1e-3, ErrorKind::proximity, "traces too close: " + std::to_string(d));
  const Vec4 pole = select_pole({&a, &b});
  const auto pa = stereo_project(a, pole), pb = stereo_project(b, pole);
  for (std::size_t attempt = 0; attempt < 26; ++attempt) {
    const auto pf = detail::plane_frame(detail::projection_direction(attempt));
    try {
      int sum = 0;
      for (const auto& c : detail::mutual_crossings(pf, pa, pb)) sum += c.sign;
      require(sum % 2 == 0, ErrorKind::inconsistency, "odd crossing sum between closed curves");
      return sum / 2;
    } catch (const detail::NonGeneric&) {
    }
  }
  fail(ErrorKind::projection, "no generic planar projection found");
}

// --- self-linking -----------------------------------------------------------

/// Trace pushed off along the global frame vector of xi and re-projected to Sigma.
inline LoopTrace pushoff(const StarForm& form, const LoopTrace& tr, double eps, bool use_e2 = false,
                         FrameKind kind = FrameKind::quaternion) {
  LoopTrace out;
  out.points.reserve(tr.points.size());
  for (const auto& x : tr.points) {
    const XiFrame fr = detail::frame_at(form, x, kind);
    out.points.push_back(project_to_level(form, x + eps * (use_e2 ? fr.e2 : fr.e1)));
  }
  return out;
}

struct SelfLinkOptions {
  int n_points = min_trace_points;
  bool use_e2 = false;
  FrameKind kind = FrameKind::quaternion;
  FlowOptions flow;
};

/// lk(L, L_eps) with the same integer required at eps / 2.
inline int self_linking(const StarForm& form, const LoopTrace& tr, double eps, const SelfLinkOptions& o = {}) {
  require(eps > 0, ErrorKind::precondition, "eps must be positive");
  const int a = linking_number(tr, pushoff(form, tr, eps, o.use_e2, o.kind)).lk;
  const int b = linking_number(tr, pushoff(form, tr, 0.5 * eps, o.use_e2, o.kind)).lk;
  if (a != b)
    fail(ErrorKind::eps_instability,
         "self-linking changes under eps halving: " + std::to_string(a) + " vs " + std::to_string(b));
  return a;
}

inline int self_linking(const StarForm& form, const ReebOrbit& orb, double eps, const SelfLinkOptions& o = {}) {
  require(orb.multiplicity == 1, ErrorKind::precondition, "self-linking needs a simply covered orbit");
  return self_linking(form, make_loop_trace(form, orb, o.n_points, o.flow), eps, o);
}

// --- unknot certificate ------------------------------------------------------

namespace detail {

struct GaussEntry {
  int id;
  bool over;
  int sign;
};

/// One pass of Reidemeister I (a crossing met twice in a row) and II (two
/// crossings whose over passes are adjacent and whose under passes are
/// adjacent). Returns true if anything was removed.
inline bool reduce_once(std::vector<GaussEntry>& code) {
  const std::size_t n = code.size();
  if (n == 0) return false;
  auto remove_ids = [&](int a, int b) {
    std::erase_if(code, [&](const GaussEntry& e) { return e.id == a || e.id == b; });
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = code[i];
    const auto& f = code[(i + 1) % n];
    if (e.id == f.id) {
      remove_ids(e.id, e.id);
      return true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = code[i];
    const auto& f = code[(i + 1) % n];
    if (e.over != f.over) continue;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& g = code[k];
      const auto& h = code[(k + 1) % n];
      if (g.over == e.over) continue;
      if ((g.id == e.id && h.id == f.id) || (g.id == f.id && h.id == e.id)) {
        remove_ids(e.id, f.id);
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// Gauss code of a planar diagram of a single closed curve, in traversal order.
inline std::vector<detail::GaussEntry> gauss_code(const std::vector<detail::Crossing>& xs) {
  struct Event {
    double pos;
    detail::GaussEntry e;
  };
  std::vector<Event> ev;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto& c = xs[k];
    ev.push_back({c.seg_a + c.ta, {static_cast<int>(k), c.a_over, c.sign}});
    ev.push_back({c.seg_b + c.tb, {static_cast<int>(k), !c.a_over, c.sign}});
  }
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.pos < b.pos; });
  std::vector<detail::GaussEntry> code;
  for (const auto& e : ev) code.push_back(e.e);
  return code;
}

inline int reduce_gauss_code(std::vector<detail::GaussEntry>& code) {
  while (detail::reduce_once(code)) {
  }
  return static_cast<int>(code.size() / 2);
}

/// Certifies unknottedness or abstains; never claims a knot.
inline KnotVerdict unknot_check(const LoopTrace& tr) {
  validate_trace(tr);
  std::size_t admissible = 0;
  for (const auto& pole : candidate_poles()) {
    if (pole_clearance(tr, pole) < 0.25) continue;
    const auto curve = stereo_project(tr, pole);
    const auto pf = detail::plane_frame(detail::projection_direction(admissible++));
    try {
      const auto xs = detail::self_crossings(pf, curve);
      auto code = gauss_code(xs);
      KnotVerdict v;
      v.crossings_before_reduction = static_cast<int>(xs.size());
      v.crossing_count_after_reduction = reduce_gauss_code(code);
      v.status = v.crossing_count_after_reduction == 0 ? KnotStatus::certified_unknot : KnotStatus::unknown;
      return v;
    } catch (const detail::NonGeneric&) {
    }
  }
  fail(ErrorKind::projection, "no generic projection after trying every admissible pole");
}

// --- report -----------------------------------------------------------------

struct LinkReport {
  struct Pair {
    int a, b, lk;
    double residual;
  };
  struct SelfLink {
    int orbit, sl;
  };
  struct Knot {
    int orbit;
    KnotVerdict verdict;
  };
  std::vector<Pair> pairs;
  std::vector<SelfLink> self_linking;
  std::vector<Knot> knots;
};

inline nlohmann::json link_report_to_json(const LinkReport& r) {
  nlohmann::json j;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : r.pairs) j["pairs"].push_back({{"a", p.a}, {"b", p.b}, {"lk", p.lk}, {"residual", p.residual}});
  j["self_linking"] = nlohmann::json::array();
  for (const auto& s : r.self_linking) j["self_linking"].push_back({{"orbit", s.orbit}, {"sl", s.sl}});
  j["knots"] = nlohmann::json::array();
  for (const auto& k : r.knots)
    j["knots"].push_back({{"orbit", k.orbit},
                          {"status", to_string(k.verdict.status)},
                          {"crossings", k.verdict.crossing_count_after_reduction}});
  return j;
}

}  // namespace reeb_atlas
