#pragma once

// Tight contact forms on S^3 seen as star-shaped levels Sigma = H^{-1}(1) in
// R^4: the Hamiltonian, the Reeb field, the global frame of xi and the
// projection TSigma -> xi.

#include "reeb_atlas/error.hpp"
#include "reeb_atlas/linalg.hpp"
#include "reeb_atlas/sampling.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace reeb_atlas {

struct Monomial {
  std::array<int, 4> exponent{};
  double coeff = 0.0;
};

enum class FormKind { ellipsoid, weighted };

/// A star-shaped level. Ellipsoids are stored exactly through r_j^2:
///   H = (q1^2 + p1^2)/r1^2 + (q2^2 + p2^2)/r2^2.
/// Weighted forms use H(x) = Q(x) / p(x/|x|) with p a polynomial weight and
/// Q the ellipsoid quadratic above (r^2 = (1,1) gives H = |x|^2 / f).
struct StarForm {
  FormKind kind = FormKind::ellipsoid;
  std::array<double, 2> r_squared{1.0, 1.0};
  std::vector<Monomial> monomials;
  std::string name;

  static StarForm ellipsoid(double r1sq, double r2sq, std::string label = {}) {
    StarForm f;
    f.kind = FormKind::ellipsoid;
    f.r_squared = {r1sq, r2sq};
    f.name = std::move(label);
    return f;
  }

  static StarForm round_sphere() { return ellipsoid(1.0, 1.0, "round"); }

  static StarForm weighted(std::vector<Monomial> terms, std::array<double, 2> base = {1.0, 1.0},
                           std::string label = {}) {
    StarForm f;
    f.kind = FormKind::weighted;
    f.r_squared = base;
    f.monomials = std::move(terms);
    f.name = std::move(label);
    return f;
  }

  bool is_ellipsoid() const { return kind == FormKind::ellipsoid; }
};

struct SigmaPoint {
  Vec4 x = Vec4::Zero();
};

struct XiFrame {
  Vec4 e1 = Vec4::Zero();
  Vec4 e2 = Vec4::Zero();
};

/// Two constructions of a global symplectic frame of xi. `twisted` rotates
/// the quaternionic frame by a smooth angle function, so it lies in the same
/// homotopy class.
enum class FrameKind { quaternion, twisted };

struct HamiltonianJet {
  double value = 0.0;
  Vec4 grad = Vec4::Zero();
  Mat4 hess = Mat4::Zero();
};

namespace detail {

inline double ipow(double u, int e) {
  if (e < 0) return 0.0;
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= u;
  return r;
}

struct PolyJet {
  double value = 0.0;
  Vec4 grad = Vec4::Zero();
  Mat4 hess = Mat4::Zero();
};

inline PolyJet eval_poly(const std::vector<Monomial>& terms, const Vec4& u, bool with_hess) {
  PolyJet j;
  for (const auto& m : terms) {
    const auto& e = m.exponent;
    std::array<double, 4> p0{}, p1{}, p2{};
    for (int i = 0; i < 4; ++i) {
      p0[i] = ipow(u[i], e[i]);
      p1[i] = e[i] * ipow(u[i], e[i] - 1);
      p2[i] = e[i] * (e[i] - 1) * ipow(u[i], e[i] - 2);
    }
    j.value += m.coeff * p0[0] * p0[1] * p0[2] * p0[3];
    for (int i = 0; i < 4; ++i) {
      double g = m.coeff * p1[i];
      for (int k = 0; k < 4; ++k)
        if (k != i) g *= p0[k];
      j.grad[i] += g;
    }
    if (!with_hess) continue;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        double h = m.coeff;
        if (a == b) {
          h *= p2[a];
          for (int k = 0; k < 4; ++k)
            if (k != a) h *= p0[k];
        } else {
          h *= p1[a] * p1[b];
          for (int k = 0; k < 4; ++k)
            if (k != a && k != b) h *= p0[k];
        }
        j.hess(a, b) += h;
      }
    }
  }
  return j;
}

inline double quadratic(const StarForm& f, const Vec4& x) {
  return (x[0] * x[0] + x[1] * x[1]) / f.r_squared[0] + (x[2] * x[2] + x[3] * x[3]) / f.r_squared[1];
}

}  // namespace detail

/// Weight p(u) at a unit vector u (weighted forms); 1 for ellipsoids.
inline double form_weight(const StarForm& f, const Vec4& u) {
  if (f.is_ellipsoid()) return 1.0;
  return detail::eval_poly(f.monomials, u, false).value;
}

/// H and its exact first and second derivatives.
inline HamiltonianJet hamiltonian_jet(const StarForm& f, const Vec4& x, bool with_hess = true) {
  double r2 = x.squaredNorm();
  require(r2 > 0.0 && std::isfinite(r2), ErrorKind::domain, "H is undefined at the origin");
  HamiltonianJet out;
  const Vec4 inv_a(1.0 / f.r_squared[0], 1.0 / f.r_squared[0], 1.0 / f.r_squared[1],
                   1.0 / f.r_squared[1]);
  const double q = detail::quadratic(f, x);
  const Vec4 gq = 2.0 * inv_a.cwiseProduct(x);
  if (f.is_ellipsoid()) {
    out.value = q;
    out.grad = gq;
    if (with_hess) out.hess = (2.0 * inv_a).asDiagonal();
    return out;
  }
  const double r = std::sqrt(r2);
  const Vec4 u = x / r;
  const detail::PolyJet pj = detail::eval_poly(f.monomials, u, with_hess);
  const Mat4 proj = Mat4::Identity() - u * u.transpose();
  const double g = pj.value;
  const Vec4 pg = proj * pj.grad;
  const Vec4 gg = pg / r;
  out.value = q / g;
  out.grad = gq / g - q * gg / (g * g);
  if (with_hess) {
    const Mat4 hg = (proj * pj.hess * proj - u * pg.transpose() - pg * u.transpose() -
                     u.dot(pj.grad) * proj) /
                    r2;
    const Mat4 hq = (2.0 * inv_a).asDiagonal();
    out.hess = hq / g - (gq * gg.transpose() + gg * gq.transpose()) / (g * g) - q * hg / (g * g) +
               2.0 * q * gg * gg.transpose() / (g * g * g);
  }
  return out;
}

inline double eval_H(const StarForm& f, const Vec4& x) { return hamiltonian_jet(f, x, false).value; }
inline Vec4 grad_H(const StarForm& f, const Vec4& x) { return hamiltonian_jet(f, x, false).grad; }
inline Mat4 hess_H(const StarForm& f, const Vec4& x) { return hamiltonian_jet(f, x, true).hess; }

/// Rejects forms whose weight is not positive on a 10^4-point quasi-uniform
/// sample of S^3, or whose parameters are not finite.
inline void validate_form(const StarForm& f) {
  for (double a : f.r_squared)
    require(std::isfinite(a) && a > 0.0, ErrorKind::domain, "r_squared entries must be positive");
  if (f.is_ellipsoid()) return;
  require(!f.monomials.empty(), ErrorKind::domain, "weighted form needs at least one monomial");
  for (const auto& m : f.monomials) {
    require(std::isfinite(m.coeff), ErrorKind::domain, "monomial coefficient is not finite");
    for (int e : m.exponent) require(e >= 0 && e <= 32, ErrorKind::domain, "monomial exponent out of range");
  }
  for (std::size_t i = 0; i < 10000; ++i) {
    double w = form_weight(f, halton_s3(i));
    if (!(w > 0.0) || !std::isfinite(w)) {
      std::ostringstream os;
      os << "weight f is not positive at sample " << i;
      fail(ErrorKind::domain, os.str());
    }
  }
}

/// Radial projection onto Sigma, exact by degree-2 homogeneity.
inline Vec4 project_to_level(const StarForm& f, const Vec4& x) { return x / std::sqrt(eval_H(f, x)); }

inline SigmaPoint sigma_point(const StarForm& f, const Vec4& x) { return {project_to_level(f, x)}; }

inline void require_on_level(const StarForm& f, const Vec4& x, double tol = 1e-9) {
  double h = eval_H(f, x);
  if (std::abs(h - 1.0) > tol) {
    std::ostringstream os;
    os << "point is off the level H = 1 (H - 1 = " << (h - 1.0) << ")";
    fail(ErrorKind::precondition, os.str());
  }
}

/// X_H with i_X omega = -dH, at any x != 0. On Sigma this is the Reeb field.
inline Vec4 hamiltonian_field(const StarForm& f, const Vec4& x) {
  const Vec4 g = grad_H(f, x);
  return {-g[1], g[0], -g[3], g[2]};
}

inline Vec4 reeb_vector(const StarForm& f, const SigmaPoint& p) {
  require_on_level(f, p.x);
  return hamiltonian_field(f, p.x);
}

namespace detail {

// j.x = (-conj z2, conj z1), k.x = i j.x
inline Vec4 quat_j(const Vec4& x) { return {-x[2], x[3], x[0], -x[1]}; }
inline Vec4 quat_k(const Vec4& x) { return {-x[3], -x[2], x[1], x[0]}; }

/// omega-orthogonal projection onto span{Y, X_H}^omega with Y = x/2; this
/// extends the projection onto xi smoothly off the level.
inline Vec4 project_xi_complement(const Vec4& x, const Vec4& grad, const Vec4& field, double h,
                                  const Vec4& v) {
  double a = grad.dot(v) / h;
  double b = lambda0(x, v) / h;
  return v - a * (0.5 * x) - b * field;
}

inline double twist_angle(const Vec4& x) { return 2.0 * x[0] * x[3] + 0.7; }

/// Frame at any x != 0 (no level check).
inline XiFrame frame_at(const StarForm& f, const Vec4& x, FrameKind kind) {
  const HamiltonianJet jet = hamiltonian_jet(f, x, false);
  const Vec4 field(-jet.grad[1], jet.grad[0], -jet.grad[3], jet.grad[2]);
  const Vec4 u = x.normalized();
  Vec4 a = project_xi_complement(x, jet.grad, field, jet.value, quat_j(u));
  Vec4 b = project_xi_complement(x, jet.grad, field, jet.value, quat_k(u));
  if (a.norm() < 1e-6 || b.norm() < 1e-6) {
    std::ostringstream os;
    os << "projected frame vector vanishes at x = (" << x.transpose() << ")";
    fail(ErrorKind::frame_degeneracy, os.str());
  }
  double s = omega(a, b);
  require(s > 1e-12, ErrorKind::frame_degeneracy, "projected frame is not symplectic");
  double scale = 1.0 / std::sqrt(s);
  XiFrame fr{a * scale, b * scale};
  if (kind == FrameKind::twisted) {
    double t = twist_angle(x);
    double c = std::cos(t), sn = std::sin(t);
    fr = XiFrame{c * fr.e1 + sn * fr.e2, -sn * fr.e1 + c * fr.e2};
  }
  return fr;
}

}  // namespace detail

inline XiFrame xi_frame(const StarForm& f, const SigmaPoint& p, FrameKind kind = FrameKind::quaternion) {
  require_on_level(f, p.x);
  return detail::frame_at(f, p.x, kind);
}

/// Frame coordinates (a, b) of w = a e1 + b e2. Components of w along Y
/// and R are annihilated automatically.
inline Vec2 frame_coords(const XiFrame& fr, const Vec4& w) { return {omega(w, fr.e2), omega(fr.e1, w)}; }

/// Coordinates of pi v = v - lambda0(v) R in the global frame.
inline Vec2 xi_project(const StarForm& f, const SigmaPoint& p, const Vec4& v,
                       FrameKind kind = FrameKind::quaternion) {
  require_on_level(f, p.x);
  const Vec4 g = grad_H(f, p.x);
  double scale = std::max(1.0, v.norm());
  if (std::abs(g.dot(v)) > 1e-9 * scale)
    fail(ErrorKind::precondition, "vector is not tangent to the level");
  const Vec4 r = hamiltonian_field(f, p.x);
  const Vec4 piv = v - lambda0(p.x, v) * r;
  return frame_coords(detail::frame_at(f, p.x, kind), piv);
}

// --- JSON interface -------------------------------------------------------

/// Raised for malformed StarForm JSON; `pointer` locates the bad field.
inline void json_fail(const std::string& pointer, const std::string& what) {
  fail(ErrorKind::parse, pointer + ": " + what);
}

inline double json_finite(const nlohmann::json& j, const std::string& pointer) {
  if (!j.is_number()) json_fail(pointer, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) json_fail(pointer, "number must be finite");
  return v;
}

inline StarForm form_from_json(const nlohmann::json& j, const std::string& base = "") {
  if (!j.is_object()) json_fail(base.empty() ? "/" : base, "form must be an object");
  if (!j.contains("type") || !j["type"].is_string()) json_fail(base + "/type", "missing string field");
  const std::string type = j["type"].get<std::string>();
  StarForm f;
  if (j.contains("name")) {
    if (!j["name"].is_string()) json_fail(base + "/name", "expected a string");
    f.name = j["name"].get<std::string>();
  }
  auto read_r2 = [&](bool required) {
    if (!j.contains("r_squared")) {
      if (required) json_fail(base + "/r_squared", "missing field");
      return;
    }
    const auto& r = j["r_squared"];
    if (!r.is_array() || r.size() != 2) json_fail(base + "/r_squared", "expected [r1sq, r2sq]");
    for (int i = 0; i < 2; ++i) {
      std::string ptr = base + "/r_squared/" + std::to_string(i);
      f.r_squared[i] = json_finite(r[i], ptr);
      if (f.r_squared[i] <= 0.0) json_fail(ptr, "must be positive");
    }
  };
  if (type == "ellipsoid") {
    f.kind = FormKind::ellipsoid;
    read_r2(true);
  } else if (type == "weighted") {
    f.kind = FormKind::weighted;
    read_r2(false);
    if (!j.contains("monomials") || !j["monomials"].is_array())
      json_fail(base + "/monomials", "expected an array");
    const auto& ms = j["monomials"];
    for (std::size_t i = 0; i < ms.size(); ++i) {
      std::string ptr = base + "/monomials/" + std::to_string(i);
      const auto& m = ms[i];
      if (!m.is_object()) json_fail(ptr, "expected an object");
      if (!m.contains("exp") || !m["exp"].is_array() || m["exp"].size() != 4)
        json_fail(ptr + "/exp", "expected four integer exponents");
      Monomial mono;
      for (int k = 0; k < 4; ++k) {
        const auto& e = m["exp"][k];
        if (!e.is_number_integer() || e.get<long>() < 0 || e.get<long>() > 32)
          json_fail(ptr + "/exp/" + std::to_string(k), "expected an integer in [0, 32]");
        mono.exponent[k] = e.get<int>();
      }
      if (!m.contains("coeff")) json_fail(ptr + "/coeff", "missing field");
      mono.coeff = json_finite(m["coeff"], ptr + "/coeff");
      f.monomials.push_back(mono);
    }
    if (f.monomials.empty()) json_fail(base + "/monomials", "must not be empty");
  } else {
    json_fail(base + "/type", "unknown form type '" + type + "'");
  }
  try {
    validate_form(f);
  } catch (const Error& e) {
    json_fail(base.empty() ? "/" : base, e.what());
  }
  return f;
}

inline nlohmann::json form_to_json(const StarForm& f) {
  nlohmann::json j;
  if (f.is_ellipsoid()) {
    j["type"] = "ellipsoid";
    j["r_squared"] = {f.r_squared[0], f.r_squared[1]};
  } else {
    j["type"] = "weighted";
    if (f.r_squared != std::array<double, 2>{1.0, 1.0}) j["r_squared"] = {f.r_squared[0], f.r_squared[1]};
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : f.monomials)
      ms.push_back({{"exp", {m.exponent[0], m.exponent[1], m.exponent[2], m.exponent[3]}}, {"coeff", m.coeff}});
    j["monomials"] = ms;
  }
  if (!f.name.empty()) j["name"] = f.name;
  return j;
}

/// FNV-1a over the canonical JSON text; stable across platforms.
inline std::string form_hash(const StarForm& f) {
  nlohmann::json j = form_to_json(f);
  j.erase("name");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace reeb_atlas
