#pragma once

// Search, Newton refinement, deduplication and classification of periodic
// Reeb orbits up to a period cap.

#include "reeb_atlas/flow.hpp"
#include "reeb_atlas/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

namespace reeb_atlas {

enum class NondegClass { elliptic, positive_hyperbolic, negative_hyperbolic, degenerate };

inline std::string to_string(NondegClass c) {
  switch (c) {
    case NondegClass::elliptic: return "elliptic";
    case NondegClass::positive_hyperbolic: return "positive-hyperbolic";
    case NondegClass::negative_hyperbolic: return "negative-hyperbolic";
    case NondegClass::degenerate: return "degenerate";
  }
  return "?";
}

inline NondegClass nondeg_class_from_string(const std::string& s) {
  for (NondegClass c : {NondegClass::elliptic, NondegClass::positive_hyperbolic, NondegClass::negative_hyperbolic,
                        NondegClass::degenerate})
    if (to_string(c) == s) return c;
  fail(ErrorKind::parse, "unknown orbit class '" + s + "'");
}

struct ReebOrbit {
  SigmaPoint x0;
  double T_min = 0.0;
  int multiplicity = 1;
  Mat2 monodromy = Mat2::Identity();  ///< at period T = k T_min
  NondegClass nondeg_class = NondegClass::degenerate;
  double residual = 0.0;              ///< |phi_{T_min}(x0) - x0|
  int newton_steps = 0;
  bool rank_deficient = false;        ///< shooting Jacobian lost rank

  double T() const { return multiplicity * T_min; }
  bool degenerate() const { return nondeg_class == NondegClass::degenerate; }
};

struct OrbitSearchOptions {
  FlowOptions flow{};
  double scan_step = 0.025;       ///< sampling cap for the closest-return scan
  double return_threshold = 0.1;  ///< accept local minima of |phi_t x - x| below this
  double escape_threshold = 0.2;  ///< scan starts after the residual first exceeds this
  int returns_per_seed = 3;
  double newton_tol = 1e-10;
  int max_newton = 50;
  double dedupe_threshold = 1e-4;
  int trace_samples = 256;
  double degeneracy_tol = 1e-6;
  std::uint64_t seed_offset = 0;  ///< first Halton index used for seeding
};

struct OrbitDatabase {
  std::string form_hash;
  std::vector<ReebOrbit> orbits;
  double T_max = 0.0;
  std::size_t n_seeds = 0;
  OrbitSearchOptions options{};
  std::uint64_t rng_seed = 0;
  std::vector<std::string> log;
};

/// Type of a 2x2 monodromy by its eigenvalues.
inline NondegClass classify_monodromy(const Mat2& m, double tol = 1e-6) {
  double tr = m.trace();
  double det = m.determinant();
  cplx disc = std::sqrt(cplx(tr * tr - 4.0 * det, 0.0));
  cplx l1 = 0.5 * (tr + disc);
  cplx l2 = 0.5 * (tr - disc);
  if (std::abs(l1 - 1.0) < tol || std::abs(l2 - 1.0) < tol) return NondegClass::degenerate;
  if (std::abs(tr) < 2.0) return NondegClass::elliptic;
  return tr > 0 ? NondegClass::positive_hyperbolic : NondegClass::negative_hyperbolic;
}

inline double closure_residual(const StarForm& form, const Vec4& x, double T, const FlowOptions& opts = {}) {
  return (flow_point(form, x, T, opts) - x).norm();
}

namespace detail {

struct Candidate {
  Vec4 x;
  double T;
};

// Closest returns of one seed trajectory: local minima of |phi_t x - x|
// below the threshold once the trajectory has left the neighbourhood.
inline std::vector<Candidate> scan_returns(const StarForm& form, const Vec4& x, double T_max,
                                           const OrbitSearchOptions& o) {
  FlowOptions fo = o.flow;
  fo.max_step = std::min(fo.max_step, o.scan_step);
  Propagator<false> prop(form, x, +1, fo);
  std::vector<Candidate> out;
  bool escaped = false;
  double t0 = 0, t1 = 0, d0 = 0, d1 = 0;
  int count = 0;
  while (prop.elapsed() < T_max && static_cast<int>(out.size()) < o.returns_per_seed) {
    prop.step(T_max - prop.elapsed());
    double t2 = prop.elapsed();
    double d2 = (prop.point() - x).norm();
    if (!escaped) {
      escaped = d2 > o.escape_threshold;
      t1 = t2;
      d1 = d2;
      count = 0;
      continue;
    }
    if (count >= 1 && d1 < d0 && d1 <= d2 && d1 < o.return_threshold) {
      // vertex of the parabola through (t, d^2)
      double a0 = d0 * d0, a1 = d1 * d1, a2 = d2 * d2;
      double num = (t1 - t0) * (t1 - t0) * (a1 - a2) - (t1 - t2) * (t1 - t2) * (a1 - a0);
      double den = (t1 - t0) * (a1 - a2) - (t1 - t2) * (a1 - a0);
      double tm = t1;
      if (std::abs(den) > 1e-300) tm = t1 - 0.5 * num / den;
      if (!(tm > t0 && tm < t2)) tm = t1;
      out.push_back({x, tm});
    }
    t0 = t1;
    d0 = d1;
    t1 = t2;
    d1 = d2;
    ++count;
  }
  return out;
}

// Golden-section minimisation of the return distance over T, x fixed.
inline double golden_period(const StarForm& form, const Vec4& x, double lo, double hi, const FlowOptions& fo) {
  Propagator<false> base(form, x, +1, fo);
  base.advance(lo);
  auto dist = [&](double t) {
    Propagator<false> p = base;
    p.advance(t - lo);
    return (p.point() - x).norm();
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = dist(c), fd = dist(d);
  for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, hi); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = dist(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = dist(d);
    }
  }
  return 0.5 * (a + b);
}

struct ShootResult {
  Vec4 x;
  double T;
  double residual;
  int steps;
  bool rank_deficient;
};

// Gauss-Newton on phi_T(x) - x = 0, H(x) = 1, <xdot_guess, x - x_guess> = 0.
inline ShootResult shoot(const StarForm& form, const Vec4& x_guess, double T_guess, const OrbitSearchOptions& o) {
  Vec4 x = project_to_level(form, x_guess);
  double T = T_guess;
  const Vec4 anchor = x;
  const Vec4 xdot = hamiltonian_field(form, anchor);
  double res = closure_residual(form, x, T, o.flow);
  ShootResult out{x, T, res, 0, false};
  if (res < o.newton_tol) return out;
  for (int it = 0; it < o.max_newton; ++it) {
    const PointAndJacobian pj = flow_with_jacobian(form, x, T, o.flow);
    Eigen::Matrix<double, 6, 5> J = Eigen::Matrix<double, 6, 5>::Zero();
    Eigen::Matrix<double, 6, 1> F;
    J.block<4, 4>(0, 0) = pj.dphi - Mat4::Identity();
    J.block<4, 1>(0, 4) = hamiltonian_field(form, pj.x);
    J.block<1, 4>(4, 0) = grad_H(form, x).transpose();
    J.block<1, 4>(5, 0) = xdot.transpose();
    F.head<4>() = pj.x - x;
    F[4] = eval_H(form, x) - 1.0;
    F[5] = xdot.dot(x - anchor);
    Eigen::JacobiSVD<Eigen::Matrix<double, 6, 5>> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv[4] < 1e-7 * sv[0]) {
      out.rank_deficient = true;
      // degenerate family: minimise the return distance in T alone
      double width = std::max(0.05, 4.0 * res);
      T = golden_period(form, x, std::max(1e-3, T - width), T + width, o.flow);
      res = closure_residual(form, x, T, o.flow);
      out.x = x;
      out.T = T;
      out.residual = res;
      out.steps = it + 1;
      if (res < o.newton_tol) return out;
      fail(ErrorKind::refinement, "degenerate orbit family: golden-section fallback did not close (residual " +
                                      std::to_string(res) + ")");
    }
    Eigen::Matrix<double, 5, 1> delta = -svd.solve(F);
    double n = delta.norm();
    if (n > 0.1) delta *= 0.1 / n;
    x = project_to_level(form, x + delta.head<4>());
    T += delta[4];
    require(T > 0.0 && std::isfinite(T), ErrorKind::refinement, "Newton drove the period non-positive");
    res = closure_residual(form, x, T, o.flow);
    out = {x, T, res, it + 1, false};
    if (res < o.newton_tol) return out;
  }
  fail(ErrorKind::refinement, "Newton did not converge in " + std::to_string(o.max_newton) +
                                  " iterations (residual " + std::to_string(res) + ")");
}

// Largest m <= 32 with phi_{T/m}(x) = x to 1e-6.
inline int detect_multiplicity(const StarForm& form, const Vec4& x, double T, const FlowOptions& fo) {
  std::vector<double> times;
  for (int m = 32; m >= 2; --m) times.push_back(T / m);
  const FlowResult r = sample_flow(form, x, times, false, fo);
  int best = 1;
  for (std::size_t i = 0; i < times.size(); ++i) {
    int m = 32 - static_cast<int>(i);
    if ((r.points[i].x - x).norm() < 1e-6) best = std::max(best, m);
  }
  return best;
}

// Canonical marked point: the maximum of a fixed generic linear functional
// along the orbit, so independent searches anchor the same orbit identically.
inline Vec4 canonical_anchor(const StarForm& form, const Vec4& x, double T, const FlowOptions& fo) {
  const Vec4 ell = Vec4(1.0, 0.31, 0.17, 0.07).normalized();
  const int n = 512;
  std::vector<double> times(n);
  for (int i = 0; i < n; ++i) times[i] = T * i / n;
  const FlowResult r = sample_flow(form, x, times, false, fo);
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (ell.dot(r.points[i].x) > ell.dot(r.points[best].x)) best = i;
  double lo = T * (best - 1) / n;
  if (lo < 0) lo += T;
  const double width = 2.0 * T / n;
  Propagator<false> start(form, x, +1, fo);
  start.advance(lo);
  auto f = [&](double s) {
    Propagator<false> p = start;
    p.advance(s);
    return ell.dot(p.point());
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0, b = width;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  Propagator<false> p = start;
  p.advance(0.5 * (a + b));
  return project_to_level(form, p.point());
}

}  // namespace detail

/// Newton shooting from a near-return (x_guess, T_guess), followed by prime
/// period extraction. The returned orbit has period T close to T_guess.
inline ReebOrbit refine_orbit(const StarForm& form, const Vec4& x_guess, double T_guess,
                              const OrbitSearchOptions& o = {}) {
  require(T_guess > 0.0 && std::isfinite(T_guess), ErrorKind::precondition, "T_guess must be positive");
  const Vec4 x = project_to_level(form, x_guess);
  double r0 = closure_residual(form, x, T_guess, o.flow);
  if (r0 >= 0.1) {
    fail(ErrorKind::precondition, "initial residual " + std::to_string(r0) + " is not below 0.1");
  }
  detail::ShootResult s = detail::shoot(form, x, T_guess, o);
  ReebOrbit orb;
  orb.newton_steps = s.steps;
  orb.rank_deficient = s.rank_deficient;
  int m = detail::detect_multiplicity(form, s.x, s.T, o.flow);
  orb.multiplicity = m;
  orb.T_min = s.T / m;
  orb.x0 = {s.x};
  if (m > 1) {
    // polish at the prime period; typically zero or one step
    detail::ShootResult p = detail::shoot(form, s.x, orb.T_min, o);
    orb.x0 = {p.x};
    orb.T_min = p.T;
    orb.newton_steps += p.steps;
    orb.rank_deficient = orb.rank_deficient || p.rank_deficient;
  }
  orb.residual = closure_residual(form, orb.x0.x, orb.T_min, o.flow);
  orb.monodromy = monodromy_xi(form, orb.x0, orb.T(), o.flow);
  orb.nondeg_class = orb.rank_deficient ? NondegClass::degenerate : classify_monodromy(orb.monodromy, o.degeneracy_tol);
  return orb;
}

/// Same geometric orbit, k-th iterate, with its own monodromy.
inline ReebOrbit iterate_orbit(const StarForm& form, const ReebOrbit& prime, int k, const FlowOptions& fo = {}) {
  require(k >= 1, ErrorKind::precondition, "iterate must be positive");
  ReebOrbit o = prime;
  o.multiplicity = prime.multiplicity * k;
  o.monodromy = monodromy_xi(form, o.x0, o.T(), fo);
  o.nondeg_class = prime.rank_deficient ? NondegClass::degenerate : classify_monodromy(o.monodromy);
  return o;
}

/// n points at uniform time steps over one prime period (closing point excluded).
inline std::vector<Vec4> orbit_trace(const StarForm& form, const ReebOrbit& orb, int n, const FlowOptions& fo = {}) {
  std::vector<double> times(n);
  for (int i = 0; i < n; ++i) times[i] = orb.T_min * i / n;
  const FlowResult r = sample_flow(form, orb.x0.x, times, false, fo);
  std::vector<Vec4> pts;
  pts.reserve(n);
  for (const auto& p : r.points) pts.push_back(p.x);
  return pts;
}

/// Symmetric Hausdorff distance of two point samples.
inline double hausdorff(const std::vector<Vec4>& a, const std::vector<Vec4>& b) {
  auto directed = [](const std::vector<Vec4>& p, const std::vector<Vec4>& q) {
    double worst = 0.0;
    for (const auto& x : p) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q) best = std::min(best, (x - y).squaredNorm());
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

inline bool orbit_less(const ReebOrbit& a, const ReebOrbit& b) {
  if (a.T() != b.T()) return a.T() < b.T();
  for (int i = 0; i < 4; ++i)
    if (a.x0.x[i] != b.x0.x[i]) return a.x0.x[i] < b.x0.x[i];
  return false;
}

/// Best-effort enumeration of periodic orbits with T <= T_max from the first
/// n_seeds Halton points. Prime orbits are deduplicated; iterates are added.
inline OrbitDatabase find_orbits(const StarForm& form, double T_max, std::size_t n_seeds,
                                 const OrbitSearchOptions& o = {}) {
  require(T_max > 0.0 && std::isfinite(T_max), ErrorKind::precondition, "T_max must be positive");
  OrbitDatabase db;
  db.form_hash = form_hash(form);
  db.T_max = T_max;
  db.n_seeds = n_seeds;
  db.options = o;
  db.rng_seed = o.seed_offset;

  struct SeedOutcome {
    std::vector<ReebOrbit> primes;
    std::vector<std::string> log;
  };
  std::vector<SeedOutcome> outcomes(n_seeds);
  parallel_for(n_seeds, [&](std::size_t i) {
    const Vec4 seed = project_to_level(form, halton_s3(i + o.seed_offset));
    auto& out = outcomes[i];
    std::vector<detail::Candidate> cands;
    try {
      cands = detail::scan_returns(form, seed, T_max, o);
    } catch (const Error& e) {
      out.log.push_back("seed " + std::to_string(i) + ": scan failed: " + e.what());
      return;
    }
    for (const auto& c : cands) {
      try {
        ReebOrbit orb = refine_orbit(form, c.x, c.T, o);
        if (orb.T_min > T_max * (1.0 + 1e-9)) continue;
        // canonical marked point, then confirm closure from there
        Vec4 a = detail::canonical_anchor(form, orb.x0.x, orb.T_min, o.flow);
        ReebOrbit prime = refine_orbit(form, a, orb.T_min, o);
        prime.rank_deficient = prime.rank_deficient || orb.rank_deficient;
        if (prime.multiplicity != 1) {
          out.log.push_back("seed " + std::to_string(i) + ": prime polish changed multiplicity");
          continue;
        }
        if (prime.rank_deficient) prime.nondeg_class = NondegClass::degenerate;
        out.primes.push_back(prime);
      } catch (const Error& e) {
        out.log.push_back("seed " + std::to_string(i) + " (T~" + std::to_string(c.T) + "): dropped: " + e.what());
      }
    }
  });

  std::vector<ReebOrbit> primes;
  std::vector<std::vector<Vec4>> traces;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    for (auto& l : outcomes[i].log) db.log.push_back(std::move(l));
    for (auto& p : outcomes[i].primes) {
      std::vector<Vec4> tr = orbit_trace(form, p, o.trace_samples, o.flow);
      bool dup = false;
      for (std::size_t j = 0; j < primes.size() && !dup; ++j) {
        if (std::abs(primes[j].T_min - p.T_min) > 1e-6 * p.T_min) continue;
        dup = hausdorff(tr, traces[j]) <= o.dedupe_threshold;
      }
      if (!dup) {
        primes.push_back(p);
        traces.push_back(std::move(tr));
      }
    }
  }

  std::vector<ReebOrbit> all;
  for (const auto& p : primes) {
    int kmax = static_cast<int>(std::floor(T_max / p.T_min * (1.0 + 1e-12)));
    all.push_back(p);
    for (int k = 2; k <= kmax; ++k) all.push_back(iterate_orbit(form, p, k, o.flow));
  }
  std::sort(all.begin(), all.end(), orbit_less);
  db.orbits = std::move(all);
  return db;
}

/// Recomputes closure of every entry; residuals above `tol` raise an
/// inconsistency error naming the entry.
inline void verify_database(const StarForm& form, const OrbitDatabase& db, double tol = 1e-9) {
  if (!db.form_hash.empty() && db.form_hash != form_hash(form))
    fail(ErrorKind::inconsistency, "orbit database was produced for a different form");
  for (std::size_t i = 0; i < db.orbits.size(); ++i) {
    const auto& o = db.orbits[i];
    double r = closure_residual(form, o.x0.x, o.T_min);
    if (r >= tol) fail(ErrorKind::inconsistency, "orbit " + std::to_string(i) + " does not close: " + std::to_string(r));
  }
}

struct PeriodGaps {
  double sigma1 = 0.0;
  double sigma2 = std::numeric_limits<double>::infinity();
  double sigma = 0.0;
};

inline PeriodGaps period_gaps(const OrbitDatabase& db, double C) {
  require(!db.orbits.empty(), ErrorKind::precondition, "period_gaps needs a nonempty database");
  std::vector<double> periods;
  for (const auto& o : db.orbits) periods.push_back(o.T());
  std::sort(periods.begin(), periods.end());
  PeriodGaps g;
  g.sigma1 = periods.front();
  std::vector<double> distinct;
  for (double t : periods) {
    if (t > C) break;
    if (distinct.empty() || t - distinct.back() > 1e-8 * t) distinct.push_back(t);
  }
  for (std::size_t i = 1; i < distinct.size(); ++i) g.sigma2 = std::min(g.sigma2, distinct[i] - distinct[i - 1]);
  g.sigma = 0.5 * std::min(g.sigma1, g.sigma2);
  return g;
}

// --- JSON ----------------------------------------------------------------

inline nlohmann::json orbit_to_json(const ReebOrbit& o) {
  return {{"x0", {o.x0.x[0], o.x0.x[1], o.x0.x[2], o.x0.x[3]}},
          {"T_min", o.T_min},
          {"multiplicity", o.multiplicity},
          {"monodromy", {{o.monodromy(0, 0), o.monodromy(0, 1)}, {o.monodromy(1, 0), o.monodromy(1, 1)}}},
          {"class", to_string(o.nondeg_class)},
          {"residual", o.residual},
          {"rank_deficient", o.rank_deficient}};
}

inline ReebOrbit orbit_from_json(const nlohmann::json& j, const std::string& ptr) {
  if (!j.is_object()) json_fail(ptr, "orbit must be an object");
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) json_fail(ptr + "/" + key, "missing field");
    return j[key];
  };
  ReebOrbit o;
  const auto& x = field("x0");
  if (!x.is_array() || x.size() != 4) json_fail(ptr + "/x0", "expected four numbers");
  for (int i = 0; i < 4; ++i) o.x0.x[i] = json_finite(x[i], ptr + "/x0/" + std::to_string(i));
  o.T_min = json_finite(field("T_min"), ptr + "/T_min");
  if (o.T_min <= 0) json_fail(ptr + "/T_min", "must be positive");
  const auto& k = field("multiplicity");
  if (!k.is_number_integer() || k.get<long>() < 1) json_fail(ptr + "/multiplicity", "expected a positive integer");
  o.multiplicity = k.get<int>();
  const auto& m = field("monodromy");
  if (!m.is_array() || m.size() != 2) json_fail(ptr + "/monodromy", "expected a 2x2 matrix");
  for (int r = 0; r < 2; ++r) {
    if (!m[r].is_array() || m[r].size() != 2) json_fail(ptr + "/monodromy/" + std::to_string(r), "expected two numbers");
    for (int c = 0; c < 2; ++c)
      o.monodromy(r, c) = json_finite(m[r][c], ptr + "/monodromy/" + std::to_string(r) + "/" + std::to_string(c));
  }
  const auto& cls = field("class");
  if (!cls.is_string()) json_fail(ptr + "/class", "expected a string");
  try {
    o.nondeg_class = nondeg_class_from_string(cls.get<std::string>());
  } catch (const Error& e) {
    json_fail(ptr + "/class", e.what());
  }
  if (j.contains("residual")) o.residual = json_finite(j["residual"], ptr + "/residual");
  if (j.contains("rank_deficient")) {
    if (!j["rank_deficient"].is_boolean()) json_fail(ptr + "/rank_deficient", "expected a boolean");
    o.rank_deficient = j["rank_deficient"].get<bool>();
  }
  return o;
}

inline nlohmann::json database_to_json(const OrbitDatabase& db) {
  nlohmann::json orbits = nlohmann::json::array();
  for (const auto& o : db.orbits) orbits.push_back(orbit_to_json(o));
  return {{"form_hash", db.form_hash},
          {"rng_seed", db.rng_seed},
          {"search", {{"T_max", db.T_max}, {"n_seeds", db.n_seeds}, {"newton_tol", db.options.newton_tol},
                      {"dedupe_threshold", db.options.dedupe_threshold}, {"flow_tol", db.options.flow.tol}}},
          {"orbits", orbits}};
}

/// Accepts the full database object or a bare orbit array.
inline OrbitDatabase database_from_json(const nlohmann::json& j) {
  OrbitDatabase db;
  const nlohmann::json* arr = &j;
  std::string base;
  if (j.is_object()) {
    if (j.contains("form_hash")) {
      if (!j["form_hash"].is_string()) json_fail("/form_hash", "expected a string");
      db.form_hash = j["form_hash"].get<std::string>();
    }
    if (j.contains("rng_seed") && j["rng_seed"].is_number_integer()) db.rng_seed = j["rng_seed"].get<std::uint64_t>();
    if (j.contains("search") && j["search"].is_object()) {
      const auto& s = j["search"];
      if (s.contains("T_max")) db.T_max = json_finite(s["T_max"], "/search/T_max");
      if (s.contains("n_seeds") && s["n_seeds"].is_number_integer()) db.n_seeds = s["n_seeds"].get<std::size_t>();
    }
    if (!j.contains("orbits")) json_fail("/orbits", "missing field");
    arr = &j["orbits"];
    base = "/orbits";
  }
  if (!arr->is_array()) json_fail(base.empty() ? "/" : base, "expected an array of orbits");
  for (std::size_t i = 0; i < arr->size(); ++i)
    db.orbits.push_back(orbit_from_json((*arr)[i], base + "/" + std::to_string(i)));
  return db;
}

}  // namespace reeb_atlas
