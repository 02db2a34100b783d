#pragma once

// Conley-Zehnder indices of periodic Reeb orbits, computed from the rotation
// interval of the linearized flow and, independently, from eigenvalue
// windings of the asymptotic operator.

#include "reeb_atlas/orbits.hpp"

#include <lapacke.h>

#include <functional>
#include <map>
#include <optional>

namespace reeb_atlas {

/// phi(t_i) at t_i = i/(n-1), i = 0..n-1.
struct SymplecticPath {
  std::vector<Mat2> samples;

  std::size_t size() const { return samples.size(); }
  const Mat2& back() const { return samples.back(); }
};

struct RotationInterval {
  double lo = 0.0;
  double hi = 0.0;
  double degenerate_margin = 0.0;  ///< distance of {lo, hi} to the nearest integer
  int n_dirs = 0;                  ///< directions used after refinement
};

struct CZResult {
  int mu = 0;
  bool degenerate = false;
};

struct SpectralData {
  std::vector<double> eigenvalues;  ///< ascending, |a| <= window
  std::vector<int> windings;
  double nu_neg = 0.0;
  double nu_pos = 0.0;
  int wind_nu_neg = 0;
  int wind_nu_pos = 0;
  int b = 0;  ///< negative eigenvalues sharing the winding of nu_neg
  int p = 0;
  double window = 0.0;
  int n_grid = 0;
};

// --- paths ---------------------------------------------------------------

inline void validate_path(const SymplecticPath& path, std::size_t min_samples = 256) {
  if (path.size() < min_samples)
    fail(ErrorKind::precondition, "symplectic path needs at least " + std::to_string(min_samples) + " samples");
  if ((path.samples.front() - Mat2::Identity()).norm() > 1e-12)
    fail(ErrorKind::precondition, "symplectic path must start at the identity");
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (std::abs(path.samples[i].determinant() - 1.0) > 1e-6)
      fail(ErrorKind::precondition, "sample " + std::to_string(i) + " is not symplectic");
    if (i + 1 < path.size() && (path.samples[i + 1] - path.samples[i]).norm() >= 0.5)
      fail(ErrorKind::resolution, "path too coarse at sample " + std::to_string(i) + ": densify");
  }
}

/// Solves phi' = B(t) phi, phi(0) = I, with classical RK4 substeps.
inline SymplecticPath path_from_generator(const std::function<Mat2(double)>& B, int n = 512, int substeps = 8) {
  SymplecticPath p;
  p.samples.reserve(n);
  Mat2 phi = Mat2::Identity();
  p.samples.push_back(phi);
  const double h = 1.0 / ((n - 1) * substeps);
  double t = 0.0;
  for (int i = 1; i < n; ++i) {
    for (int s = 0; s < substeps; ++s) {
      Mat2 k1 = B(t) * phi;
      Mat2 k2 = B(t + 0.5 * h) * (phi + 0.5 * h * k1);
      Mat2 k3 = B(t + 0.5 * h) * (phi + 0.5 * h * k2);
      Mat2 k4 = B(t + h) * (phi + h * k3);
      phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
    }
    p.samples.push_back(phi);
  }
  return p;
}

inline SymplecticPath rotation_path(double turns, int n = 512) {
  SymplecticPath p;
  for (int i = 0; i < n; ++i) p.samples.push_back(rotation(two_pi * turns * i / (n - 1)));
  return p;
}

/// Pointwise product psi(t) phi(t); both paths on the same grid.
inline SymplecticPath path_product(const SymplecticPath& psi, const SymplecticPath& phi) {
  require(psi.size() == phi.size(), ErrorKind::precondition, "path grids differ");
  SymplecticPath out;
  for (std::size_t i = 0; i < phi.size(); ++i) out.samples.push_back(psi.samples[i] * phi.samples[i]);
  return out;
}

inline SymplecticPath path_inverse(const SymplecticPath& phi) {
  SymplecticPath out;
  for (const auto& m : phi.samples) out.samples.push_back(m.inverse());
  return out;
}

/// Path of the k-fold iterate: phi_k(t) = phi(s) phi(1)^j where k t = j + s.
inline SymplecticPath iterate_path(const SymplecticPath& phi, int k) {
  require(k >= 1, ErrorKind::precondition, "iterate must be positive");
  const std::size_t m = phi.size() - 1;
  SymplecticPath out;
  Mat2 power = Mat2::Identity();
  for (int j = 0; j < k; ++j) {
    for (std::size_t r = (j == 0 ? 0 : 1); r <= m; ++r) out.samples.push_back(phi.samples[r] * power);
    power = phi.back() * power;
  }
  return out;
}

/// Psi_t d phi_{Tt} Psi_0^{-1} along the orbit (period T = k T_min), sampled
/// densely enough for the resolution guard.
inline SymplecticPath trivialized_path(const StarForm& form, const ReebOrbit& orbit,
                                       FrameKind kind = FrameKind::quaternion, const FlowOptions& fo = {},
                                       int n0 = 256) {
  if (orbit.residual >= 1e-9)
    fail(ErrorKind::precondition, "orbit residual " + std::to_string(orbit.residual) + " is not below 1e-9");
  const double T = orbit.T();
  for (int n = std::max(n0, 256); n <= (1 << 17); n *= 2) {
    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) times[i] = T * i / (n - 1);
    const FlowResult r = sample_flow(form, orbit.x0.x, times, true, fo);
    const XiFrame f0 = detail::frame_at(form, orbit.x0.x, kind);
    SymplecticPath path;
    path.samples.reserve(n);
    bool fine = true;
    for (int i = 0; i < n; ++i) {
      const XiFrame f1 = detail::frame_at(form, r.points[i].x, kind);
      const Mat4& d = (*r.monodromy4)[i];
      Mat2 m;
      m.col(0) = frame_coords(f1, d * f0.e1);
      m.col(1) = frame_coords(f1, d * f0.e2);
      if (i == 0) m = Mat2::Identity();
      if (i > 0 && (m - path.samples.back()).norm() >= 0.5) fine = false;
      path.samples.push_back(m);
    }
    if (fine) return path;
  }
  fail(ErrorKind::resolution, "trivialized path does not resolve at 2^17 samples");
}

// --- geometric index -----------------------------------------------------

namespace detail {

inline std::pair<double, double> interval_at(const SymplecticPath& path, int n_dirs) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int m = 0; m < n_dirs; ++m) {
    const double a = pi * m / n_dirs;
    const Vec2 z(std::cos(a), std::sin(a));
    double prev = a;
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
      const Vec2 w = path.samples[i] * z;
      double ang = std::atan2(w[1], w[0]);
      total += wrap_angle(ang - prev);
      prev = ang;
    }
    double delta = total / two_pi;
    lo = std::min(lo, delta);
    hi = std::max(hi, delta);
  }
  return {lo, hi};
}

}  // namespace detail

/// I(phi) = {Delta(z)} sampled over n_dirs directions of the half circle,
/// doubled until both endpoints move by less than 1e-3.
inline RotationInterval rotation_interval(const SymplecticPath& path, int n_dirs = 360) {
  validate_path(path);
  auto [lo, hi] = detail::interval_at(path, n_dirs);
  int n = n_dirs;
  for (int round = 0; round < 8; ++round) {
    auto [lo2, hi2] = detail::interval_at(path, 2 * n);
    n *= 2;
    bool stable = std::abs(lo2 - lo) < 1e-3 && std::abs(hi2 - hi) < 1e-3;
    lo = lo2;
    hi = hi2;
    if (stable) break;
  }
  RotationInterval out;
  out.lo = lo;
  out.hi = hi;
  out.n_dirs = n;
  out.degenerate_margin =
      std::min(std::abs(lo - std::round(lo)), std::abs(hi - std::round(hi)));
  return out;
}

inline CZResult cz_from_interval(const RotationInterval& I) {
  if (!(I.hi - I.lo < 0.5)) {
    std::ostringstream os;
    os << "rotation interval [" << I.lo << ", " << I.hi << "] has length >= 1/2";
    fail(ErrorKind::inconsistency, os.str());
  }
  CZResult r;
  double k = std::ceil(I.lo);
  if (k <= I.hi)
    r.mu = 2 * static_cast<int>(k);
  else
    r.mu = 2 * static_cast<int>(std::floor(I.lo)) + 1;
  r.degenerate = I.degenerate_margin < 1e-4;
  return r;
}

/// Winding of the rotation part of the polar decomposition along a loop.
inline int maslov_loop(const SymplecticPath& loop) {
  require(loop.size() >= 2, ErrorKind::precondition, "loop needs samples");
  if ((loop.back() - loop.samples.front()).norm() >= 1e-8)
    fail(ErrorKind::precondition, "path is not a loop");
  auto angle = [](const Mat2& m) { return std::atan2(m(1, 0) - m(0, 1), m(0, 0) + m(1, 1)); };
  double prev = angle(loop.samples.front());
  double total = 0.0;
  for (std::size_t i = 1; i < loop.size(); ++i) {
    double a = angle(loop.samples[i]);
    total += wrap_angle(a - prev);
    prev = a;
  }
  return static_cast<int>(std::lround(total / two_pi));
}

// --- spectral index ------------------------------------------------------

namespace detail {

inline int folded_index(int i, int comp, int N) {
  int pos = i < N / 2 ? 2 * i : 2 * (N - 1 - i) + 1;
  return 2 * pos + comp;
}

}  // namespace detail

/// Spectrum of -J0 d/dt + S(t) on the unit circle with S sampled at t_i = i/N.
/// d/dt is discretized by a forward difference acting on the second
/// component and its transpose on the first, which keeps the matrix
/// symmetric without spurious modes. Eigenpairs with |a| <= N/8 are kept;
/// eigenvalues come from the banded solver, eigenvectors from inverse iteration.
inline SpectralData spectrum_from_symmetric(const std::vector<Mat2>& S) {
  const int N = static_cast<int>(S.size());
  require(N >= 16 && N % 2 == 0, ErrorKind::precondition, "grid size must be even and >= 16");
  const lapack_int n = 2 * N;
  const lapack_int kd = 5;
  const lapack_int ldab = kd + 1;
  std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
  auto add = [&](int r, int c, double v) {
    if (r > c) std::swap(r, c);
    require(c - r <= kd, ErrorKind::precondition, "band overflow");
    ab[static_cast<std::size_t>(kd + r - c) + static_cast<std::size_t>(c) * ldab] += v;
  };
  const double inv_h = static_cast<double>(N);
  for (int i = 0; i < N; ++i) {
    const Mat2 s = 0.5 * (S[i] + S[i].transpose());
    int a0 = detail::folded_index(i, 0, N);
    int a1 = detail::folded_index(i, 1, N);
    int b1 = detail::folded_index((i + 1) % N, 1, N);
    add(a0, a0, s(0, 0));
    add(a1, a1, s(1, 1));
    add(a0, a1, s(0, 1) - inv_h);
    add(a0, b1, inv_h);
  }
  const double window = N / 8.0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  lapack_int m = 0;
  std::vector<double> w(n);
  std::vector<lapack_int> ifail(n);
  std::vector<double> work(ab);
  double qdummy = 0.0, zdummy = 0.0;
  lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'V', 'U', n, kd, work.data(), ldab, &qdummy, 1, -window,
                                   window, 0, 0, abstol, &m, w.data(), &zdummy, 1, ifail.data());
  if (info != 0) fail(ErrorKind::inconsistency, "dsbevx failed with info = " + std::to_string(info));

  // Eigenvectors by shifted inverse iteration on the band (general band LU).
  const lapack_int ldlu = 3 * kd + 1;
  auto full = [&](int r, int c) -> double {
    if (r > c) std::swap(r, c);
    if (c - r > kd) return 0.0;
    return ab[static_cast<std::size_t>(kd + r - c) + static_cast<std::size_t>(c) * ldab];
  };
  std::vector<double> lu(static_cast<std::size_t>(ldlu) * n);
  std::vector<lapack_int> ipiv(n);
  std::vector<std::vector<double>> vecs;
  Rng rng(12345);
  for (lapack_int j = 0; j < m; ++j) {
    const double sigma = w[j] + 1e-9 * std::max(1.0, std::abs(w[j]));
    std::fill(lu.begin(), lu.end(), 0.0);
    for (int c = 0; c < n; ++c)
      for (int r = std::max(0, c - static_cast<int>(kd)); r <= std::min<int>(n - 1, c + kd); ++r)
        lu[static_cast<std::size_t>(2 * kd + r - c) + static_cast<std::size_t>(c) * ldlu] =
            full(r, c) - (r == c ? sigma : 0.0);
    info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kd, kd, lu.data(), ldlu, ipiv.data());
    if (info < 0) fail(ErrorKind::inconsistency, "dgbtrf failed with info = " + std::to_string(info));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    // earlier members of the same eigenvalue cluster
    std::vector<std::size_t> cluster;
    for (lapack_int i = j - 1; i >= 0 && std::abs(w[i] - w[j]) < 1e-6 * std::max(1.0, std::abs(w[j])); --i)
      cluster.push_back(static_cast<std::size_t>(i));
    for (int it = 0; it < 3; ++it) {
      info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kd, kd, 1, lu.data(), ldlu, ipiv.data(), v.data(), n);
      if (info != 0) fail(ErrorKind::inconsistency, "dgbtrs failed with info = " + std::to_string(info));
      for (std::size_t c : cluster) {
        double d = 0.0;
        for (int i = 0; i < n; ++i) d += v[i] * vecs[c][i];
        for (int i = 0; i < n; ++i) v[i] -= d * vecs[c][i];
      }
      double nrm = 0.0;
      for (double x : v) nrm += x * x;
      nrm = std::sqrt(nrm);
      for (double& x : v) x /= nrm;
    }
    vecs.push_back(std::move(v));
  }

  SpectralData out;
  out.window = window;
  out.n_grid = N;
  for (lapack_int j = 0; j < m; ++j) {
    const double* v = vecs[j].data();
    auto at = [&](int i) {
      return std::atan2(v[detail::folded_index(i, 1, N)], v[detail::folded_index(i, 0, N)]);
    };
    double total = 0.0;
    double prev = at(0);
    for (int i = 1; i <= N; ++i) {
      double a = at(i % N);
      total += wrap_angle(a - prev);
      prev = a;
    }
    out.eigenvalues.push_back(w[j]);
    out.windings.push_back(static_cast<int>(std::lround(total / two_pi)));
  }
  // dsbevx returns ascending eigenvalues
  int neg = -1, pos = -1;
  for (std::size_t j = 0; j < out.eigenvalues.size(); ++j) {
    double a = out.eigenvalues[j];
    if (std::abs(a) < 1e-6) {
      std::ostringstream os;
      os << "asymptotic operator has eigenvalue " << a << " within 1e-6 of 0: degenerate orbit";
      fail(ErrorKind::degeneracy, os.str());
    }
    if (a < 0) neg = static_cast<int>(j);
    if (a > 0 && pos < 0) pos = static_cast<int>(j);
  }
  if (neg < 0 || pos < 0) fail(ErrorKind::resolution, "no eigenvalue of one sign inside the window");
  out.nu_neg = out.eigenvalues[neg];
  out.nu_pos = out.eigenvalues[pos];
  out.wind_nu_neg = out.windings[neg];
  out.wind_nu_pos = out.windings[pos];
  for (int j = 0; j <= neg; ++j)
    if (out.windings[j] == out.wind_nu_neg) ++out.b;
  out.p = (out.b % 2 == 0) ? 1 : 0;
  return out;
}

/// S(t) = J0 phi' phi^{-1} in frame coordinates along the orbit, from the
/// transport generator T (D X_H + frame derivative along R).
inline std::vector<Mat2> asymptotic_symmetric_part(const StarForm& form, const ReebOrbit& orbit, int N,
                                                   FrameKind kind = FrameKind::quaternion,
                                                   const FlowOptions& fo = {}) {
  const double T = orbit.T();
  std::vector<double> times(N);
  for (int i = 0; i < N; ++i) times[i] = T * i / N;
  const FlowResult r = sample_flow(form, orbit.x0.x, times, false, fo);
  std::vector<Mat2> S(N);
  for (int i = 0; i < N; ++i) {
    const Vec4& x = r.points[i].x;
    const HamiltonianJet jet = hamiltonian_jet(form, x, true);
    const Mat4 dX = hamiltonian_matrix() * jet.hess;
    const Vec4 R = hamiltonian_field(form, x);
    const XiFrame fr = detail::frame_at(form, x, kind);
    const double h = 1e-5;
    const XiFrame fp = detail::frame_at(form, x + h * R, kind);
    const XiFrame fm = detail::frame_at(form, x - h * R, kind);
    const Vec4 de1 = (fp.e1 - fm.e1) / (2 * h);
    const Vec4 de2 = (fp.e2 - fm.e2) / (2 * h);
    Mat2 B;
    for (int j = 0; j < 2; ++j) {
      const Vec4& e = j == 0 ? fr.e1 : fr.e2;
      B(0, j) = omega(dX * e, fr.e2) + omega(e, de2);
      B(1, j) = omega(fr.e1, dX * e) + omega(de1, e);
    }
    Mat2 s = j0() * (T * B);
    S[i] = 0.5 * (s + s.transpose());
  }
  return S;
}

inline SpectralData asymptotic_spectrum(const StarForm& form, const ReebOrbit& orbit, int N_grid = 1024,
                                        FrameKind kind = FrameKind::quaternion, const FlowOptions& fo = {}) {
  if (orbit.degenerate()) fail(ErrorKind::degeneracy, "orbit is degenerate; spectral index refused");
  return spectrum_from_symmetric(asymptotic_symmetric_part(form, orbit, N_grid, kind, fo));
}

inline int cz_from_spectrum(const SpectralData& s) { return 2 * s.wind_nu_neg + s.p; }

/// Exactly two eigenvalues (with multiplicity) per winding k, |k| <= kmax.
inline bool winding_pairing_holds(const SpectralData& s, int kmax = 3) {
  std::map<int, int> count;
  for (int w : s.windings) ++count[w];
  for (int k = -kmax; k <= kmax; ++k)
    if (count[k] != 2) return false;
  return true;
}

inline bool winding_monotone(const SpectralData& s) {
  for (std::size_t j = 1; j < s.windings.size(); ++j)
    if (s.windings[j] < s.windings[j - 1]) return false;
  return true;
}

// --- reports and iterate tables ------------------------------------------

struct IndexReport {
  bool degenerate = false;
  std::string reason;
  std::optional<int> mu_geometric;
  std::optional<int> mu_spectral;
  RotationInterval interval;
  std::optional<SpectralData> spectral;
  bool geometric_flag = false;

  bool agree() const { return mu_geometric && mu_spectral && *mu_geometric == *mu_spectral; }
  std::optional<int> mu() const { return agree() ? mu_geometric : std::nullopt; }
};

inline IndexReport index_report(const StarForm& form, const ReebOrbit& orbit, int N_grid = 1024,
                                FrameKind kind = FrameKind::quaternion) {
  IndexReport rep;
  const SymplecticPath path = trivialized_path(form, orbit, kind);
  rep.interval = rotation_interval(path);
  if (orbit.degenerate()) {
    rep.degenerate = true;
    rep.reason = "orbit monodromy has eigenvalue 1";
    return rep;
  }
  try {
    CZResult g = cz_from_interval(rep.interval);
    rep.geometric_flag = g.degenerate;
    if (g.degenerate) {
      rep.degenerate = true;
      rep.reason = "rotation interval endpoint within 1e-4 of an integer";
    } else {
      rep.mu_geometric = g.mu;
    }
  } catch (const Error& e) {
    rep.degenerate = true;
    rep.reason = e.what();
  }
  try {
    rep.spectral = asymptotic_spectrum(form, orbit, N_grid, kind);
    rep.mu_spectral = cz_from_spectrum(*rep.spectral);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degeneracy) throw;
    rep.degenerate = true;
    if (rep.reason.empty()) rep.reason = e.what();
  }
  return rep;
}

inline nlohmann::json index_report_to_json(const IndexReport& r) {
  nlohmann::json j;
  j["mu_geometric"] = r.mu_geometric ? nlohmann::json(*r.mu_geometric) : nlohmann::json(nullptr);
  j["mu_spectral"] = r.mu_spectral ? nlohmann::json(*r.mu_spectral) : nlohmann::json(nullptr);
  j["interval"] = {r.interval.lo, r.interval.hi};
  if (r.spectral) {
    j["nu_neg"] = r.spectral->nu_neg;
    j["nu_pos"] = r.spectral->nu_pos;
    j["wind_nu_neg"] = r.spectral->wind_nu_neg;
    j["p"] = r.spectral->p;
  } else {
    j["nu_neg"] = nullptr;
    j["nu_pos"] = nullptr;
    j["wind_nu_neg"] = nullptr;
    j["p"] = nullptr;
  }
  j["degenerate_flags"] = {{"degenerate", r.degenerate},
                           {"interval_margin", r.interval.degenerate_margin},
                           {"geometric_flag", r.geometric_flag},
                           {"reason", r.reason}};
  j["agree"] = r.agree();
  return j;
}

struct IterateIndex {
  int k = 0;
  std::optional<int> mu_geometric;
  std::optional<int> mu_spectral;
  bool degenerate = false;
};

/// Standard relations between indices of iterates. `entries` maps k to
/// mu(P^k) for the non-degenerate iterates; violation raises inconsistency.
inline void check_iterate_relations(const std::map<int, int>& entries, bool hyperbolic) {
  auto bad = [](int k, int l, const std::string& what) {
    fail(ErrorKind::inconsistency,
         "iterate relation violated (k = " + std::to_string(k) + ", l = " + std::to_string(l) + "): " + what);
  };
  for (const auto& [k, mk] : entries) {
    for (const auto& [l, ml] : entries) {
      if (l > k) break;
      if (mk == 1 && ml != 1) bad(k, l, "mu(P^k) = 1 but mu(P^l) != 1");
      if (mk <= 0 && ml > 0) bad(k, l, "mu(P^k) <= 0 but mu(P^l) > 0");
      if (mk == 2) {
        if (k > 2 || l > 2 || (ml != 1 && ml != 2)) bad(k, l, "mu(P^k) = 2 outside {1, 2}");
        if (!hyperbolic) bad(k, l, "mu(P^k) = 2 for a non-hyperbolic orbit");
        if (l == 1 && k == 2 && ml != 1) bad(k, l, "mu(P^2) = 2 needs mu(P) = 1");
      }
    }
  }
}

inline std::vector<IterateIndex> iterate_index_table(const StarForm& form, const ReebOrbit& prime, int k_max,
                                                     bool spectral = true, int N_grid = 1024,
                                                     const FlowOptions& fo = {}) {
  require(prime.multiplicity == 1, ErrorKind::precondition, "iterate table needs a prime orbit");
  std::vector<IterateIndex> table;
  std::map<int, int> agreed;
  for (int k = 1; k <= k_max; ++k) {
    const ReebOrbit it = iterate_orbit(form, prime, k, fo);
    IterateIndex row;
    row.k = k;
    if (it.degenerate()) {
      row.degenerate = true;
      table.push_back(row);
      continue;
    }
    CZResult g = cz_from_interval(rotation_interval(trivialized_path(form, it)));
    row.degenerate = g.degenerate;
    if (!g.degenerate) row.mu_geometric = g.mu;
    if (spectral) {
      try {
        row.mu_spectral = cz_from_spectrum(asymptotic_spectrum(form, it, N_grid));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degeneracy) throw;
        row.degenerate = true;
      }
    }
    if (row.mu_geometric && (!spectral || row.mu_spectral)) {
      if (spectral && *row.mu_spectral != *row.mu_geometric)
        fail(ErrorKind::inconsistency, "geometric and spectral indices differ for iterate " + std::to_string(k));
      agreed[k] = *row.mu_geometric;
    }
    table.push_back(row);
  }
  bool hyperbolic = prime.nondeg_class == NondegClass::positive_hyperbolic ||
                    prime.nondeg_class == NondegClass::negative_hyperbolic;
  check_iterate_relations(agreed, hyperbolic);
  return table;
}

}  // namespace reeb_atlas
