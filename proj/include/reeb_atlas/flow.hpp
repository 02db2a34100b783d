#pragma once

// Reeb flow phi_t on Sigma and its linearization d phi_t.

#include "reeb_atlas/contact_core.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace reeb_atlas {

struct FlowOptions {
  double tol = 1e-12;       ///< absolute and relative local error per step
  double max_step = 0.05;   ///< cap on |dt| per accepted step
  double min_step = 1e-13;  ///< step-size underflow threshold
};

struct FlowResult {
  std::vector<double> times;
  std::vector<SigmaPoint> points;
  std::optional<std::vector<Mat4>> monodromy4;
};

namespace detail {

template <std::size_t N>
struct ReebSystem {
  static_assert(N == 4 || N == 20);
  using State = std::array<double, N>;
  const StarForm* form;
  double sign;

  void operator()(const State& s, State& ds, double /*t*/) const {
    const Vec4 x(s[0], s[1], s[2], s[3]);
    const HamiltonianJet jet = hamiltonian_jet(*form, x, N == 20);
    ds[0] = -sign * jet.grad[1];
    ds[1] = sign * jet.grad[0];
    ds[2] = -sign * jet.grad[3];
    ds[3] = sign * jet.grad[2];
    if constexpr (N == 20) {
      // dM/dt = (J Hess H) M, M stored row-major after the base point.
      const Mat4 a = sign * hamiltonian_matrix() * jet.hess;
      Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> m(s.data() + 4);
      Eigen::Map<Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> dm(ds.data() + 4);
      dm = a * m;
    }
  }
};

}  // namespace detail

/// Adaptive RKF7(8) propagation of one trajectory, optionally with the
/// variational matrix. Each accepted step is radially re-projected onto
/// Sigma. Time runs forward for direction +1 and backward for -1; `elapsed`
/// is always the non-negative amount of flow time integrated so far.
/// Value type: copy it to branch off a trajectory (used by event bisection).
template <bool Variational>
class Propagator {
 public:
  static constexpr std::size_t N = Variational ? 20 : 4;
  using State = std::array<double, N>;

  Propagator(const StarForm& form, const Vec4& x0, int direction = +1, FlowOptions opts = {})
      : form_(&form), sign_(direction >= 0 ? 1.0 : -1.0), opts_(opts) {
    for (int i = 0; i < 4; ++i) state_[i] = x0[i];
    if constexpr (Variational) {
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) state_[4 + 4 * r + c] = (r == c) ? 1.0 : 0.0;
    }
    dt_ = std::min(opts_.max_step, 1e-3);
  }

  double elapsed() const { return tau_; }
  double time() const { return sign_ * tau_; }
  Vec4 point() const { return {state_[0], state_[1], state_[2], state_[3]}; }

  Mat4 variational() const {
    static_assert(Variational, "variational matrix not integrated");
    Mat4 m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = state_[4 + 4 * r + c];
    return m;
  }

  /// One accepted adaptive step of length at most `limit` (> 0). Returns
  /// the length taken.
  double step(double limit) {
    using namespace boost::numeric::odeint;
    using Stepper = runge_kutta_fehlberg78<State>;
    using Checker = default_error_checker<double, typename Stepper::algebra_type, typename Stepper::operations_type>;
    controlled_runge_kutta<Stepper, Checker> ctrl(Checker(opts_.tol, opts_.tol));
    detail::ReebSystem<N> sys{form_, sign_};
    double dt = std::min({dt_, limit, opts_.max_step});
    for (;;) {
      if (dt < opts_.min_step && dt < limit) {
        std::ostringstream os;
        os << "step size underflow at t = " << time() << ", last good x = (" << point().transpose() << ")";
        fail(ErrorKind::stiffness, os.str());
      }
      State trial = state_;
      double t = tau_;
      double h = dt;
      if (ctrl.try_step(sys, trial, t, h) == success) {
        double taken = t - tau_;
        state_ = trial;
        tau_ = t;
        project();
        dt_ = std::max(h, 1e-12);
        return taken;
      }
      dt = h;
    }
  }

  /// Advances by exactly `amount` >= 0 of flow time.
  void advance(double amount) {
    double target = tau_ + amount;
    while (target - tau_ > 1e-15 * std::max(1.0, target)) {
      double remaining = target - tau_;
      double saved = dt_;
      double taken = step(remaining);
      if (taken >= remaining * (1.0 - 1e-14)) {
        tau_ = target;
        // A step truncated to land on target says nothing about the natural size.
        dt_ = std::max(saved, dt_);
        break;
      }
    }
  }

 private:
  void project() {
    const Vec4 x = point();
    const Vec4 p = x / std::sqrt(eval_H(*form_, x));
    for (int i = 0; i < 4; ++i) state_[i] = p[i];
  }

  const StarForm* form_;
  double sign_;
  FlowOptions opts_;
  State state_{};
  double tau_ = 0.0;
  double dt_ = 1e-3;
};

/// Trajectory from x0 to t_final (either sign), sampled at every accepted step.
inline FlowResult integrate_flow(const StarForm& form, const SigmaPoint& x0, double t_final,
                                 const FlowOptions& opts = {}, bool with_variational = false) {
  require(std::isfinite(t_final), ErrorKind::precondition, "t_final must be finite");
  require_on_level(form, x0.x);
  FlowResult out;
  int dir = t_final >= 0 ? 1 : -1;
  double span = std::abs(t_final);
  auto run = [&](auto prop) {
    auto record = [&] {
      out.times.push_back(prop.time());
      out.points.push_back({prop.point()});
      if constexpr (decltype(prop)::N == 20) out.monodromy4->push_back(prop.variational());
    };
    record();
    while (prop.elapsed() < span) {
      prop.step(span - prop.elapsed());
      if (span - prop.elapsed() < 1e-15 * std::max(1.0, span)) {
        // snap the final sample onto t_final exactly
        record();
        out.times.back() = t_final;
        break;
      }
      record();
    }
  };
  if (with_variational) {
    out.monodromy4.emplace();
    run(Propagator<true>(form, x0.x, dir, opts));
  } else {
    run(Propagator<false>(form, x0.x, dir, opts));
  }
  return out;
}

/// Samples phi_t(x0) (and d phi_t when requested) at the given times, which
/// must be monotone and share one sign.
inline FlowResult sample_flow(const StarForm& form, const Vec4& x0, std::span<const double> times,
                              bool with_variational, const FlowOptions& opts = {}) {
  FlowResult out;
  if (times.empty()) return out;
  int dir = times.back() >= 0 ? 1 : -1;
  auto run = [&](auto prop) {
    for (double t : times) {
      double target = std::abs(t);
      require(target >= prop.elapsed() - 1e-14, ErrorKind::precondition, "sample times must be monotone");
      if (target > prop.elapsed()) prop.advance(target - prop.elapsed());
      out.times.push_back(t);
      out.points.push_back({prop.point()});
      if constexpr (decltype(prop)::N == 20) out.monodromy4->push_back(prop.variational());
    }
  };
  if (with_variational) {
    out.monodromy4.emplace();
    run(Propagator<true>(form, x0, dir, opts));
  } else {
    run(Propagator<false>(form, x0, dir, opts));
  }
  return out;
}

inline Vec4 flow_point(const StarForm& form, const Vec4& x0, double t, const FlowOptions& opts = {}) {
  Propagator<false> prop(form, x0, t >= 0 ? 1 : -1, opts);
  prop.advance(std::abs(t));
  return prop.point();
}

struct PointAndJacobian {
  Vec4 x;
  Mat4 dphi;
};

inline PointAndJacobian flow_with_jacobian(const StarForm& form, const Vec4& x0, double t,
                                           const FlowOptions& opts = {}) {
  Propagator<true> prop(form, x0, t >= 0 ? 1 : -1, opts);
  prop.advance(std::abs(t));
  return {prop.point(), prop.variational()};
}

/// 2x2 matrix of d phi_t : xi_x -> xi_{phi_t x} in the frames at both ends.
inline Mat2 xi_block(const StarForm& form, const Vec4& start, const Vec4& end, const Mat4& dphi,
                     FrameKind kind = FrameKind::quaternion) {
  const XiFrame f0 = detail::frame_at(form, start, kind);
  const XiFrame f1 = detail::frame_at(form, end, kind);
  Mat2 m;
  m.col(0) = frame_coords(f1, dphi * f0.e1);
  m.col(1) = frame_coords(f1, dphi * f0.e2);
  return m;
}

/// Linearized return map on xi over one period T, in the global frame.
inline Mat2 monodromy_xi(const StarForm& form, const SigmaPoint& p, double period,
                         const FlowOptions& opts = {}, FrameKind kind = FrameKind::quaternion) {
  require_on_level(form, p.x);
  const PointAndJacobian end = flow_with_jacobian(form, p.x, period, opts);
  double gap = (end.x - p.x).norm();
  if (gap >= 1e-6) {
    std::ostringstream os;
    os << "orbit does not close: |phi_T(x) - x| = " << gap;
    fail(ErrorKind::precondition, os.str());
  }
  return xi_block(form, p.x, end.x, end.dphi, kind);
}

/// CSV with columns t,x1,x2,x3,x4 at 17 significant digits.
inline void write_trajectory_csv(std::ostream& os, const FlowResult& r) {
  os << "t,x1,x2,x3,x4\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const Vec4& x = r.points[i].x;
    os << r.times[i] << ',' << x[0] << ',' << x[1] << ',' << x[2] << ',' << x[3] << '\n';
  }
}

}  // namespace reeb_atlas
