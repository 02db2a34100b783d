#include "reeb_atlas/flow.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace reeb_atlas;

namespace {

const double sqrt2 = std::sqrt(2.0);

// exact ellipsoid flow z_j(t) = exp(2 i t / r_j^2) z_j
Vec4 ellipsoid_exact(const StarForm& f, const Vec4& x, double t) {
  cplx a = z1(x) * std::exp(cplx(0, 2.0 * t / f.r_squared[0]));
  cplx b = z2(x) * std::exp(cplx(0, 2.0 * t / f.r_squared[1]));
  return from_complex(a, b);
}

}  // namespace

TEST(Flow, HopfHalfPeriodIsAntipode) {
  const StarForm round = StarForm::round_sphere();
  for (std::size_t n = 0; n < 20; ++n) {
    const Vec4 x = halton_s3(n);
    EXPECT_LT((flow_point(round, x, pi / 2) + x).norm(), 1e-10);
    EXPECT_LT((flow_point(round, x, pi) - x).norm(), 1e-10);
  }
}

TEST(Flow, EllipsoidMatchesClosedForm) {
  const StarForm ell = StarForm::ellipsoid(1.0, sqrt2);
  for (std::size_t n = 0; n < 20; ++n) {
    const Vec4 x = project_to_level(ell, halton_s3(n));
    for (double t : {0.3, 2.0, -1.7, 11.0})
      EXPECT_LT((flow_point(ell, x, t) - ellipsoid_exact(ell, x, t)).norm(), 1e-10) << t;
  }
}

TEST(Flow, BindingCirclesClose) {
  const StarForm ell = StarForm::ellipsoid(1.0, sqrt2);
  const Vec4 g1(1, 0, 0, 0);
  const Vec4 g2 = project_to_level(ell, Vec4(0, 0, 1, 0));
  EXPECT_LT((flow_point(ell, g1, pi) - g1).norm(), 1e-11);
  EXPECT_LT((flow_point(ell, g2, pi * sqrt2) - g2).norm(), 1e-11);
  EXPECT_GT((flow_point(ell, g2, pi) - g2).norm(), 0.1);
}

TEST(Flow, ForwardThenBackward) {
  const StarForm f = StarForm::weighted({{{0, 0, 0, 0}, 1.0}, {{1, 0, 1, 1}, 0.2}, {{0, 2, 0, 0}, 0.1}},
                                        {1.0, 1.3});
  for (std::size_t n = 0; n < 10; ++n) {
    const Vec4 x = project_to_level(f, halton_s3(n));
    const Vec4 y = flow_point(f, x, 7.5);
    EXPECT_LT((flow_point(f, y, -7.5) - x).norm(), 1e-9);
  }
}

TEST(Flow, StaysOnLevel) {
  const StarForm f = StarForm::weighted({{{0, 0, 0, 0}, 1.0}, {{3, 0, 1, 0}, 0.1}}, {1.0, sqrt2});
  const SigmaPoint x = sigma_point(f, halton_s3(5));
  const FlowResult r = integrate_flow(f, x, 100.0 * pi);
  ASSERT_GT(r.points.size(), 10u);
  EXPECT_DOUBLE_EQ(r.times.back(), 100.0 * pi);
  double worst = 0.0;
  for (const auto& p : r.points) worst = std::max(worst, std::abs(eval_H(f, p.x) - 1.0));
  EXPECT_LT(worst, 1e-12);
}

TEST(Flow, VariationalMatchesFiniteDifferences) {
  const StarForm f = StarForm::weighted({{{0, 0, 0, 0}, 1.0}, {{1, 1, 0, 1}, 0.15}}, {1.0, 1.2});
  const Vec4 x = project_to_level(f, halton_s3(9));
  const double t = 2.3;
  const PointAndJacobian pj = flow_with_jacobian(f, x, t);
  EXPECT_LT((pj.x - flow_point(f, x, t)).norm(), 1e-11);
  // The flow is radially projected, so compare on directions tangent to Sigma.
  const Vec4 g = grad_H(f, x);
  Rng rng(1);
  for (int k = 0; k < 4; ++k) {
    Vec4 v = rng.unit4();
    v -= g * g.dot(v) / g.squaredNorm();
    const double h = 1e-6;
    const Vec4 xp = project_to_level(f, x + h * v);
    const Vec4 xm = project_to_level(f, x - h * v);
    const Vec4 fd = (flow_point(f, xp, t) - flow_point(f, xm, t)) / (2 * h);
    EXPECT_LT((pj.dphi * v - fd).norm(), 1e-5);
  }
}

TEST(Flow, MonodromyOfShortCircle) {
  const StarForm ell = StarForm::ellipsoid(1.0, sqrt2);
  const Mat2 m = monodromy_xi(ell, {Vec4(1, 0, 0, 0)}, pi);
  // transverse rotation by 2 pi / sqrt2 over one period: the frame returns to itself
  EXPECT_NEAR(m.determinant(), 1.0, 1e-10);
  EXPECT_NEAR(m.trace(), 2.0 * std::cos(two_pi / sqrt2), 1e-10);
  EXPECT_LT((m.transpose() * j0() * m - j0()).norm(), 1e-10);
  EXPECT_NEAR(std::atan2(m(1, 0), m(0, 0)), wrap_angle(two_pi / sqrt2), 1e-9);
}

TEST(Flow, MonodromyRejectsOpenOrbit) {
  const StarForm ell = StarForm::ellipsoid(1.0, sqrt2);
  try {
    monodromy_xi(ell, {Vec4(1, 0, 0, 0)}, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precondition);
  }
}

TEST(Flow, StepUnderflowIsStiffness) {
  FlowOptions opts;
  opts.min_step = 1.0;
  try {
    flow_point(StarForm::round_sphere(), Vec4(1, 0, 0, 0), 5.0, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::stiffness);
    EXPECT_NE(std::string(e.what()).find("last good x"), std::string::npos);
  }
}

TEST(Flow, SampleAndCsv) {
  const StarForm round = StarForm::round_sphere();
  const std::vector<double> times{0.0, 0.5, 1.0, 1.5};
  const FlowResult r = sample_flow(round, Vec4(1, 0, 0, 0), times, true);
  ASSERT_EQ(r.points.size(), 4u);
  ASSERT_TRUE(r.monodromy4.has_value());
  EXPECT_LT((r.points[2].x - ellipsoid_exact(round, Vec4(1, 0, 0, 0), 1.0)).norm(), 1e-11);
  std::ostringstream os;
  write_trajectory_csv(os, r);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,x1,x2,x3,x4");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
}
