#include "reeb_atlas/cz_index.hpp"

#include <gtest/gtest.h>

#include "../common/fixtures.hpp"

using namespace reeb_atlas;
using namespace reeb_atlas::fixtures;

namespace {

const double sqrt2 = std::sqrt(2.0);

StarForm ell() { return StarForm::ellipsoid(1.0, sqrt2); }

ReebOrbit gamma1() { return refine_orbit(ell(), Vec4(1, 0, 0, 0), pi); }
ReebOrbit gamma2() { return refine_orbit(ell(), Vec4(0, 0, std::pow(2.0, 0.25), 0), sqrt2 * pi); }

int mu_of(const SymplecticPath& p) {
  CZResult r = cz_from_interval(rotation_interval(p));
  EXPECT_FALSE(r.degenerate);
  return r.mu;
}

}  // namespace

TEST(RotationInterval, PureRotation) {
  const RotationInterval I = rotation_interval(rotation_path(0.5));
  EXPECT_NEAR(I.lo, 0.5, 1e-12);
  EXPECT_NEAR(I.hi, 0.5, 1e-12);
  EXPECT_EQ(cz_from_interval(I).mu, 1);
}

TEST(RotationInterval, HyperbolicContainsZero) {
  SymplecticPath p;
  for (int i = 0; i < 512; ++i) {
    double t = i / 511.0;
    p.samples.push_back(Eigen::Vector2d(std::exp(t), std::exp(-t)).asDiagonal());
  }
  const RotationInterval I = rotation_interval(p);
  EXPECT_LE(I.lo, 0.0);
  EXPECT_GE(I.hi, 0.0);
  EXPECT_LT(I.hi - I.lo, 0.5);
  EXPECT_EQ(cz_from_interval(I).mu, 0);
  // iterates of a positive hyperbolic path never rotate
  for (int k = 1; k <= 4; ++k) EXPECT_LE(cz_from_interval(rotation_interval(iterate_path(p, k))).mu, 0);
  check_iterate_relations({{1, 0}, {2, 0}, {3, 0}}, true);
}

TEST(RotationInterval, FormulaBranches) {
  RotationInterval I;
  I.lo = I.hi = 1.0 + 1.0 / sqrt2;
  I.degenerate_margin = 0.29;
  EXPECT_EQ(cz_from_interval(I).mu, 3);
  I.lo = -0.1;
  I.hi = 0.1;
  I.degenerate_margin = 0.1;
  EXPECT_EQ(cz_from_interval(I).mu, 0);
  I.lo = 0.99995;
  I.hi = 1.2;
  I.degenerate_margin = 5e-5;
  EXPECT_TRUE(cz_from_interval(I).degenerate);
  I.lo = 0.1;
  I.hi = 0.7;
  try {
    cz_from_interval(I);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::inconsistency);
  }
}

TEST(RotationInterval, CoarsePathRejected) {
  SymplecticPath p = rotation_path(60.0, 300);
  try {
    rotation_interval(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::resolution);
  }
}

TEST(Maslov, Basic) {
  EXPECT_EQ(maslov_loop(rotation_path(1.0)), 1);
  EXPECT_EQ(maslov_loop(rotation_path(-2.0)), -2);
  SymplecticPath c;
  c.samples.assign(300, Mat2::Identity());
  EXPECT_EQ(maslov_loop(c), 0);
  try {
    maslov_loop(rotation_path(0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precondition);
  }
}

TEST(Axioms, RandomFixtures) {
  Rng rng(2024);
  for (int n = 0; n < 100; ++n) {
    const SymplecticPath phi = random_path(rng);
    const RotationInterval I = rotation_interval(phi);
    ASSERT_LT(I.hi - I.lo, 0.5);
    const int mu = mu_of(phi);

    // homotopy: C0 perturbation of size <= 1e-3 fixing phi(0)
    const SymplecticPath pert = perturbed_path(rng, phi);
    EXPECT_EQ(mu_of(pert), mu);

    // loop property
    int m = static_cast<int>(rng.uniform(-2.0, 3.0));
    m = std::clamp(m, -2, 2);
    const SymplecticPath psi = random_loop(rng, m, static_cast<int>(phi.size()));
    EXPECT_EQ(maslov_loop(psi), m);
    EXPECT_EQ(mu_of(path_product(psi, phi)) - mu, 2 * maslov_loop(psi));

    // inversion
    EXPECT_EQ(mu_of(path_inverse(phi)), -mu);
  }
  EXPECT_EQ(mu_of(rotation_path(0.5)), 1);
}

TEST(TrivializedPath, EllipsoidShortOrbitIsRotation) {
  const SymplecticPath p = trivialized_path(ell(), gamma1());
  const double theta = 1.0 + 1.0 / sqrt2;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double t = static_cast<double>(i) / (p.size() - 1);
    worst = std::max(worst, (p.samples[i] - rotation(two_pi * theta * t)).norm());
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT((p.back() - gamma1().monodromy).norm(), 1e-6);
  const RotationInterval I = rotation_interval(p);
  EXPECT_NEAR(I.lo, theta, 1e-6);
  EXPECT_NEAR(I.hi, theta, 1e-6);
}

TEST(TrivializedPath, RoundSphereEndsAtIdentity) {
  const ReebOrbit o = refine_orbit(StarForm::round_sphere(), halton_s3(4), pi);
  const SymplecticPath p = trivialized_path(StarForm::round_sphere(), o);
  EXPECT_LT((p.back() - Mat2::Identity()).norm(), 1e-6);
  const IndexReport r = index_report(StarForm::round_sphere(), o);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(r.mu().has_value());
}

TEST(TrivializedPath, DoubleCoverIsConcatenation) {
  const SymplecticPath p1 = trivialized_path(ell(), gamma1(), FrameKind::quaternion, {}, 256);
  const SymplecticPath p2 = trivialized_path(ell(), iterate_orbit(ell(), gamma1(), 2), FrameKind::quaternion, {},
                                             2 * 256 - 1);
  const SymplecticPath cat = iterate_path(p1, 2);
  ASSERT_EQ(p2.size(), cat.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < cat.size(); ++i) worst = std::max(worst, (p2.samples[i] - cat.samples[i]).norm());
  EXPECT_LT(worst, 1e-5);
}

TEST(Spectrum, ConstantRotationOperator) {
  const double theta = 1.0 + 1.0 / sqrt2;
  std::vector<Mat2> S(1024, -two_pi * theta * Mat2::Identity());
  const SpectralData s = spectrum_from_symmetric(S);
  EXPECT_NEAR(s.nu_neg, two_pi * (1 - theta), 1e-3);
  EXPECT_NEAR(s.nu_pos, two_pi * (2 - theta), 1e-3);
  EXPECT_EQ(s.wind_nu_neg, 1);
  EXPECT_EQ(s.wind_nu_pos, 2);
  EXPECT_EQ(s.b, 2);
  EXPECT_EQ(s.p, 1);
  EXPECT_EQ(cz_from_spectrum(s), 3);
  EXPECT_TRUE(winding_pairing_holds(s));
  EXPECT_TRUE(winding_monotone(s));
  // eigenvalue 2 pi (k - theta) carries winding k
  for (std::size_t j = 0; j < s.eigenvalues.size(); ++j)
    if (std::abs(s.eigenvalues[j]) < 40.0)
      EXPECT_NEAR(s.eigenvalues[j], two_pi * (s.windings[j] - theta), 0.05);
}

TEST(Spectrum, ZeroEigenvalueIsDegeneracy) {
  std::vector<Mat2> S(256, Mat2::Zero());
  try {
    spectrum_from_symmetric(S);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degeneracy);
  }
}

TEST(Spectrum, EllipsoidOrbits) {
  const SpectralData s1 = asymptotic_spectrum(ell(), gamma1());
  EXPECT_EQ(s1.wind_nu_neg, 1);
  EXPECT_EQ(s1.p, 1);
  EXPECT_EQ(cz_from_spectrum(s1), 3);
  EXPECT_TRUE(winding_pairing_holds(s1));
  EXPECT_TRUE(winding_monotone(s1));
  const SpectralData s2 = asymptotic_spectrum(ell(), gamma2());
  EXPECT_EQ(s2.wind_nu_neg, 2);
  EXPECT_EQ(cz_from_spectrum(s2), 5);
  EXPECT_TRUE(winding_pairing_holds(s2));
  EXPECT_TRUE(winding_monotone(s2));
}

TEST(IterateTable, EllipsoidBothMethods) {
  const auto t1 = iterate_index_table(ell(), gamma1(), 5);
  const int expect1[] = {3, 7, 11, 13, 17};
  for (int k = 1; k <= 5; ++k) {
    ASSERT_TRUE(t1[k - 1].mu_geometric && t1[k - 1].mu_spectral) << k;
    EXPECT_EQ(*t1[k - 1].mu_geometric, expect1[k - 1]);
    EXPECT_EQ(*t1[k - 1].mu_spectral, expect1[k - 1]);
    EXPECT_EQ(expect1[k - 1], 2 * k + 2 * static_cast<int>(std::floor(k / sqrt2)) + 1);
  }
  const auto t2 = iterate_index_table(ell(), gamma2(), 3);
  const int expect2[] = {5, 9, 15};
  for (int k = 1; k <= 3; ++k) {
    EXPECT_EQ(t2[k - 1].mu_geometric.value_or(-99), expect2[k - 1]);
    EXPECT_EQ(t2[k - 1].mu_spectral.value_or(-99), expect2[k - 1]);
  }
}

TEST(IterateTable, RelationViolationsDetected) {
  EXPECT_THROW(check_iterate_relations({{1, 3}, {2, 1}}, false), Error);
  EXPECT_THROW(check_iterate_relations({{1, 1}, {3, 0}}, false), Error);
  EXPECT_THROW(check_iterate_relations({{1, 2}, {2, 2}}, true), Error);
  EXPECT_THROW(check_iterate_relations({{1, 2}}, false), Error);
  EXPECT_NO_THROW(check_iterate_relations({{1, 1}, {2, 2}}, true));
  EXPECT_NO_THROW(check_iterate_relations({{1, 3}, {2, 7}}, false));
}

TEST(FrameInvariance, TwistedFrameGivesSameIndices) {
  for (const ReebOrbit& o : {gamma1(), gamma2(), iterate_orbit(ell(), gamma1(), 3)}) {
    const IndexReport a = index_report(ell(), o, 1024, FrameKind::quaternion);
    const IndexReport b = index_report(ell(), o, 1024, FrameKind::twisted);
    ASSERT_TRUE(a.agree());
    ASSERT_TRUE(b.agree());
    EXPECT_EQ(*a.mu(), *b.mu());
  }
}

TEST(Agreement, PerturbedEllipsoidOrbits) {
  Rng rng(99);
  int checked = 0;
  for (int n = 0; n < 50; ++n) {
    std::vector<Monomial> terms{{{0, 0, 0, 0}, 1.0}};
    for (int m = 0; m < 2; ++m) {
      Monomial mono;
      for (int& e : mono.exponent) e = static_cast<int>(rng.uniform(0.0, 3.0));
      mono.coeff = rng.uniform(-0.03, 0.03);
      terms.push_back(mono);
    }
    const StarForm f = StarForm::weighted(terms, {1.0, sqrt2});
    const bool short_orbit = n % 2 == 0;
    const Vec4 guess = short_orbit ? Vec4(1, 0, 0, 0) : Vec4(0, 0, std::pow(2.0, 0.25), 0);
    const double T = short_orbit ? pi : sqrt2 * pi;
    ReebOrbit o;
    try {
      o = refine_orbit(f, guess, T);
    } catch (const Error&) {
      continue;
    }
    if (o.degenerate()) continue;
    const IndexReport r = index_report(f, o, 512);
    ASSERT_TRUE(r.mu_geometric && r.mu_spectral) << n << " " << r.reason;
    EXPECT_EQ(*r.mu_geometric, *r.mu_spectral) << n;
    EXPECT_EQ(*r.mu_geometric, short_orbit ? 3 : 5) << n;
    ++checked;
  }
  EXPECT_GE(checked, 45);
}
