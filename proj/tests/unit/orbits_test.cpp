#include "reeb_atlas/orbits.hpp"

#include <gtest/gtest.h>

using namespace reeb_atlas;

namespace {

const double sqrt2 = std::sqrt(2.0);

StarForm irrational_ellipsoid() { return StarForm::ellipsoid(1.0, sqrt2, "E(1,sqrt2)"); }

const OrbitDatabase& census10() {
  static const OrbitDatabase db = find_orbits(irrational_ellipsoid(), 10.0, 2048);
  return db;
}

}  // namespace

TEST(Orbits, RefineFromPerturbedGuess) {
  const StarForm ell = irrational_ellipsoid();
  const Vec4 guess(1.0, 0.01, -0.01, 0.01);
  const ReebOrbit o = refine_orbit(ell, guess, pi + 0.01);
  EXPECT_EQ(o.multiplicity, 1);
  EXPECT_NEAR(o.T_min, pi, 1e-10);
  EXPECT_LT(o.residual, 1e-10);
  EXPECT_LT(std::hypot(o.x0.x[2], o.x0.x[3]), 1e-8);
  EXPECT_EQ(o.nondeg_class, NondegClass::elliptic);
  EXPECT_GT(o.newton_steps, 0);
}

TEST(Orbits, DoubleCoverDetected) {
  const ReebOrbit o = refine_orbit(irrational_ellipsoid(), Vec4(1, 0, 0, 0), 2 * pi + 1e-3);
  EXPECT_EQ(o.multiplicity, 2);
  EXPECT_NEAR(o.T_min, pi, 1e-10);
  EXPECT_NEAR(o.T(), 2 * pi, 1e-10);
}

TEST(Orbits, ExactGuessNeedsNoNewtonStep) {
  const ReebOrbit o = refine_orbit(irrational_ellipsoid(), Vec4(1, 0, 0, 0), pi);
  EXPECT_EQ(o.newton_steps, 0);
}

TEST(Orbits, BadGuessIsPrecondition) {
  try {
    refine_orbit(irrational_ellipsoid(), Vec4(1, 0, 0, 0), 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precondition);
  }
}

TEST(Orbits, EllipsoidCensus) {
  const OrbitDatabase& db = census10();
  ASSERT_EQ(db.orbits.size(), 5u);
  const double expected[] = {pi, sqrt2 * pi, 2 * pi, 2 * sqrt2 * pi, 3 * pi};
  const int mult[] = {1, 1, 2, 2, 3};
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(db.orbits[i].T() / expected[i], 1.0, 1e-8) << i;
    EXPECT_EQ(db.orbits[i].multiplicity, mult[i]);
    EXPECT_LT(db.orbits[i].residual, 1e-9);
    EXPECT_NEAR(db.orbits[i].monodromy.determinant(), 1.0, 1e-6);
    EXPECT_NE(db.orbits[i].nondeg_class, NondegClass::degenerate);
  }
  verify_database(irrational_ellipsoid(), db);
}

TEST(Orbits, IterateMonodromyIsPower) {
  const StarForm ell = irrational_ellipsoid();
  const ReebOrbit p = refine_orbit(ell, Vec4(0, 0, std::pow(2.0, 0.25), 0), sqrt2 * pi);
  Mat2 power = Mat2::Identity();
  for (int k = 1; k <= 5; ++k) {
    power = power * p.monodromy;
    const ReebOrbit it = iterate_orbit(ell, p, k);
    EXPECT_LT((it.monodromy - power).norm(), 1e-5) << k;
  }
}

TEST(Orbits, NothingBelowShortestPeriod) {
  const OrbitDatabase db = find_orbits(irrational_ellipsoid(), 3.0, 256);
  EXPECT_TRUE(db.orbits.empty());
}

TEST(Orbits, RoundSphereAllDegenerate) {
  const OrbitDatabase db = find_orbits(StarForm::round_sphere(), 4.0, 24);
  ASSERT_FALSE(db.orbits.empty());
  for (const auto& o : db.orbits) {
    EXPECT_EQ(o.nondeg_class, NondegClass::degenerate);
    EXPECT_NEAR(o.T_min, pi, 1e-9);
    EXPECT_LT((o.monodromy - Mat2::Identity()).norm(), 1e-6);
  }
}

TEST(Orbits, DistinctEntriesAreGeometricallyDistinct) {
  const StarForm f = StarForm::round_sphere();
  const OrbitDatabase db = find_orbits(f, 4.0, 24);
  std::vector<std::vector<Vec4>> traces;
  for (const auto& o : db.orbits)
    if (o.multiplicity == 1) traces.push_back(orbit_trace(f, o, 256));
  for (std::size_t i = 0; i < traces.size(); ++i)
    for (std::size_t j = i + 1; j < traces.size(); ++j) EXPECT_GT(hausdorff(traces[i], traces[j]), 1e-4);
}

TEST(Orbits, SeedCountMonotone) {
  const StarForm f = StarForm::weighted({{{0, 0, 0, 0}, 1.0}, {{3, 0, 1, 0}, 0.01}}, {1.0, sqrt2});
  const OrbitDatabase small = find_orbits(f, 10.0, 512);
  const OrbitDatabase large = find_orbits(f, 10.0, 1024);
  ASSERT_FALSE(small.orbits.empty());
  for (const auto& a : small.orbits) {
    bool found = false;
    for (const auto& b : large.orbits)
      found = found || (a.multiplicity == b.multiplicity && std::abs(a.T_min - b.T_min) < 1e-8 &&
                        hausdorff(orbit_trace(f, a, 64), orbit_trace(f, b, 64)) < 1e-4);
    EXPECT_TRUE(found) << a.T();
  }
}

TEST(Orbits, PeriodGaps) {
  const PeriodGaps g = period_gaps(census10(), 10.0);
  EXPECT_NEAR(g.sigma1, pi, 1e-9);
  // periods pi, sqrt2 pi, 2 pi, 2 sqrt2 pi, 3 pi: closest pair is 2 sqrt2 pi and 3 pi
  EXPECT_NEAR(g.sigma2, (3.0 - 2.0 * sqrt2) * pi, 1e-9);
  EXPECT_LT(g.sigma, g.sigma1);
  EXPECT_LT(g.sigma, g.sigma2);

  OrbitDatabase single;
  single.orbits.push_back(census10().orbits.front());
  const PeriodGaps s = period_gaps(single, 10.0);
  EXPECT_TRUE(std::isinf(s.sigma2));
  EXPECT_NEAR(s.sigma, 0.5 * pi, 1e-9);
}

TEST(Orbits, JsonRoundTripAndReload) {
  const StarForm ell = irrational_ellipsoid();
  const OrbitDatabase& db = census10();
  const nlohmann::json j = database_to_json(db);
  const OrbitDatabase back = database_from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.orbits.size(), db.orbits.size());
  for (std::size_t i = 0; i < db.orbits.size(); ++i) {
    EXPECT_EQ(back.orbits[i].x0.x, db.orbits[i].x0.x);
    EXPECT_EQ(back.orbits[i].T_min, db.orbits[i].T_min);
    EXPECT_EQ(back.orbits[i].nondeg_class, db.orbits[i].nondeg_class);
  }
  verify_database(ell, back);
  EXPECT_EQ(database_from_json(j["orbits"]).orbits.size(), db.orbits.size());

  nlohmann::json bad = j;
  bad["orbits"][1]["T_min"] = "pi";
  try {
    database_from_json(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/orbits/1/T_min"), std::string::npos);
  }
  try {
    verify_database(StarForm::round_sphere(), back);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::inconsistency);
  }
}

TEST(Orbits, Classification) {
  EXPECT_EQ(classify_monodromy(rotation(1.0)), NondegClass::elliptic);
  EXPECT_EQ(classify_monodromy(Mat2::Identity()), NondegClass::degenerate);
  Mat2 h;
  h << 2.0, 0.0, 0.0, 0.5;
  EXPECT_EQ(classify_monodromy(h), NondegClass::positive_hyperbolic);
  EXPECT_EQ(classify_monodromy(-h), NondegClass::negative_hyperbolic);
}
