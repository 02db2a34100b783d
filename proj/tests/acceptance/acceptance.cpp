// Acceptance suite: one PASS/FAIL line per criterion. Closed-form expected
// values come from the frozen oracle file written by
// tools/oracle/ellipsoid_oracle.py; nothing here recomputes them.

#include "reeb_atlas/reeb_atlas.hpp"

#include "../common/fixtures.hpp"

#include <chrono>
#include <iostream>

using namespace reeb_atlas;
namespace fx = reeb_atlas::fixtures;

namespace {

const double sqrt2 = std::sqrt(2.0);

StarForm ellipsoid() { return StarForm::ellipsoid(1.0, sqrt2); }

const nlohmann::json& oracle() {
  static const nlohmann::json j = read_json_file(REEB_ATLAS_ORACLE);
  return j;
}

// Collects the first few failure messages of a criterion.
struct Verdict {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  bool passed() const { return failures.empty(); }
};

const OrbitDatabase& db20() {
  static const OrbitDatabase db = find_orbits(ellipsoid(), 20.0, 512);
  return db;
}

// entry of the database lying on the z1-plane (gamma1) or z2-plane (gamma2) circle
bool on_circle(const ReebOrbit& o, const std::string& which) {
  const double in_z1 = std::hypot(o.x0.x[0], o.x0.x[1]);
  return which == "gamma1" ? in_z1 > 0.99 : in_z1 < 1e-6;
}

ReebOrbit prime(const OrbitDatabase& db, const std::string& which) {
  for (const auto& o : db.orbits)
    if (o.multiplicity == 1 && on_circle(o, which)) return o;
  fail(ErrorKind::inconsistency, which + " missing from the database");
}

int entry_of(const OrbitDatabase& db, const std::string& which, int k) {
  for (std::size_t i = 0; i < db.orbits.size(); ++i)
    if (db.orbits[i].multiplicity == k && on_circle(db.orbits[i], which)) return static_cast<int>(i);
  return -1;
}

const DiskGrid& page() {
  static const DiskGrid d = builtin_disk(ellipsoid(), prime(db20(), "gamma1"), 0.0, 64, 256);
  return d;
}

void ellipsoid_census(Verdict& v) {
  const OrbitDatabase db = find_orbits(ellipsoid(), 10.0, 256);
  const auto& want = oracle()["census_tmax_10"];
  v.expect(db.orbits.size() == want.size(),
           "found " + std::to_string(db.orbits.size()) + " orbits, expected " + std::to_string(want.size()));
  for (std::size_t i = 0; i < std::min(db.orbits.size(), want.size()); ++i) {
    const ReebOrbit& o = db.orbits[i];
    const double T = want[i]["T"];
    const std::string which = want[i]["orbit"];
    v.expect(std::abs(o.T() / T - 1.0) < 1e-8, "entry " + std::to_string(i) + " period " + std::to_string(o.T()));
    v.expect(o.multiplicity == want[i]["k"].get<int>() && on_circle(o, which),
             "entry " + std::to_string(i) + " is not " + which + "^" + std::to_string(want[i]["k"].get<int>()));
  }
}

void index_tables(Verdict& v) {
  const StarForm ell = ellipsoid();
  for (const std::string which : {"gamma1", "gamma2"}) {
    const auto& want = oracle()["mu_" + which];
    const ReebOrbit p = prime(db20(), which);
    for (std::size_t k = 1; k <= want.size(); ++k) {
      const IndexReport r = index_report(ell, iterate_orbit(ell, p, static_cast<int>(k)), 1024);
      const std::string tag = which + "^" + std::to_string(k);
      v.expect(r.mu_geometric && *r.mu_geometric == want[k - 1].get<int>(), tag + " geometric index");
      v.expect(r.mu_spectral && *r.mu_spectral == want[k - 1].get<int>(), tag + " spectral index");
      v.expect(r.agree(), tag + " methods disagree");
    }
  }
}

void cz_axioms(Verdict& v) {
  Rng rng(2024);
  auto mu_of = [&](const SymplecticPath& p) {
    const CZResult r = cz_from_interval(rotation_interval(p));
    v.expect(!r.degenerate, "fixture endpoint flagged degenerate");
    return r.mu;
  };
  for (int n = 0; n < 100; ++n) {
    const SymplecticPath phi = fx::random_path(rng);
    const RotationInterval I = rotation_interval(phi);
    v.expect(I.hi - I.lo < 0.5, "fixture " + std::to_string(n) + ": interval length >= 1/2");
    const int mu = mu_of(phi);
    v.expect(mu_of(fx::perturbed_path(rng, phi)) == mu, "fixture " + std::to_string(n) + ": homotopy");
    const int m = std::clamp(static_cast<int>(rng.uniform(-2.0, 3.0)), -2, 2);
    const SymplecticPath psi = fx::random_loop(rng, m, static_cast<int>(phi.size()));
    v.expect(mu_of(path_product(psi, phi)) - mu == 2 * maslov_loop(psi), "fixture " + std::to_string(n) + ": loop");
    v.expect(mu_of(path_inverse(phi)) == -mu, "fixture " + std::to_string(n) + ": inversion");
  }
  v.expect(mu_of(rotation_path(0.5)) == 1, "normalization");
}

void spectral_structure(Verdict& v) {
  const StarForm ell = ellipsoid();
  std::vector<std::pair<std::string, ReebOrbit>> orbits;
  for (const std::string which : {"gamma1", "gamma2"}) {
    const ReebOrbit p = prime(db20(), which);
    for (int k = 1; k <= (which == "gamma1" ? 5 : 3); ++k)
      orbits.emplace_back(which + "^" + std::to_string(k), iterate_orbit(ell, p, k));
  }
  for (const auto& [tag, o] : orbits) {
    const SpectralData s = asymptotic_spectrum(ell, o, 1024);
    v.expect(winding_pairing_holds(s), tag + ": not two eigenvalues per winding");
    v.expect(winding_monotone(s), tag + ": winding not monotone");
  }
}

void topology(Verdict& v) {
  const StarForm ell = ellipsoid();
  const LoopTrace a = make_loop_trace(ell, prime(db20(), "gamma1"));
  const LoopTrace b = make_loop_trace(ell, prime(db20(), "gamma2"));
  v.expect(linking_number(a, b).lk == oracle()["lk_gamma1_gamma2"].get<int>(), "lk(gamma1, gamma2)");
  for (const auto& [tag, tr] : {std::pair{std::string("gamma1"), &a}, std::pair{std::string("gamma2"), &b}}) {
    for (double eps : {1e-2, 5e-3, 2.5e-3})
      v.expect(self_linking(ell, *tr, eps) == oracle()["sl_" + tag].get<int>(), "sl(" + tag + ") at eps " + std::to_string(eps));
    v.expect(unknot_check(*tr).status == KnotStatus::certified_unknot, tag + " not certified");
  }
  Rng rng(2024);
  for (int k = 0; k < 50; ++k) {
    const fx::LinkPair pr = fx::random_link_pair(rng, k);
    const int g = linking_number(pr.a, pr.b).lk;
    v.expect(g == crossing_linking(pr.a, pr.b) && g == pr.lk, "random pair " + std::to_string(k));
  }
}

void binding_checker(Verdict& v) {
  const OrbitDatabase& db = db20();
  const BindingReport r = check_binding(ellipsoid(), db, entry_of(db, "gamma1", 1));
  v.expect(r.verdict == BindingVerdict::hypotheses_hold, "gamma1: " + r.verdict_string());
  v.expect(r.evidence.index2.empty(), "index-2 set not empty");
  v.expect(r.evidence.T_max == 20.0, "report does not carry T_max");
  const BindingReport r2 = check_binding(ellipsoid(), db, entry_of(db, "gamma1", 2));
  v.expect(r2.verdict_string() == "fails:simply_covered", "gamma1^2: " + r2.verdict_string());
}

void global_section(Verdict& v) {
  const StarForm ell = ellipsoid();
  const double budget = oracle()["page_budget"];
  const SectionVerdict s = verify_global_section(ell, page(), 500, budget);
  v.expect(s.sign_constant, "transversality sign changes");
  v.expect(s.min_transversality > 0.1, "min normalized det " + std::to_string(s.min_transversality));
  v.expect(s.passes(), "verdict " + to_string(s.status) + " " + s.reason);
  int back_fwd = 0;
  for (const auto* recs : {&s.forward, &s.backward})
    for (const auto& r : *recs) back_fwd += r.returned;
  v.expect(back_fwd == 1000, std::to_string(back_fwd) + "/1000 returns");
  for (const auto& r : s.forward)
    if (r.returned && std::abs(r.time - oracle()["page_return_time"].get<double>()) > 1e-8) {
      v.expect(false, "return time " + std::to_string(r.time));
      break;
    }
  const DiskArea ar = disk_area(ell, page());
  const double want = oracle()["page_area"];
  v.expect(std::abs(ar.area / want - 1.0) < 1e-2, "area " + std::to_string(ar.area));
  v.expect(std::abs(ar.area / ar.boundary_integral - 1.0) < 1e-2, "Stokes mismatch");
  std::vector<std::pair<double, double>> cells;
  for (int k = 0; k < 10; ++k) cells.emplace_back(0.15 + 0.07 * k, 0.09 * k + 0.02);
  for (const auto& c : area_preservation(ell, page(), cells, 0.04, budget)) {
    v.expect(c.complete, "cell at s = " + std::to_string(c.s0) + " did not return");
    if (c.complete)
      v.expect(std::abs(c.area_after / c.area_before - 1.0) < 2e-2, "cell area ratio " + std::to_string(c.area_after / c.area_before));
  }
}

void characteristic_foliation(Verdict& v) {
  const StarForm ell = ellipsoid();
  const CharacteristicField cf = characteristic_field(ell, page());
  v.expect(cf.singularities.size() == 1, std::to_string(cf.singularities.size()) + " singularities");
  if (cf.singularities.size() == 1) {
    const FoliationSingularity& p = cf.singularities.front();
    v.expect(p.sign == 1 && p.nicely_elliptic, "singularity not positive nicely elliptic");
  }
  v.expect(cf.boundary_winding == 1, "wind = " + std::to_string(cf.boundary_winding));
  const int sl = self_linking(ell, prime(db20(), "gamma1"), 1e-2);
  v.expect(sl == -cf.boundary_winding, "sl != -wind");

  const AuditEvidence good = gather_audit_evidence(ell, page(), db20());
  v.expect(judge_audit(good).passes, "audit of the builtin page raised alarms");
  AuditEvidence unlinked = good;
  if (!unlinked.others.empty()) unlinked.others.front().lk = 0;
  v.expect(!judge_audit(unlinked).passes, "lk = 0 fixture raised no alarm");
  AuditEvidence routes = good;
  routes.boundary_winding = 2;
  v.expect(!judge_audit(routes).passes, "sl route disagreement raised no alarm");
}

void degenerate_handling(Verdict& v) {
  RunConfig c;
  c.form = StarForm::round_sphere();
  c.T_max = 4.0;
  c.seeds = 24;
  c.out_dir = (std::filesystem::temp_directory_path() / "reeb_atlas_acceptance_round").string();
  std::filesystem::create_directories(c.out_dir);
  const CommandOutput found = cmd_orbits_find(c, {});
  std::ofstream(detail::out_path(c, "orbits.json")) << found.report.dump();
  const OrbitDatabase db = database_from_json(found.report);
  v.expect(!db.orbits.empty(), "no orbits found");
  for (std::size_t k = 0; k < db.orbits.size(); ++k) v.expect(db.orbits[k].degenerate(), "entry " + std::to_string(k) + " not flagged");
  const CommandOutput idx = cmd_orbit_index(c, {});
  v.expect(idx.exit_code == 3, "orbit-index exit " + std::to_string(idx.exit_code));
  for (const auto& e : idx.report["indices"]) v.expect(e["mu_cz"].is_null(), "an index was emitted");
  try {
    check_binding(c.form, db, 0);
    v.expect(false, "binding check on a degenerate candidate returned a verdict");
  } catch (const Error& e) {
    v.expect(e.kind() == ErrorKind::degeneracy, e.what());
  }
  std::filesystem::remove_all(c.out_dir);
}

void perturbation(Verdict& v) {
  const StarForm ell = ellipsoid();
  const ReebOrbit base = prime(db20(), "gamma1");
  const std::vector<Monomial> quartics[] = {{{{3, 0, 1, 0}, 1e-2}}, {{{2, 0, 0, 2}, 1e-2}}, {{{1, 1, 1, 1}, -1e-2}}};
  for (const auto& extra : quartics) {
    std::vector<Monomial> terms{{{0, 0, 0, 0}, 1.0}};
    terms.insert(terms.end(), extra.begin(), extra.end());
    const StarForm f = StarForm::weighted(terms, {1.0, sqrt2});
    std::string tag = "q^(";
    for (int e : extra.front().exponent) tag += std::to_string(e);
    tag += ")";
    ReebOrbit o;
    try {
      o = refine_orbit(f, base.x0.x, base.T_min);
    } catch (const Error& e) {
      v.expect(false, tag + ": continuation failed: " + e.what());
      continue;
    }
    v.expect(!o.degenerate(), tag + ": degenerate");
    const IndexReport r = index_report(f, o, 1024);
    v.expect(r.agree() && *r.mu() == 3, tag + ": mu_CZ");
    v.expect(self_linking(f, o, 1e-2) == -1, tag + ": sl");
    v.expect(unknot_check(make_loop_trace(f, o)).status == KnotStatus::certified_unknot, tag + ": unknot");
  }
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)(Verdict&)> criteria[] = {
      {"ellipsoid census at T_max = 10", ellipsoid_census},
      {"index tables by both methods", index_tables},
      {"CZ axioms on 100 random paths", cz_axioms},
      {"spectral winding structure", spectral_structure},
      {"linking, self-linking and unknots", topology},
      {"binding checker on gamma1 and its double cover", binding_checker},
      {"global surface of section on the builtin page", global_section},
      {"characteristic foliation and audit alarms", characteristic_foliation},
      {"degenerate round sphere", degenerate_handling},
      {"quartic perturbations of the ellipsoid", perturbation},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(v);
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.passed() ? "PASS" : "FAIL") << " criterion " << n << ": " << name;
    std::cout << " (" << std::fixed << std::setprecision(1) << secs << " s)";
    for (std::size_t k = 0; k < std::min<std::size_t>(v.failures.size(), 3); ++k) std::cout << "; " << v.failures[k];
    std::cout << std::endl;
    failed += !v.passed();
  }
  return failed == 0 ? 0 : 1;
}
