#pragma once

// Pipeline commands behind the command-line tool. Each returns its report
// and side files instead of writing them, so the tool owns all output and
// tests can drive the commands in-process.

#include "reeb_atlas/binding_check.hpp"
#include "reeb_atlas/config.hpp"

#include <filesystem>
#include <functional>
#include <sstream>

namespace reeb_atlas {

/// Misuse of the command line (missing selector, index out of range).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandArgs {
  std::string orbits_path;  // default <out>/orbits.json
  std::string disk_path;    // default <out>/disk.csv
  std::optional<int> orbit;
  std::optional<int> candidate;
};

struct CommandOutput {
  std::string report_name;
  nlohmann::json report;
  std::vector<std::pair<std::string, std::string>> files;
  int exit_code = 0;
};

namespace detail {

inline std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline nlohmann::json run_block(const std::string& command, const RunConfig& c) {
  return {{"command", command}, {"form_hash", form_hash(c.form)}, {"rng_seed", c.rng_seed}, {"config", config_to_json(c)}};
}

inline OrbitSearchOptions search_options(const RunConfig& c) {
  OrbitSearchOptions o;
  o.flow = c.flow();
  o.newton_tol = c.newton_tol;
  o.seed_offset = c.rng_seed;
  return o;
}

inline BindingOptions binding_options(const RunConfig& c) {
  BindingOptions o;
  o.n_grid = c.n_grid;
  o.trace_points = c.trace_points;
  o.eps = c.pushoff_eps;
  o.flow = c.flow();
  return o;
}

inline OrbitDatabase load_orbits(const RunConfig& c, const CommandArgs& a) {
  const std::string path = a.orbits_path.empty() ? out_path(c, "orbits.json") : a.orbits_path;
  if (!std::filesystem::exists(path)) fail(ErrorKind::dependency, path + " not found; produce it with orbits-find");
  OrbitDatabase db = database_from_json(read_json_file(path));
  if (!db.form_hash.empty() && db.form_hash != form_hash(c.form))
    fail(ErrorKind::dependency, path + " belongs to a different form; rerun orbits-find with this config");
  return db;
}

inline DiskGrid load_disk(const RunConfig& c, const CommandArgs& a) {
  const std::string path = a.disk_path.empty() ? out_path(c, "disk.csv") : a.disk_path;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::dependency, path + " not found; produce it with disk-gen");
  return read_disk(in);
}

inline int select_orbit(const std::optional<int>& k, const OrbitDatabase& db, const char* flag) {
  if (!k) throw UsageError(std::string(flag) + " is required");
  if (*k < 0 || *k >= static_cast<int>(db.orbits.size()))
    throw UsageError(std::string(flag) + " " + std::to_string(*k) + " is not an entry of the orbit database (" +
                     std::to_string(db.orbits.size()) + " entries)");
  return *k;
}

/// Simply covered entries, or the one selected by --orbit.
inline std::vector<int> prime_entries(const OrbitDatabase& db, const std::optional<int>& k) {
  if (k) {
    const int i = select_orbit(k, db, "--orbit");
    if (db.orbits[i].multiplicity != 1)
      throw UsageError("--orbit " + std::to_string(i) + " is a " + std::to_string(db.orbits[i].multiplicity) + "-fold cover");
    return {i};
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < db.orbits.size(); ++i)
    if (db.orbits[i].multiplicity == 1) out.push_back(static_cast<int>(i));
  return out;
}

inline std::string csv_of(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

}  // namespace detail

inline CommandOutput cmd_orbits_find(const RunConfig& c, const CommandArgs&) {
  const OrbitDatabase db = find_orbits(c.form, c.T_max, c.seeds, detail::search_options(c));
  CommandOutput out;
  out.report_name = "orbits.json";
  out.report = database_to_json(db);
  out.report["run"] = detail::run_block("orbits-find", c);
  out.report["search_log"] = db.log;
  out.files.emplace_back("orbits.csv", detail::csv_of([&](std::ostream& os) {
    os << "index,T_min,multiplicity,T,class,residual\n" << std::setprecision(17);
    for (std::size_t k = 0; k < db.orbits.size(); ++k) {
      const ReebOrbit& o = db.orbits[k];
      os << k << ',' << o.T_min << ',' << o.multiplicity << ',' << o.T() << ',' << to_string(o.nondeg_class) << ','
         << o.residual << '\n';
    }
  }));
  return out;
}

/// Exit 3 when any requested index is unavailable (degenerate or methods disagree).
inline CommandOutput cmd_orbit_index(const RunConfig& c, const CommandArgs& a) {
  const OrbitDatabase db = detail::load_orbits(c, a);
  std::vector<int> which;
  if (a.orbit)
    which.push_back(detail::select_orbit(a.orbit, db, "--orbit"));
  else
    for (std::size_t k = 0; k < db.orbits.size(); ++k) which.push_back(static_cast<int>(k));
  CommandOutput out;
  out.report_name = "index.json";
  out.report["run"] = detail::run_block("orbit-index", c);
  out.report["indices"] = nlohmann::json::array();
  for (int k : which) {
    const IndexReport rep = index_report(c.form, db.orbits[k], c.n_grid);
    nlohmann::json j = index_report_to_json(rep);
    j["orbit"] = k;
    j["T"] = db.orbits[k].T();
    j["mu_cz"] = rep.mu() ? nlohmann::json(*rep.mu()) : nlohmann::json(nullptr);
    out.report["indices"].push_back(j);
    if (!rep.mu()) out.exit_code = 3;
  }
  return out;
}

inline CommandOutput cmd_link(const RunConfig& c, const CommandArgs& a) {
  const OrbitDatabase db = detail::load_orbits(c, a);
  const std::vector<int> primes = detail::prime_entries(db, std::nullopt);
  std::vector<LoopTrace> traces;
  if (a.orbit) detail::prime_entries(db, a.orbit);
  for (int k : primes) traces.push_back(make_loop_trace(c.form, db.orbits[k], c.trace_points, c.flow()));
  LinkReport r;
  for (std::size_t i = 0; i < primes.size(); ++i)
    for (std::size_t j = i + 1; j < primes.size(); ++j) {
      if (a.orbit && primes[i] != *a.orbit && primes[j] != *a.orbit) continue;
      const LinkResult lr = linking_number(traces[i], traces[j]);
      r.pairs.push_back({primes[i], primes[j], lr.lk, lr.residual});
    }
  CommandOutput out;
  out.report_name = "link.json";
  out.report = link_report_to_json(r);
  out.report["run"] = detail::run_block("link", c);
  return out;
}

inline CommandOutput cmd_selflink(const RunConfig& c, const CommandArgs& a) {
  const OrbitDatabase db = detail::load_orbits(c, a);
  SelfLinkOptions so;
  so.n_points = c.trace_points;
  so.flow = c.flow();
  LinkReport r;
  for (int k : detail::prime_entries(db, a.orbit)) r.self_linking.push_back({k, self_linking(c.form, db.orbits[k], c.pushoff_eps, so)});
  CommandOutput out;
  out.report_name = "selflink.json";
  out.report = link_report_to_json(r);
  out.report["eps"] = c.pushoff_eps;
  out.report["run"] = detail::run_block("selflink", c);
  return out;
}

/// Exit 3 when any trace is not certified.
inline CommandOutput cmd_unknot(const RunConfig& c, const CommandArgs& a) {
  const OrbitDatabase db = detail::load_orbits(c, a);
  LinkReport r;
  CommandOutput out;
  for (int k : detail::prime_entries(db, a.orbit)) {
    const KnotVerdict v = unknot_check(make_loop_trace(c.form, db.orbits[k], c.trace_points, c.flow()));
    r.knots.push_back({k, v});
    if (v.status != KnotStatus::certified_unknot) out.exit_code = 3;
  }
  out.report_name = "unknot.json";
  out.report = link_report_to_json(r);
  out.report["run"] = detail::run_block("unknot", c);
  return out;
}

inline CommandOutput cmd_disk_gen(const RunConfig& c, const CommandArgs& a) {
  const OrbitDatabase db = detail::load_orbits(c, a);
  const int k = detail::prime_entries(db, a.orbit ? a.orbit : std::optional<int>(0)).front();
  DiskGrid d = builtin_disk(c.form, db.orbits[k], c.disk_theta0, c.disk_n_r, c.disk_n_theta);
  d.orbit_ref = "orbits.json#/orbits/" + std::to_string(k);
  CommandOutput out;
  out.report_name = "disk.json";
  out.report["run"] = detail::run_block("disk-gen", c);
  out.report["orbit"] = k;
  out.report["n_r"] = d.n_r;
  out.report["n_theta"] = d.n_t;
  out.report["theta0"] = c.disk_theta0;
  out.report["boundary_gap"] = boundary_gap(c.form, d, db.orbits[k]);
  out.files.emplace_back("disk.csv", detail::csv_of([&](std::ostream& os) { write_disk(os, d); }));
  return out;
}

/// Exit 0 passes, 2 fails, 3 inconclusive.
inline CommandOutput cmd_section_verify(const RunConfig& c, const CommandArgs& a) {
  const DiskGrid d = detail::load_disk(c, a);
  validate_disk(c.form, d);
  std::vector<Vec4> boundary;
  for (int j = 0; j < d.n_t; ++j) boundary.push_back(d.at(d.n_r - 1, j));
  // the action of a Reeb orbit is its period
  const double period = loop_action(boundary);
  const double budget = c.section_budget > 0 ? c.section_budget : 10.0 * period;
  ReturnOptions ro;
  ro.flow = c.flow();
  const SectionVerdict v = verify_global_section(c.form, d, c.section_seeds, budget, ro);

  CommandOutput out;
  out.report_name = "section.json";
  nlohmann::json& j = out.report;
  j["run"] = detail::run_block("section-verify", c);
  j["status"] = to_string(v.status);
  j["reason"] = v.reason;
  j["seeds"] = v.seeds;
  j["budget"] = budget;
  j["timeouts"] = {{"forward", v.timeouts_forward}, {"backward", v.timeouts_backward}};
  j["transversality"] = {{"sign_constant", v.sign_constant}, {"min_normalized_det", v.min_transversality}};
  j["boundary_action"] = period;
  try {
    const DiskArea ar = disk_area(c.form, d);
    j["area"] = {{"dlambda", ar.area}, {"boundary_lambda", ar.boundary_integral}};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::grid_quality) throw;
    j["area"] = {{"error", e.what()}};
  }
  const CharacteristicField cf = characteristic_field(c.form, d);
  j["foliation"]["boundary_winding"] = cf.boundary_winding;
  j["foliation"]["singularities"] = nlohmann::json::array();
  for (const auto& p : cf.singularities)
    j["foliation"]["singularities"].push_back({{"s", p.s}, {"t", p.t}, {"elliptic", p.elliptic},
                                               {"nicely_elliptic", p.nicely_elliptic}, {"sign", p.sign}, {"index", p.index}});
  out.files.emplace_back("returns_forward.csv", detail::csv_of([&](std::ostream& os) { write_return_csv(os, v.forward); }));
  out.files.emplace_back("returns_backward.csv", detail::csv_of([&](std::ostream& os) { write_return_csv(os, v.backward); }));
  out.exit_code = v.status == SectionStatus::passes ? 0 : v.status == SectionStatus::fails ? 2 : 3;
  return out;
}

inline CommandOutput cmd_binding_check(const RunConfig& c, const CommandArgs& a) {
  const OrbitDatabase db = detail::load_orbits(c, a);
  const int k = detail::select_orbit(a.candidate, db, "--candidate");
  const BindingReport r = check_binding(c.form, db, k, detail::binding_options(c));
  CommandOutput out;
  out.report_name = "binding.json";
  out.report = binding_report_to_json(r);
  out.report["run"] = detail::run_block("binding-check", c);
  out.exit_code = r.exit_code();
  return out;
}

/// Exit 0 passes, 2 alarms, 3 when the page is not a verified section.
inline CommandOutput cmd_audit(const RunConfig& c, const CommandArgs& a) {
  const OrbitDatabase db = detail::load_orbits(c, a);
  const DiskGrid d = detail::load_disk(c, a);
  AuditOptions ao;
  ao.binding = detail::binding_options(c);
  ao.n_seeds = c.section_seeds;
  ao.t_budget = c.section_budget;
  const AuditEvidence e = gather_audit_evidence(c.form, d, db, ao);
  CommandOutput out;
  out.report_name = "audit.json";
  if (!e.section_verified) {
    AuditReport r;
    r.evidence = e;
    r.notes.push_back("page did not pass global-section verification; the audit does not apply");
    out.report = audit_report_to_json(r);
    out.exit_code = 3;
  } else {
    const AuditReport r = judge_audit(e);
    out.report = audit_report_to_json(r);
    out.exit_code = r.passes ? 0 : 2;
  }
  out.report["run"] = detail::run_block("audit", c);
  return out;
}

using CommandFn = CommandOutput (*)(const RunConfig&, const CommandArgs&);

inline const std::vector<std::pair<std::string, CommandFn>>& command_table() {
  static const std::vector<std::pair<std::string, CommandFn>> table{
      {"orbits-find", cmd_orbits_find}, {"orbit-index", cmd_orbit_index},
      {"link", cmd_link},               {"selflink", cmd_selflink},
      {"unknot", cmd_unknot},           {"disk-gen", cmd_disk_gen},
      {"section-verify", cmd_section_verify}, {"binding-check", cmd_binding_check},
      {"audit", cmd_audit}};
  return table;
}

// --- built-in property checks ---------------------------------------------------

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick closed-form checks across the modules on the (1, sqrt 2) ellipsoid.
inline std::vector<ValidationCheck> run_validation() {
  const double s2 = std::sqrt(2.0);
  const StarForm ell = StarForm::ellipsoid(1.0, s2);
  std::vector<ValidationCheck> out;
  auto check = [&](const std::string& name, const std::function<std::string()>& body) {
    ValidationCheck v{name, false, ""};
    try {
      v.detail = body();
      v.passed = v.detail.empty();
    } catch (const std::exception& e) {
      v.detail = e.what();
    }
    out.push_back(v);
  };

  check("contact_core: Reeb field satisfies lambda(R) = 1", [&] {
    const StarForm w = StarForm::weighted({{{0, 0, 0, 0}, 1.0}, {{3, 0, 1, 0}, 0.01}}, {1.0, s2});
    for (std::size_t k = 0; k < 32; ++k) {
      const Vec4 x = project_to_level(w, halton_s3(k + 1));
      const double lam = 0.5 * omega(x, reeb_vector(w, {x}));
      if (std::abs(lam - 1.0) > 1e-10) return "lambda(R) = " + std::to_string(lam);
    }
    return std::string();
  });
  check("flow: H conserved over one period", [&] {
    const Vec4 x = project_to_level(ell, Vec4(0.3, 0.5, -0.2, 0.7));
    const double h = eval_H(ell, flow_point(ell, x, 10.0));
    return std::abs(h - 1.0) < 1e-9 ? std::string() : "H drift " + std::to_string(h - 1.0);
  });
  std::optional<OrbitDatabase> db;
  check("orbits: ellipsoid census below T = 10", [&] {
    db = find_orbits(ell, 10.0, 128);
    const double expect[] = {pi, s2 * pi, 2 * pi, 2 * s2 * pi, 3 * pi};
    if (db->orbits.size() != 5) return "found " + std::to_string(db->orbits.size()) + " orbits";
    for (int k = 0; k < 5; ++k)
      if (std::abs(db->orbits[k].T() / expect[k] - 1.0) > 1e-8) return "period mismatch at entry " + std::to_string(k);
    return std::string();
  });
  check("cz_index: normalization and both methods on gamma1, gamma2", [&] {
    if (cz_from_interval(rotation_interval(rotation_path(0.5))).mu != 1) return std::string("mu(e^{i pi t}) != 1");
    if (!db) return std::string("no orbit database");
    const int want[] = {3, 5};
    for (int k = 0; k < 2; ++k) {
      const IndexReport r = index_report(ell, db->orbits[k]);
      if (!r.agree() || *r.mu() != want[k]) return "index of entry " + std::to_string(k);
    }
    return std::string();
  });
  check("link_topology: Hopf link, sl = -1, unknots", [&] {
    if (!db) return std::string("no orbit database");
    const LoopTrace a = make_loop_trace(ell, db->orbits[0]), b = make_loop_trace(ell, db->orbits[1]);
    if (linking_number(a, b).lk != 1 || crossing_linking(a, b) != 1) return std::string("lk != 1");
    if (self_linking(ell, a, 1e-2) != -1 || self_linking(ell, b, 1e-2) != -1) return std::string("sl != -1");
    if (unknot_check(a).status != KnotStatus::certified_unknot) return std::string("gamma1 not certified");
    return std::string();
  });
  check("sections: builtin page transverse with area pi", [&] {
    if (!db) return std::string("no orbit database");
    const DiskGrid d = builtin_disk(ell, db->orbits[0], 0.0, 32, 128);
    const TransversalityResult t = transversality_check(ell, d);
    if (!t.sign_constant || t.min_det < 0.1) return std::string("transversality");
    const DiskArea ar = disk_area(ell, d);
    if (std::abs(ar.area / pi - 1.0) > 1e-2) return "area " + std::to_string(ar.area);
    if (characteristic_field(ell, d).boundary_winding != 1) return std::string("boundary winding");
    return std::string();
  });
  check("binding_check: gamma1 satisfies the hypotheses", [&] {
    if (!db) return std::string("no orbit database");
    const BindingReport r = check_binding(ell, *db, 0);
    return r.verdict == BindingVerdict::hypotheses_hold ? std::string() : r.verdict_string();
  });
  return out;
}

}  // namespace reeb_atlas
