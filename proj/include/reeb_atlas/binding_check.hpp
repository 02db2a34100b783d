#pragma once

// Hypothesis checker for a binding candidate and the audit of a verified
// page. Evidence is gathered first and judged by pure functions, so that
// corrupted evidence can be fed to the judges directly.

#include "reeb_atlas/cz_index.hpp"
#include "reeb_atlas/sections.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reeb_atlas {

enum class BindingVerdict { hypotheses_hold, fails, inconclusive };

struct LinkedOrbit {
  int orbit = -1;
  int lk = 0;
  bool linked = false;
};

struct OrbitIndex {
  int orbit = -1;
  bool degenerate = false;
  std::optional<int> mu;  // set when both methods agree
  bool methods_agree = false;
};

struct BindingEvidence {
  int candidate = -1;
  bool simply_covered = false;
  std::optional<KnotVerdict> unknot;
  std::optional<int> sl;
  std::optional<int> mu_cz;
  bool mu_agree = false;
  std::vector<OrbitIndex> indices;  // every database entry
  std::vector<LinkedOrbit> index2;  // entries with agreed index 2
  double T_max = 0.0;
};

struct BindingReport {
  BindingEvidence evidence;
  BindingVerdict verdict = BindingVerdict::inconclusive;
  std::string condition;  // failing condition or inconclusive reason

  std::string verdict_string() const {
    switch (verdict) {
      case BindingVerdict::hypotheses_hold: return "hypotheses_hold";
      case BindingVerdict::fails: return "fails:" + condition;
      case BindingVerdict::inconclusive: return "inconclusive:" + condition;
    }
    return "unknown";
  }

  int exit_code() const {
    switch (verdict) {
      case BindingVerdict::hypotheses_hold: return 0;
      case BindingVerdict::fails: return 2;
      case BindingVerdict::inconclusive: return 3;
    }
    return 3;
  }
};

/// Definite failures take precedence over abstentions; the first failing
/// condition in the fixed order below is reported.
inline BindingReport judge_binding(const BindingEvidence& e) {
  BindingReport r;
  r.evidence = e;
  auto fails = [&](const char* c) {
    r.verdict = BindingVerdict::fails;
    r.condition = c;
    return r;
  };
  if (!e.simply_covered) return fails("simply_covered");
  if (e.sl && *e.sl != -1) return fails("self_linking");
  if (e.mu_cz && *e.mu_cz < 3) return fails("conley_zehnder");
  for (const auto& l : e.index2)
    if (!l.linked) return fails("linking");

  auto abstain = [&](const char* c) {
    r.verdict = BindingVerdict::inconclusive;
    r.condition = c;
    return r;
  };
  if (!e.unknot || e.unknot->status != KnotStatus::certified_unknot) return abstain("unknot_unknown");
  if (!e.sl) return abstain("self_linking_unavailable");
  if (!e.mu_cz) return abstain(e.mu_agree ? "index_unavailable" : "index_methods_disagree");
  for (const auto& ix : e.indices)
    if (ix.degenerate) return abstain("degenerate_index");
    else if (!ix.methods_agree) return abstain("index_methods_disagree");
  r.verdict = BindingVerdict::hypotheses_hold;
  r.condition.clear();
  return r;
}

struct BindingOptions {
  int n_grid = 1024;
  int trace_points = min_trace_points;
  double eps = 1e-2;
  FlowOptions flow;
};

inline bool same_geometric_orbit(const StarForm& form, const ReebOrbit& a, const ReebOrbit& b,
                                 const FlowOptions& fo = {}) {
  if (std::abs(a.T_min - b.T_min) > 1e-6 * a.T_min) return false;
  return hausdorff(orbit_trace(form, a, 128, fo), orbit_trace(form, b, 128, fo)) < 1e-4;
}

namespace detail {

inline ReebOrbit prime_of(const ReebOrbit& o) {
  ReebOrbit p = o;
  p.multiplicity = 1;
  return p;
}

/// Index of every database entry; a ReebOrbit's own degeneracy and any
/// flagged computation both count as degenerate.
inline std::vector<OrbitIndex> database_indices(const StarForm& form, const OrbitDatabase& db, int n_grid) {
  std::vector<OrbitIndex> out(db.orbits.size());
  for (std::size_t k = 0; k < db.orbits.size(); ++k) {
    const IndexReport rep = index_report(form, db.orbits[k], n_grid);
    out[k].orbit = static_cast<int>(k);
    out[k].degenerate = rep.degenerate;
    out[k].methods_agree = rep.agree();
    out[k].mu = rep.mu();
  }
  return out;
}

/// lk of a database entry (as a multiply covered cycle) with the candidate trace.
inline int cycle_linking(const StarForm& form, const ReebOrbit& o, const LoopTrace& candidate, const BindingOptions& opt) {
  const LoopTrace tr = make_loop_trace(form, prime_of(o), opt.trace_points, opt.flow);
  return o.multiplicity * linking_number(tr, candidate).lk;
}

}  // namespace detail

inline BindingEvidence gather_binding_evidence(const StarForm& form, const OrbitDatabase& db, int candidate,
                                               const BindingOptions& opt = {}) {
  require(candidate >= 0 && candidate < static_cast<int>(db.orbits.size()), ErrorKind::precondition,
          "candidate index is not in the orbit database");
  const ReebOrbit& cand = db.orbits[candidate];
  if (cand.degenerate()) fail(ErrorKind::degeneracy, "candidate orbit is degenerate");
  BindingEvidence e;
  e.candidate = candidate;
  e.T_max = db.T_max;
  e.simply_covered = cand.multiplicity == 1;
  e.indices = detail::database_indices(form, db, opt.n_grid);
  e.mu_agree = e.indices[candidate].methods_agree;
  e.mu_cz = e.indices[candidate].mu;

  const LoopTrace ctr = make_loop_trace(form, detail::prime_of(cand), opt.trace_points, opt.flow);
  if (e.simply_covered) {
    e.unknot = unknot_check(ctr);
    SelfLinkOptions so;
    so.n_points = opt.trace_points;
    so.flow = opt.flow;
    e.sl = self_linking(form, ctr, opt.eps, so);
  }
  for (std::size_t k = 0; k < db.orbits.size(); ++k) {
    if (!e.indices[k].mu || *e.indices[k].mu != 2) continue;
    LinkedOrbit l;
    l.orbit = static_cast<int>(k);
    if (!same_geometric_orbit(form, db.orbits[k], cand, opt.flow)) l.lk = detail::cycle_linking(form, db.orbits[k], ctr, opt);
    l.linked = l.lk != 0;
    e.index2.push_back(l);
  }
  return e;
}

inline BindingReport check_binding(const StarForm& form, const OrbitDatabase& db, int candidate,
                                   const BindingOptions& opt = {}) {
  return judge_binding(gather_binding_evidence(form, db, candidate, opt));
}

inline nlohmann::json binding_report_to_json(const BindingReport& r) {
  const BindingEvidence& e = r.evidence;
  nlohmann::json j;
  j["orbit"] = e.candidate;
  j["simply_covered"] = e.simply_covered;
  j["unknot_status"] = e.unknot ? to_string(e.unknot->status) : "not_applicable";
  j["crossings"] = e.unknot ? nlohmann::json(e.unknot->crossing_count_after_reduction) : nlohmann::json(nullptr);
  j["sl"] = e.sl ? nlohmann::json(*e.sl) : nlohmann::json(nullptr);
  j["mu_cz"] = e.mu_cz ? nlohmann::json(*e.mu_cz) : nlohmann::json(nullptr);
  j["mu_methods_agree"] = e.mu_agree;
  j["index2_orbits_checked"] = nlohmann::json::array();
  for (const auto& l : e.index2) j["index2_orbits_checked"].push_back({{"orbit", l.orbit}, {"lk", l.lk}, {"linked", l.linked}});
  j["degenerate_orbits"] = nlohmann::json::array();
  for (const auto& ix : e.indices)
    if (ix.degenerate) j["degenerate_orbits"].push_back(ix.orbit);
  j["verdict"] = r.verdict_string();
  j["truncation"] = {{"T_max", e.T_max}};
  return j;
}

// --- audit of a verified page ------------------------------------------------

struct AuditEvidence {
  int binding = -1;
  bool section_verified = false;
  std::optional<KnotVerdict> unknot;
  std::vector<LinkedOrbit> others;  // every database entry geometrically distinct from the binding
  int sl_pushoff = 0;
  int boundary_winding = 0;
  std::optional<int> mu_cz;
};

struct AuditReport {
  AuditEvidence evidence;
  bool passes = false;
  std::vector<std::string> alarms;
  std::vector<std::string> notes;
};

/// Every condition here must hold once the page is a verified section,
/// so any violation is reported as a numerical inconsistency.
inline AuditReport judge_audit(const AuditEvidence& e) {
  AuditReport r;
  r.evidence = e;
  require(e.section_verified, ErrorKind::precondition, "audit needs a page that passed global-section verification");
  for (const auto& l : e.others)
    if (l.lk == 0) r.alarms.push_back("orbit " + std::to_string(l.orbit) + " is unlinked from the binding");
  if (e.sl_pushoff != -e.boundary_winding)
    r.alarms.push_back("self-linking routes disagree: pushoff " + std::to_string(e.sl_pushoff) + ", foliation " +
                       std::to_string(-e.boundary_winding));
  if (e.sl_pushoff != -1) r.alarms.push_back("self-linking of the binding is " + std::to_string(e.sl_pushoff));
  if (!e.mu_cz)
    r.alarms.push_back("binding index unavailable");
  else if (*e.mu_cz < 3)
    r.alarms.push_back("binding index " + std::to_string(*e.mu_cz) + " < 3");
  if (!e.unknot || e.unknot->status != KnotStatus::certified_unknot)
    r.notes.push_back("unknot certificate abstained although the page is an embedded disk");
  r.passes = r.alarms.empty();
  return r;
}

struct AuditOptions {
  BindingOptions binding;
  int n_seeds = 200;
  double t_budget = 0.0;  // 0: max(10 T_binding, T_max)
};

/// Binding = the database entry traced by the page boundary.
inline int find_binding(const StarForm& form, const DiskGrid& d, const OrbitDatabase& db) {
  for (std::size_t k = 0; k < db.orbits.size(); ++k) {
    const ReebOrbit& o = db.orbits[k];
    if (o.multiplicity != 1) continue;
    // the page boundary may start anywhere along the orbit
    const std::vector<Vec4> tr = orbit_trace(form, o, d.n_t);
    std::vector<Vec4> bnd;
    for (int j = 0; j < d.n_t; ++j) bnd.push_back(d.at(d.n_r - 1, j));
    if (hausdorff(tr, bnd) < 1e-6) return static_cast<int>(k);
  }
  fail(ErrorKind::dependency, "no simply covered database orbit matches the page boundary (run orbits-find)");
}

inline AuditEvidence gather_audit_evidence(const StarForm& form, const DiskGrid& d, const OrbitDatabase& db,
                                           const AuditOptions& opt = {}) {
  AuditEvidence e;
  e.binding = find_binding(form, d, db);
  const ReebOrbit& b = db.orbits[e.binding];
  const double budget = opt.t_budget > 0 ? opt.t_budget : std::max(10.0 * b.T_min, db.T_max);
  e.section_verified = verify_global_section(form, d, opt.n_seeds, budget).passes();
  const LoopTrace tr = make_loop_trace(form, b, opt.binding.trace_points, opt.binding.flow);
  e.unknot = unknot_check(tr);
  SelfLinkOptions so;
  so.n_points = opt.binding.trace_points;
  so.flow = opt.binding.flow;
  e.sl_pushoff = self_linking(form, tr, opt.binding.eps, so);
  e.boundary_winding = characteristic_field(form, d).boundary_winding;
  e.mu_cz = index_report(form, b, opt.binding.n_grid).mu();
  for (std::size_t k = 0; k < db.orbits.size(); ++k) {
    if (same_geometric_orbit(form, db.orbits[k], b, opt.binding.flow)) continue;
    LinkedOrbit l;
    l.orbit = static_cast<int>(k);
    l.lk = detail::cycle_linking(form, db.orbits[k], tr, opt.binding);
    l.linked = l.lk != 0;
    e.others.push_back(l);
  }
  return e;
}

inline AuditReport necessity_audit(const StarForm& form, const DiskGrid& d, const OrbitDatabase& db,
                                   const AuditOptions& opt = {}) {
  return judge_audit(gather_audit_evidence(form, d, db, opt));
}

inline nlohmann::json audit_report_to_json(const AuditReport& r) {
  const AuditEvidence& e = r.evidence;
  nlohmann::json j;
  j["binding"] = e.binding;
  j["section_verified"] = e.section_verified;
  j["unknot_status"] = e.unknot ? to_string(e.unknot->status) : "not_computed";
  j["sl_pushoff"] = e.sl_pushoff;
  j["sl_foliation"] = -e.boundary_winding;
  j["mu_cz"] = e.mu_cz ? nlohmann::json(*e.mu_cz) : nlohmann::json(nullptr);
  j["linking"] = nlohmann::json::array();
  for (const auto& l : e.others) j["linking"].push_back({{"orbit", l.orbit}, {"lk", l.lk}, {"linked", l.linked}});
  j["alarms"] = r.alarms;
  j["notes"] = r.notes;
  j["passes"] = r.passes;
  return j;
}

}  // namespace reeb_atlas
