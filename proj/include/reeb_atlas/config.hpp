#pragma once

// Run configuration for the command-line front end. Every field has a
// default except the form; unknown keys are rejected so that typos surface
// as errors instead of silently falling back to defaults.

#include "reeb_atlas/contact_core.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

namespace reeb_atlas {

struct RunConfig {
  StarForm form;
  double T_max = 10.0;
  std::size_t seeds = 256;
  std::uint64_t rng_seed = 0;
  std::string out_dir = "out";

  double flow_tol = 1e-12;
  double flow_max_step = 0.05;
  double newton_tol = 1e-10;
  int n_grid = 1024;
  int trace_points = 512;
  double pushoff_eps = 1e-2;

  int disk_n_r = 64;
  int disk_n_theta = 256;
  double disk_theta0 = 0.0;
  int section_seeds = 500;
  double section_budget = 0.0;  // 0: derived from the binding period

  FlowOptions flow() const {
    FlowOptions f;
    f.tol = flow_tol;
    f.max_step = flow_max_step;
    return f;
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& base, const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) json_fail(base + "/" + it.key(), "unknown field");
}

inline const nlohmann::json& object_at(const nlohmann::json& j, const char* key, const std::string& base) {
  if (!j[key].is_object()) json_fail(base + "/" + key, "expected an object");
  return j[key];
}

inline double positive(const nlohmann::json& j, const std::string& ptr) {
  const double v = json_finite(j, ptr);
  if (v <= 0.0) json_fail(ptr, "must be positive");
  return v;
}

inline long long integer_in(const nlohmann::json& j, const std::string& ptr, long long lo, long long hi) {
  if (!j.is_number_integer()) json_fail(ptr, "expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > hi) json_fail(ptr, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

}  // namespace detail

/// Parse errors carry a JSON pointer to the offending field.
inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::integer_in;
  using detail::positive;
  if (!j.is_object()) json_fail("/", "config must be an object");
  detail::reject_unknown(j, "", {"form", "tmax", "seeds", "rng_seed", "out", "tolerances", "index", "link", "disk", "section"});
  if (!j.contains("form")) json_fail("/form", "missing field");
  RunConfig c;
  c.form = form_from_json(j["form"], "/form");
  if (j.contains("tmax")) c.T_max = positive(j["tmax"], "/tmax");
  if (j.contains("seeds")) c.seeds = static_cast<std::size_t>(integer_in(j["seeds"], "/seeds", 1, 1 << 20));
  if (j.contains("rng_seed")) {
    if (!j["rng_seed"].is_number_unsigned()) json_fail("/rng_seed", "expected a non-negative integer");
    c.rng_seed = j["rng_seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string() || j["out"].get<std::string>().empty()) json_fail("/out", "expected a non-empty string");
    c.out_dir = j["out"].get<std::string>();
  }
  if (j.contains("tolerances")) {
    const auto& t = detail::object_at(j, "tolerances", "");
    detail::reject_unknown(t, "/tolerances", {"flow", "max_step", "newton", "pushoff_eps"});
    if (t.contains("flow")) c.flow_tol = positive(t["flow"], "/tolerances/flow");
    if (t.contains("max_step")) c.flow_max_step = positive(t["max_step"], "/tolerances/max_step");
    if (t.contains("newton")) c.newton_tol = positive(t["newton"], "/tolerances/newton");
    if (t.contains("pushoff_eps")) c.pushoff_eps = positive(t["pushoff_eps"], "/tolerances/pushoff_eps");
  }
  if (j.contains("index")) {
    const auto& t = detail::object_at(j, "index", "");
    detail::reject_unknown(t, "/index", {"n_grid"});
    if (t.contains("n_grid")) c.n_grid = static_cast<int>(integer_in(t["n_grid"], "/index/n_grid", 64, 1 << 16));
  }
  if (j.contains("link")) {
    const auto& t = detail::object_at(j, "link", "");
    detail::reject_unknown(t, "/link", {"trace_points"});
    if (t.contains("trace_points"))
      c.trace_points = static_cast<int>(integer_in(t["trace_points"], "/link/trace_points", 512, 1 << 16));
  }
  if (j.contains("disk")) {
    const auto& t = detail::object_at(j, "disk", "");
    detail::reject_unknown(t, "/disk", {"n_r", "n_theta", "theta0"});
    if (t.contains("n_r")) c.disk_n_r = static_cast<int>(integer_in(t["n_r"], "/disk/n_r", 4, 4096));
    if (t.contains("n_theta")) c.disk_n_theta = static_cast<int>(integer_in(t["n_theta"], "/disk/n_theta", 8, 1 << 16));
    if (t.contains("theta0")) c.disk_theta0 = json_finite(t["theta0"], "/disk/theta0");
  }
  if (j.contains("section")) {
    const auto& t = detail::object_at(j, "section", "");
    detail::reject_unknown(t, "/section", {"seeds", "budget"});
    if (t.contains("seeds")) c.section_seeds = static_cast<int>(integer_in(t["seeds"], "/section/seeds", 1, 1 << 20));
    if (t.contains("budget")) c.section_budget = positive(t["budget"], "/section/budget");
  }
  return c;
}

/// Effective parameters, recorded in every report.
inline nlohmann::json config_to_json(const RunConfig& c) {
  return {{"form", form_to_json(c.form)},
          {"tmax", c.T_max},
          {"seeds", c.seeds},
          {"rng_seed", c.rng_seed},
          {"tolerances", {{"flow", c.flow_tol}, {"max_step", c.flow_max_step}, {"newton", c.newton_tol},
                          {"pushoff_eps", c.pushoff_eps}}},
          {"index", {{"n_grid", c.n_grid}}},
          {"link", {{"trace_points", c.trace_points}}},
          {"disk", {{"n_r", c.disk_n_r}, {"n_theta", c.disk_n_theta}, {"theta0", c.disk_theta0}}},
          {"section", {{"seeds", c.section_seeds}, {"budget", c.section_budget}}}};
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::dependency, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, "/: " + path + " is not valid JSON (" + e.what() + ")");
  }
}

}  // namespace reeb_atlas
