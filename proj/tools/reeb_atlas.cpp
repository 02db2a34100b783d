// reeb-atlas: command-line front end over the header-only library.
//
// Exit codes: 0 ok, 2 verdict fails, 3 inconclusive, 64 usage or config
// error, 65 malformed input artifact, 66 missing prerequisite artifact,
// 70 numerical failure.

#include "reeb_atlas/reeb_atlas.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace reeb_atlas;

namespace {

constexpr int exit_usage = 64;
constexpr int exit_data = 65;
constexpr int exit_noinput = 66;
constexpr int exit_software = 70;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void error_line(const std::string& kind, const std::string& what) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", what}}.dump() << '\n';
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return exit_data;
    case ErrorKind::dependency: return exit_noinput;
    case ErrorKind::degeneracy: return 3;
    default: return exit_software;
  }
}

int validate() {
  bool ok = true;
  for (const auto& v : run_validation()) {
    std::cout << (v.passed ? "PASS " : "FAIL ") << v.name;
    if (!v.passed) std::cout << ": " << v.detail;
    std::cout << '\n';
    ok = ok && v.passed;
  }
  return ok ? 0 : exit_software;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical evidence for binding orbits of Reeb flows on star-shaped levels in R^4"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path, out_dir;
  std::optional<double> tmax;
  std::optional<std::size_t> seeds;
  std::optional<std::uint64_t> rng_seed;
  bool run_checks = false;
  CommandArgs args;
  std::optional<int> orbit, candidate;

  app.add_option("--config", config_path, "run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--tmax", tmax, "period cap for orbits-find")->check(CLI::PositiveNumber);
  app.add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--rng-seed", rng_seed, "seed for all seed scattering");
  app.add_flag("--validate", run_checks, "run the built-in property checks first");
  app.add_option("--orbits", args.orbits_path, "orbit database (default <out>/orbits.json)");
  app.add_option("--disk", args.disk_path, "disk file (default <out>/disk.csv)");
  app.add_option("--orbit", orbit, "orbit database entry");
  app.add_option("--candidate", candidate, "binding candidate entry");

  std::vector<std::pair<CLI::App*, CommandFn>> subs;
  const char* help[] = {"enumerate periodic Reeb orbits up to T_max",
                        "Conley-Zehnder index by both methods",
                        "pairwise linking numbers of simply covered orbits",
                        "self-linking numbers via pushoff",
                        "unknot certificates",
                        "builtin page for an ellipsoid orbit",
                        "global surface of section verification",
                        "binding hypotheses for a candidate orbit",
                        "necessity audit on a verified page"};
  std::size_t h = 0;
  for (const auto& [name, fn] : command_table()) subs.emplace_back(app.add_subcommand(name, help[h++]), fn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  int status = 0;
  if (run_checks) {
    status = validate();
    if (status != 0) return status;
  }
  CommandFn fn = nullptr;
  std::string command;
  for (const auto& [sub, f] : subs)
    if (sub->parsed()) {
      fn = f;
      command = sub->get_name();
    }
  if (!fn) {
    if (run_checks) return status;
    std::cerr << app.help();
    return exit_usage;
  }
  if (config_path.empty()) {
    error_line("usage", "--config is required");
    return exit_usage;
  }

  RunConfig cfg;
  try {
    cfg = config_from_json(read_json_file(config_path));
  } catch (const Error& e) {
    // config problems are usage errors; the message starts with the JSON pointer
    error_line("usage", config_path + ": " + e.what());
    return exit_usage;
  }
  if (tmax) cfg.T_max = *tmax;
  if (seeds) cfg.seeds = *seeds;
  if (rng_seed) cfg.rng_seed = *rng_seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  args.orbit = orbit;
  args.candidate = candidate;

  const std::string started = utc_now();
  CommandOutput out;
  try {
    out = fn(cfg, args);
  } catch (const UsageError& e) {
    error_line("usage", e.what());
    return exit_usage;
  } catch (const Error& e) {
    error_line(std::string(to_string(e.kind())), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    error_line("internal", e.what());
    return exit_software;
  }

  try {
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);
    write_file(dir / out.report_name, out.report.dump(2) + "\n");
    for (const auto& [name, text] : out.files) write_file(dir / name, text);
    nlohmann::json meta{{"command", command},
                        {"argv", std::vector<std::string>(argv, argv + argc)},
                        {"started_utc", started},
                        {"finished_utc", utc_now()},
                        {"threads", worker_count()},
                        {"exit_code", out.exit_code}};
    write_file(dir / (fs::path(out.report_name).stem().string() + ".meta.json"), meta.dump(2) + "\n");
  } catch (const std::exception& e) {
    error_line("io", e.what());
    return exit_software;
  }

  nlohmann::json summary{{"command", command}, {"report", (fs::path(cfg.out_dir) / out.report_name).string()},
                         {"exit_code", out.exit_code}};
  if (out.report.contains("verdict")) summary["verdict"] = out.report["verdict"];
  if (out.report.contains("status")) summary["status"] = out.report["status"];
  if (out.report.contains("orbits")) summary["orbits"] = out.report["orbits"].size();
  if (out.report.contains("passes")) summary["passes"] = out.report["passes"];
  std::cout << summary.dump() << '\n';
  return out.exit_code;
}
