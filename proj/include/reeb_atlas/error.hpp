#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reeb_atlas {

enum class ErrorKind {
  domain,
  precondition,
  frame_degeneracy,
  stiffness,
  refinement,
  resolution,
  proximity,
  pole_selection,
  projection,
  grid_quality,
  degeneracy,
  inconsistency,
  unsupported,
  eps_instability,
  parse,
  dependency,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::frame_degeneracy: return "frame_degeneracy";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::refinement: return "refinement";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::proximity: return "proximity";
    case ErrorKind::pole_selection: return "pole_selection";
    case ErrorKind::projection: return "projection";
    case ErrorKind::grid_quality: return "grid_quality";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::inconsistency: return "inconsistency";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::eps_instability: return "eps_instability";
    case ErrorKind::parse: return "parse";
    case ErrorKind::dependency: return "dependency";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace reeb_atlas
