#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "metivier/group.hpp"
#include "metivier/kernel.hpp"
#include "metivier/multiplier.hpp"

namespace metivier::cli {

using nlohmann::json;

// {"d1":int,"d2":int,"c":[{"k":int,"i":int,"j":int,"v":number}]}, 1-based,
// unlisted entries zero. Listing both (i,j) and (j,i) is allowed if consistent.
GroupSpec group_from_json(const json& j);
json group_to_json(const GroupSpec& g);  // i < j entries only, sorted
GroupSpec load_group(const std::string& path);
SampledMultiplier load_multiplier(const std::string& expr);

// 3x3 matrix as [[a11,a12,a13],[...],[...]]
Eigen::Matrix3d matrix3_from_json(const json& j);
Eigen::Matrix3d load_matrix3(const std::string& path);

std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

// "0..4" or "0,2,3" (integers); "a..b" is inclusive.
std::vector<int> parse_int_list(const std::string& s);
std::pair<int, int> parse_int_range(const std::string& s);  // "a..b" or a single integer
std::vector<double> parse_double_list(const std::string& s);

// "default" or comma-separated key=value over radial, angular, xradial,
// kcap, kmax, maxrel, abstol, tail
QuadratureSpec parse_quadrature(const std::string& s);
json quadrature_to_json(const QuadratureSpec& q);

inline constexpr const char* kToolVersion = "0.9.0";
inline constexpr const char* kBumpId = "psi0=exp(-1/((t-1/2)(2-t))) on (1/2,2); chi=psi0/sum_j psi0(2^-j .)";

struct RunManifest {
  std::string command_line;
  std::string canonical_command;  // command line without --threads, --out, --manifest: what the id hashes
  std::string group_hash;  // fnv1a of the canonical group JSON, "" when no group
  std::string multiplier_spec;
  json quadrature = json::object();
  std::string bump_id = kBumpId;
  std::string tool_version = kToolVersion;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;

  // hash of everything except wall time and thread count, which do not change results
  std::string id() const;
  json to_json() const;
};

// %.17g, so a CSV round-trips doubles exactly
std::string fmt(double v);

}  // namespace metivier::cli
