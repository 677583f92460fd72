#include "io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "metivier/errors.hpp"

namespace metivier::cli {

namespace {

int get_int(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing \"" + key + "\"");
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(where + ": \"" + key + "\" must be an integer");
  return v.get<int>();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace

GroupSpec group_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("group: expected a JSON object");
  const int d1 = get_int(j, "d1", "group"), d2 = get_int(j, "d2", "group");
  if (d1 < 1 || d2 < 1) throw ValidationError("group: d1 and d2 must be positive");
  std::vector<StructureConstant> entries;
  if (j.contains("c")) {
    if (!j.at("c").is_array()) throw ValidationError("group: \"c\" must be an array");
    std::size_t idx = 0;
    for (const json& e : j.at("c")) {
      const std::string where = "group c[" + std::to_string(idx++) + "]";
      if (!e.is_object()) throw ValidationError(where + ": expected an object");
      const int k = get_int(e, "k", where), i = get_int(e, "i", where), jj = get_int(e, "j", where);
      if (!e.contains("v") || !e.at("v").is_number()) throw ValidationError(where + ": \"v\" must be a number");
      if (k < 1 || k > d2 || i < 1 || i > d1 || jj < 1 || jj > d1)
        throw ValidationError(where + ": index out of range (1-based)");
      entries.push_back({k - 1, i - 1, jj - 1, e.at("v").get<double>()});
    }
  }
  GroupSpec g = make_group(d1, d2, entries);
  validate(g);
  return g;
}

json group_to_json(const GroupSpec& g) {
  json c = json::array();
  for (int k = 0; k < g.d2; ++k)
    for (int i = 0; i < g.d1; ++i)
      for (int j = i + 1; j < g.d1; ++j)
        if (g.at(k, i, j) != 0.0) c.push_back({{"k", k + 1}, {"i", i + 1}, {"j", j + 1}, {"v", g.at(k, i, j)}});
  return {{"d1", g.d1}, {"d2", g.d2}, {"c", c}};
}

GroupSpec load_group(const std::string& path) { return group_from_json(read_json_file(path)); }

SampledMultiplier load_multiplier(const std::string& expr) { return parse_multiplier(expr); }

Eigen::Matrix3d matrix3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("matrix: expected 3 rows");
  Eigen::Matrix3d A;
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) throw ValidationError("matrix: row " + std::to_string(r + 1) + " needs 3 numbers");
    for (int c = 0; c < 3; ++c) {
      if (!j[r][c].is_number()) throw ValidationError("matrix: entry (" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ") is not a number");
      A(r, c) = j[r][c].get<double>();
    }
  }
  return A;
}

Eigen::Matrix3d load_matrix3(const std::string& path) { return matrix3_from_json(read_json_file(path)); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

int to_int(const std::string& tok, const std::string& whole) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (tok.empty() || used != tok.size()) throw ValidationError("bad integer '" + tok + "' in '" + whole + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

}  // namespace

std::pair<int, int> parse_int_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const int v = to_int(s, s);
    return {v, v};
  }
  const int a = to_int(s.substr(0, dots), s), b = to_int(s.substr(dots + 2), s);
  if (b < a) throw ValidationError("empty range '" + s + "'");
  return {a, b};
}

std::vector<int> parse_int_list(const std::string& s) {
  if (s.find("..") != std::string::npos) {
    auto [a, b] = parse_int_range(s);
    std::vector<int> out;
    for (int v = a; v <= b; ++v) out.push_back(v);
    return out;
  }
  std::vector<int> out;
  for (const auto& tok : split(s, ',')) out.push_back(to_int(tok, s));
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size() || !std::isfinite(v))
      throw ValidationError("bad number '" + tok + "' in '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

QuadratureSpec parse_quadrature(const std::string& s) {
  QuadratureSpec q;
  if (s.empty() || s == "default") return q;
  for (const auto& kv : split(s, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("quadrature: expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    auto num = [&] { return parse_double_list(val).at(0); };
    if (key == "radial") q.radial_nodes = to_int(val, s);
    else if (key == "angular") q.angular_nodes = to_int(val, s);
    else if (key == "xradial") q.x_radial_nodes = to_int(val, s);
    else if (key == "kmax") q.k_max = to_int(val, s);
    else if (key == "tail") q.tail_octaves = to_int(val, s);
    else if (key == "kcap") q.k_energy_cap = num();
    else if (key == "maxrel") q.max_rel_error = num();
    else if (key == "abstol") q.abs_tol = num();
    else throw ValidationError("quadrature: unknown key '" + key + "'");
  }
  validate(q);
  return q;
}

json quadrature_to_json(const QuadratureSpec& q) {
  return {{"radial", q.radial_nodes}, {"angular", q.angular_nodes}, {"xradial", q.x_radial_nodes},
          {"kmax", q.k_max},          {"tail", q.tail_octaves},     {"kcap", q.k_energy_cap},
          {"maxrel", q.max_rel_error}, {"abstol", q.abs_tol}};
}

std::string RunManifest::id() const {
  json j = to_json();
  j.erase("wall_time_s");
  j.erase("threads");
  j.erase("id");
  j.erase("command_line");
  return hex64(fnv1a(j.dump()));
}

json RunManifest::to_json() const {
  return {{"command_line", command_line}, {"canonical_command", canonical_command},
          {"group_hash", group_hash},     {"multiplier", multiplier_spec},
          {"quadrature", quadrature},     {"bump", bump_id},
          {"tool_version", tool_version}, {"threads", threads},
          {"seed", seed},                 {"wall_time_s", wall_time_s}};
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace metivier::cli
