#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "io.hpp"
#include "metivier/discrete_oracle.hpp"
#include "metivier/errors.hpp"
#include "metivier/laguerre.hpp"
#include "metivier/numerology.hpp"
#include "metivier/parallel.hpp"
#include "metivier/plancherel.hpp"
#include "metivier/spectral.hpp"

namespace metivier::cli {

namespace {

struct Result {
  Result() = default;
  Result(std::string t) : text(std::move(t)) {}  // NOLINT(implicit)
  std::string text;
  bool flagged = false;
  std::string flag_reason;
};

struct Common {
  int threads = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string manifest_path;
  std::string quad = "default";
};

// filled in by the commands as they load inputs
struct Run {
  RunManifest manifest;
  ParallelFor pfor = serial_for();
  QuadratureSpec quad;
};

std::string join_args(const std::vector<std::string>& args, bool canonical) {
  std::string s = "metivier-lab";
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (canonical) {
      bool skip_next = false, skip = false;
      for (const char* opt : {"--threads", "--out", "--manifest"}) {
        if (a == opt) skip = skip_next = true;
        else if (a.rfind(std::string(opt) + "=", 0) == 0) skip = true;
      }
      if (skip) {
        if (skip_next) ++i;
        continue;
      }
    }
    s += " " + a;
  }
  return s;
}

GroupSpec use_group(Run& run, const std::string& path) {
  GroupSpec g = load_group(path);
  run.manifest.group_hash = hex64(fnv1a(group_to_json(g).dump()));
  return g;
}

SampledMultiplier use_mult(Run& run, const std::string& expr) {
  SampledMultiplier F = load_multiplier(expr);
  run.manifest.multiplier_spec = F.spec;
  return F;
}

std::optional<int> parse_ell(const std::string& s) {
  if (s == "none") return std::nullopt;
  return parse_int_range(s).first;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_head(const Run& run, const std::string& columns) {
  return "# manifest " + run.manifest.id() + "\n" + columns + "\n";
}

std::string dump(json j, const Run& run) {
  j["manifest_id"] = run.manifest.id();
  return j.dump(2) + "\n";
}

// ---- group ----

Result group_show(Run& run, const std::string& path, int samples) {
  GroupSpec g = use_group(run, path);
  auto mv = is_metivier(g, samples, 1e-8, run.manifest.seed);
  const double htr = heisenberg_type_residual(g);
  json j = {{"group", group_to_json(g)},
            {"hash", run.manifest.group_hash},
            {"Q", g.Q()},
            {"metivier",
             {{"verdict", mv.verdict},
              {"min_singular_value", mv.min_sv},
              {"witness_mu", vec_json(mv.witness_mu)},
              {"samples", mv.n_samples},
              {"tol", mv.tol},
              {"sampled", mv.sampled}}},
            {"heisenberg_type", {{"residual", htr}, {"verdict", is_heisenberg_type(g, 1e-10)}}}};
  return {dump(j, run)};
}

Result group_builtin(Run& run, const std::string& name, const std::string& a_path) {
  GroupSpec g;
  if (name.rfind("heisenberg:", 0) == 0) {
    g = heisenberg(parse_int_range(name.substr(11)).first);
  } else if (name == "metivier43") {
    if (a_path.empty()) throw ValidationError("group builtin metivier43 needs --A");
    g = metivier_4_3(load_matrix3(a_path));
  } else {
    throw ValidationError("unknown builtin group '" + name + "' (heisenberg:<n> or metivier43)");
  }
  run.manifest.group_hash = hex64(fnv1a(group_to_json(g).dump()));
  return {group_to_json(g).dump(2) + "\n"};
}

// ---- numerology ----

Result numerology_table(Run& run, int d1_max, const std::string& format) {
  if (d1_max < 1 || d1_max > 256) throw ValidationError("--d1-max must be in 1..256");
  if (format != "csv" && format != "md") throw ValidationError("--format must be csv or md");
  std::vector<std::vector<std::string>> rows;
  for (int d1 = 1; d1 <= d1_max; ++d1) {
    const int rho = radon_hurwitz(d1);
    for (int d2 = 1; d2 < rho; ++d2) {
      const Rational p = p_threshold(d1, d2);
      std::string c3 = d2 == 1 ? "n/a" : condition_iii_threshold(d1, d2).str();
      rows.push_back({std::to_string(d1), std::to_string(d2), std::to_string(rho), admissible(d1, d2) ? "yes" : "no",
                      is_exceptional(d1, d2) ? "exceptional" : "-", p.str(), bar_p_threshold(d1, d2).str(), c3,
                      three_halves_holds(d1, d2) ? "yes" : "no", regularity_threshold(p, d1 + d2).str()});
    }
  }
  const std::vector<std::string> head = {"d1", "d2", "rho_RH", "admissible", "exceptional", "p", "bar_p",
                                         "condition_iii", "three_halves", "s_at_p"};
  std::ostringstream os;
  if (format == "csv") {
    os << "# manifest " << run.manifest.id() << "\n# all entries exact (rational arithmetic)\n";
    for (std::size_t i = 0; i < head.size(); ++i) os << (i ? "," : "") << head[i];
    os << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
  } else {
    os << "<!-- manifest " << run.manifest.id() << "; all entries exact -->\n|";
    for (const auto& h : head) os << " " << h << " |";
    os << "\n|";
    for (std::size_t i = 0; i < head.size(); ++i) os << "---|";
    os << "\n";
    for (const auto& r : rows) {
      os << "|";
      for (const auto& c : r) os << " " << c << " |";
      os << "\n";
    }
  }
  return {os.str()};
}

Result numerology_thresholds(Run& run, int d1, int d2) {
  json j = {{"d1", d1}, {"d2", d2}, {"rho_RH", radon_hurwitz(d1)}, {"admissible", admissible(d1, d2)}};
  if (admissible(d1, d2)) {
    const Rational p = p_threshold(d1, d2);
    j["exceptional"] = is_exceptional(d1, d2);
    j["p"] = p.str();
    j["bar_p"] = bar_p_threshold(d1, d2).str();
    j["three_halves"] = three_halves_holds(d1, d2);
    j["condition_iii"] = d2 == 1 ? json(nullptr) : json(condition_iii_threshold(d1, d2).str());
    j["stein_tomas_d1"] = stein_tomas(d1).str();
    j["stein_tomas_d2"] = stein_tomas(d2).str();
    j["regularity_at_p"] = regularity_threshold(p, d1 + d2).str();
  }
  j["exact"] = true;
  return {dump(j, run)};
}

// ---- spectral ----

Result spectral_decompose(Run& run, const std::string& path, const std::string& mu_s) {
  GroupSpec g = use_group(run, path);
  const auto mu = parse_double_list(mu_s);
  if (static_cast<int>(mu.size()) != g.d2) throw ValidationError("--mu needs d2 = " + std::to_string(g.d2) + " entries");
  const Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  const auto d = decompose_j(g, m);
  json blocks = json::array();
  double resid = 0.0;
  Eigen::MatrixXd J = j_matrix(g, m), rec = Eigen::MatrixXd::Zero(g.d1, g.d1);
  for (int n = 0; n < d.N; ++n) {
    blocks.push_back({{"b", d.b[n]}, {"r", d.r[n]}, {"P", mat_json(d.P[n])}});
    rec += d.b[n] * d.b[n] * d.P[n];
  }
  resid = (-J * J - rec).norm();
  json j = {{"mu", mu},           {"N", d.N},
            {"blocks", blocks},   {"r0", d.r0},
            {"gap", finite_or_null(d.gap)},
            {"reconstruction_residual", resid}};
  if (d.r0 > 0) j["P0"] = mat_json(d.P0);
  return {dump(j, run)};
}

Result spectral_probe(Run& run, const std::string& a_path, int alpha, int samples) {
  const Eigen::Matrix3d A = load_matrix3(a_path);
  run.manifest.group_hash = hex64(fnv1a(group_to_json(metivier_4_3(A)).dump()));
  if (alpha < 1 || alpha > 2) throw ValidationError("--alpha must be 1 or 2");
  const auto ker = kerA_classify(A);
  auto pr = mu_derivative_bounds_probe(A, ker.v, samples, alpha, 1e-4, 1e-3, run.manifest.seed);
  std::ostringstream os;
  os << csv_head(run, "mu1,mu2,mu3,N,b1,b2,alpha,Db1_rel,Db2_rel,DP1_op,DP2_op,fd_h");
  for (const auto& r : pr.table)
    for (int a = 1; a <= alpha; ++a)
      os << fmt(r.mu(0)) << "," << fmt(r.mu(1)) << "," << fmt(r.mu(2)) << "," << r.N << "," << fmt(r.b1) << ","
         << fmt(r.b2) << "," << a << "," << fmt(r.Db_rel[a - 1][0]) << "," << fmt(r.Db_rel[a - 1][1]) << ","
         << fmt(r.DP_op[a - 1][0]) << "," << fmt(r.DP_op[a - 1][1]) << "," << (a == 1 ? "1e-4" : "1e-3") << "\n";
  os << "# class " << to_string(ker.cls) << ", kappa_b " << fmt(pr.kappa_b) << ", kappa_P " << fmt(pr.kappa_P)
     << ", skipped " << pr.skipped << "\n";
  return {os.str()};
}

// ---- laguerre ----

Result laguerre_table(Run& run, const std::string& ks, double lambda, int m, double zmax, int points) {
  const auto k = parse_int_list(ks);
  if (points < 2 || points > 100000) throw ValidationError("--points must be in 2..100000");
  if (!(zmax > 0.0)) throw ValidationError("--zmax must be positive");
  std::ostringstream os;
  std::string head = "z";
  for (int kk : k) head += ",phi_" + std::to_string(kk);
  os << csv_head(run, head + ",error");
  for (int i = 0; i < points; ++i) {
    const double z = zmax * i / (points - 1);
    os << fmt(z);
    for (int kk : k) os << "," << fmt(phi_radial(kk, lambda, m, z * z));
    os << ",exact\n";
  }
  return {os.str()};
}

// ---- multiplier ----

Result multiplier_norms(Run& run, const std::string& expr, double s, double M) {
  SampledMultiplier F = use_mult(run, expr);
  if (!(M > 0.0)) throw ValidationError("--M must be positive");
  auto sob = sobolev_norm(F, s, false);
  std::vector<double> tg;
  for (int e = -8; e <= 8; ++e) tg.push_back(std::ldexp(1.0, e));
  auto sl = sloc_norm(F, s, tg, false);
  json j = {{"multiplier", F.spec},
            {"s", s},
            {"M", M},
            {"sup", F.sup_abs()},
            {"l2", l2_norm(F)},
            {"sobolev", {{"value", sob.value}, {"tail_fraction", sob.tail_fraction}, {"flagged", sob.flagged}}},
            {"sloc",
             {{"value", sl.value}, {"tail_fraction", sl.tail_fraction}, {"flagged", sl.flagged}, {"argmax_t", sl.argmax_t},
              {"t_grid", "2^-8..2^8"}, {"note", "lower bound: max over the t grid"}}},
            {"cowling_sikora", {{"value", cowling_sikora_norm(F, M)}, {"note", "lower bound: sampled sup per cell"}}}};
  Result r{dump(j, run)};
  if (sob.flagged || sl.flagged) {
    r.flagged = true;
    r.flag_reason = "Sobolev tail above " + fmt(kSobolevTailTol) + " (multiplier not smooth enough at this s)";
  }
  return r;
}

// ---- kernel ----

Result kernel_eval(Run& run, const std::string& path, const std::string& expr, const std::string& ell_s,
                   const std::string& point_s) {
  GroupSpec g = use_group(run, path);
  SampledMultiplier F = use_mult(run, expr);
  const auto pt = parse_double_list(point_s);
  if (static_cast<int>(pt.size()) != g.d1 + g.d2)
    throw ValidationError("--point needs d1 + d2 = " + std::to_string(g.d1 + g.d2) + " entries");
  Point p{Eigen::Map<const Eigen::VectorXd>(pt.data(), g.d1), Eigen::Map<const Eigen::VectorXd>(pt.data() + g.d1, g.d2)};
  const auto ell = parse_ell(ell_s);
  auto r = eval_kernel(g, F, ell, p, run.quad, run.pfor);
  json j = {{"point", pt},
            {"ell", ell ? json(*ell) : json("none")},
            {"value", {{"re", r.value.real()}, {"im", r.value.imag()}}},
            {"k_terms", r.k_terms},
            {"quad_error_est", finite_or_null(r.quad_error_est)},
            {"abs_error_est", r.abs_error_est}};
  return {dump(j, run)};
}

Result kernel_mass(Run& run, const std::string& path, const std::string& expr, const std::string& alphas_s,
                   const std::string& ell_s) {
  GroupSpec g = use_group(run, path);
  SampledMultiplier F = use_mult(run, expr);
  const auto alphas = parse_int_list(alphas_s);
  auto [lo, hi] = parse_int_range(ell_s);
  std::ostringstream os;
  os << csv_head(run, "ell,alpha,mass,mass_rel_err,k_terms");
  Result res;
  for (int a : alphas)
    for (int l = lo; l <= hi; ++l) {
      auto m = weighted_l2_mass_first_layer(g, F, l, a, run.quad, run.pfor);
      os << l << "," << a << "," << fmt(m.value) << "," << fmt(m.quad_error_est) << "," << m.k_terms << "\n";
      if (m.quad_error_est > run.quad.max_rel_error && m.value != 0.0) res.flagged = true;
    }
  res.text = os.str();
  if (res.flagged) res.flag_reason = "a mass exceeds the quadrature error threshold";
  return res;
}

// ---- plancherel ----

json report_json(const ScanReport& r) {
  return {{"alpha", r.alpha},
          {"fitted_slope", finite_or_null(r.fitted_slope)},
          {"slope_target", r.slope_target},
          {"residual", finite_or_null(r.residual)},
          {"implied_constant", finite_or_null(r.implied_constant)},
          {"max_quad_error", r.max_quad_error},
          {"fd_unstable", r.fd_unstable},
          {"fd_change", r.fd_change}};
}

struct ScanOut {
  Result csv;
  json summary;
};

ScanOut scan_output(Run& run, const std::vector<ScanReport>& reps, const std::string& layer) {
  ScanOut o;
  std::ostringstream os;
  os << csv_head(run, "ell,alpha,mass,mass_rel_err,model,ratio,ratio_rel_err");
  json arr = json::array();
  for (const auto& r : reps) {
    for (const auto& row : r.rows)
      os << row.ell << "," << row.alpha << "," << fmt(row.mass) << "," << fmt(row.quad_error_est) << ","
         << fmt(row.rhs_model) << "," << fmt(row.rhs_model > 0 ? row.mass / row.rhs_model : NAN) << ","
         << fmt(row.quad_error_est) << "\n";
    arr.push_back(report_json(r));
    if (r.max_quad_error > run.quad.max_rel_error) {
      o.csv.flagged = true;
      o.csv.flag_reason = "quadrature error above threshold";
    }
    if (r.fd_unstable) {
      o.csv.flagged = true;
      o.csv.flag_reason = "finite-difference step halving moved a mass by more than 5%";
    }
  }
  o.csv.text = os.str();
  o.summary = {{"layer", layer}, {"reports", arr}, {"manifest_id", run.manifest.id()}};
  return o;
}

Result restriction_output(Run& run, const std::vector<RestrictionRow>& rows, const Rational& p) {
  std::ostringstream os;
  os << csv_head(run, "ell,p,lower_bound,lower_bound_rel_err,best_s,best_tau,rhs,ratio,flagged");
  Result res;
  for (const auto& r : rows) {
    os << r.ell << "," << p.str() << "," << fmt(r.lower_bound) << "," << fmt(r.quad_error_est) << "," << fmt(r.best.s)
       << "," << fmt(r.best.tau) << "," << fmt(r.rhs) << "," << fmt(r.ratio) << "," << (r.flagged ? 1 : 0) << "\n";
    if (r.flagged) {
      res.flagged = true;
      res.flag_reason = "restriction probe quadrature error above threshold";
    }
  }
  res.text = os.str();
  return res;
}

// ---- oracle ----

Result oracle_compare(Run& run, const std::string& levels_s, double box, const std::string& expr, int degree,
                      bool strict) {
  SampledMultiplier F = use_mult(run, expr);
  run.manifest.group_hash = hex64(fnv1a(group_to_json(heisenberg(1)).dump()));
  std::vector<std::pair<int, double>> levels;
  for (int n : parse_int_list(levels_s)) levels.push_back({n, box});
  auto cmp = kernel_oracle_compare(F, levels, degree, strict, run.quad, run.pfor);
  std::ostringstream os;
  os << csv_head(run, "n,B,h,degree,rel_error,cheb_tail,lambda_max,box_mass_fraction");
  for (const auto& l : cmp.levels)
    os << l.n << "," << fmt(l.B) << "," << fmt(l.h) << "," << l.degree << "," << fmt(l.rel_error) << ","
       << fmt(l.cheb_tail) << "," << fmt(l.lambda_max) << "," << fmt(l.box_mass_fraction) << "\n";
  os << "# monotone " << (cmp.monotone ? "yes" : "no") << ", box mass check " << (cmp.box_ok ? "ok" : "failed") << "\n";
  Result r{os.str()};
  if (!cmp.monotone || !cmp.box_ok) {
    r.flagged = true;
    r.flag_reason = !cmp.monotone ? "oracle errors do not decrease strictly"
                                  : "more than 1e-4 of the kernel mass lies outside the box";
  }
  return r;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral multipliers on two-step groups: kernels, weighted Plancherel scans, numerology", "metivier-lab"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Common c;
  app.add_option("--threads", c.threads, "worker threads (default: METIVIER_LAB_THREADS, else 1)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", c.seed, "seed for the sphere samplers");
  app.add_option("--out", c.out, "output file (default stdout); a manifest is written next to it");
  app.add_option("--manifest", c.manifest_path, "write the run manifest here");
  app.add_option("--quad", c.quad, "quadrature: default, or radial=,angular=,xradial=,kmax=,kcap=,maxrel=,abstol=,tail=");

  Run rn;
  std::function<Result()> action;
  std::string summary_path;
  std::function<void()> after;  // extra outputs (scan summaries)

  auto leaf = [&](CLI::App* parent, const char* name, const char* help) {
    auto* s = parent->add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  // group
  std::string group_path, a_path, builtin;
  int samples = 512;
  auto* grp = app.add_subcommand("group", "group specs: checks and builtins");
  grp->require_subcommand(1)->fallthrough();
  auto* gshow = leaf(grp, "show", "Metivier and Heisenberg-type checks");
  gshow->add_option("--group", group_path, "group JSON")->required();
  gshow->add_option("--samples", samples, "sphere samples for the Metivier check");
  gshow->callback([&] { action = [&] { return group_show(rn, group_path, samples); }; });
  auto* gbuilt = leaf(grp, "builtin", "emit a builtin group as JSON");
  gbuilt->add_option("--name", builtin, "heisenberg:<n> or metivier43")->required();
  gbuilt->add_option("--A", a_path, "3x3 matrix JSON for metivier43");
  gbuilt->callback([&] { action = [&] { return group_builtin(rn, builtin, a_path); }; });

  // numerology
  int d1_max = 16, d1 = 0, d2 = 0;
  std::string format = "md";
  auto* num = app.add_subcommand("numerology", "Radon-Hurwitz numbers and thresholds (exact)");
  num->require_subcommand(1)->fallthrough();
  auto* ntab = leaf(num, "table", "all admissible pairs up to d1-max");
  ntab->add_option("--d1-max", d1_max);
  ntab->add_option("--format", format, "md or csv");
  ntab->callback([&] { action = [&] { return numerology_table(rn, d1_max, format); }; });
  auto* nthr = leaf(num, "thresholds", "thresholds for one pair");
  nthr->add_option("--d1", d1)->required();
  nthr->add_option("--d2", d2)->required();
  nthr->callback([&] { action = [&] { return numerology_thresholds(rn, d1, d2); }; });

  // spectral
  std::string mu_s;
  int alpha1 = 1;
  auto* spec = app.add_subcommand("spectral", "decompositions of J_mu");
  spec->require_subcommand(1)->fallthrough();
  auto* sdec = leaf(spec, "decompose", "spectral decomposition at one mu");
  sdec->add_option("--group", group_path)->required();
  sdec->add_option("--mu", mu_s, "comma-separated, d2 entries")->required();
  sdec->callback([&] { action = [&] { return spectral_decompose(rn, group_path, mu_s); }; });
  auto* sprobe = leaf(spec, "probe-bounds", "mu-derivative bounds on the (4,3) family");
  sprobe->add_option("--A", a_path, "3x3 matrix JSON")->required();
  sprobe->add_option("--alpha", alpha1, "1 or 2");
  sprobe->add_option("--samples", samples);
  sprobe->callback([&] { action = [&] { return spectral_probe(rn, a_path, alpha1, samples); }; });

  // laguerre
  std::string ks = "0..4";
  double lambda = 1.0, zmax = 6.0;
  int m = 1, points = 121;
  auto* lag = app.add_subcommand("laguerre", "Laguerre function tables");
  lag->require_subcommand(1)->fallthrough();
  auto* ltab = leaf(lag, "table", "phi_k^(lambda,m) against |z|");
  ltab->add_option("--k", ks, "degrees, a..b or list");
  ltab->add_option("--lambda", lambda);
  ltab->add_option("--m", m);
  ltab->add_option("--zmax", zmax);
  ltab->add_option("--points", points);
  ltab->callback([&] { action = [&] { return laguerre_table(rn, ks, lambda, m, zmax, points); }; });

  // multiplier
  std::string mult;
  double s = 1.0, M = 8.0;
  auto* mul = app.add_subcommand("multiplier", "multiplier norms");
  mul->require_subcommand(1)->fallthrough();
  auto* mnorm = leaf(mul, "norms", "L2, Sobolev, sloc and Cowling-Sikora norms");
  mnorm->add_option("--spec,--mult", mult, "br:delta=<d>,t=<t> | bump:<a>,<b> | file:<path>")->required();
  mnorm->add_option("--s", s);
  mnorm->add_option("--M", M);
  mnorm->callback([&] { action = [&] { return multiplier_norms(rn, mult, s, M); }; });

  // kernel
  std::string ell_s = "none", point_s, alphas_s = "0", ell_range = "0..4";
  auto* ker = app.add_subcommand("kernel", "convolution kernels of F(L) chi(2^ell U)");
  ker->require_subcommand(1)->fallthrough();
  auto* keval = leaf(ker, "eval", "kernel at one point");
  keval->add_option("--group", group_path)->required();
  keval->add_option("--mult", mult)->required();
  keval->add_option("--ell", ell_s, "integer or none");
  keval->add_option("--point", point_s, "x then u, comma-separated")->required();
  keval->callback([&] { action = [&] { return kernel_eval(rn, group_path, mult, ell_s, point_s); }; });
  auto* kmass = leaf(ker, "mass", "weighted first-layer masses");
  kmass->add_option("--group", group_path)->required();
  kmass->add_option("--mult", mult)->required();
  kmass->add_option("--alpha", alphas_s);
  kmass->add_option("--ell", ell_range);
  kmass->callback([&] { action = [&] { return kernel_mass(rn, group_path, mult, alphas_s, ell_range); }; });

  // plancherel
  std::string p_s = "1";
  double fd_step = 1e-4;
  auto* pl = app.add_subcommand("plancherel", "weighted Plancherel scans");
  pl->require_subcommand(1)->fallthrough();
  auto* pscan = leaf(pl, "scan", "first-layer scan over ell and alpha");
  pscan->add_option("--group", group_path)->required();
  pscan->add_option("--mult", mult)->required();
  pscan->add_option("--alpha", alphas_s);
  pscan->add_option("--ell", ell_range);
  pscan->add_option("--summary", summary_path, "JSON summary (default: next to --out, else stderr)");
  pscan->callback([&] {
    action = [&] {
      GroupSpec g = use_group(rn, group_path);
      SampledMultiplier F = use_mult(rn, mult);
      auto reps = first_layer_scan(g, F, parse_int_list(alphas_s), parse_int_range(ell_range), rn.quad, rn.pfor);
      auto o = scan_output(rn, reps, "first");
      after = [&, summary = o.summary] {
        const std::string path = !summary_path.empty() ? summary_path : (!c.out.empty() ? c.out + ".summary.json" : "");
        if (path.empty()) err << summary.dump(2) << "\n";
        else write_text(path, summary.dump(2) + "\n");
      };
      return o.csv;
    };
  });
  auto* psec = leaf(pl, "second-layer", "second-layer scan on the (4,3) family");
  psec->add_option("--A", a_path, "3x3 matrix JSON")->required();
  psec->add_option("--mult", mult)->required();
  psec->add_option("--alpha", alphas_s, "0 and/or 1");
  psec->add_option("--ell", ell_range);
  psec->add_option("--fd-step", fd_step);
  psec->add_option("--summary", summary_path);
  psec->callback([&] {
    action = [&] {
      const Eigen::Matrix3d A = load_matrix3(a_path);
      rn.manifest.group_hash = hex64(fnv1a(group_to_json(metivier_4_3(A)).dump()));
      SampledMultiplier F = use_mult(rn, mult);
      std::vector<ScanReport> reps;
      for (int a : parse_int_list(alphas_s))
        reps.push_back(second_layer_scan_43(A, F, a, parse_int_range(ell_range), rn.quad, fd_step, rn.pfor));
      auto o = scan_output(rn, reps, "second");
      after = [&, summary = o.summary] {
        const std::string path = !summary_path.empty() ? summary_path : (!c.out.empty() ? c.out + ".summary.json" : "");
        if (path.empty()) err << summary.dump(2) << "\n";
        else write_text(path, summary.dump(2) + "\n");
      };
      return o.csv;
    };
  });
  auto* prest = leaf(pl, "restriction", "restriction-type probe with Gaussian trials (H-type groups)");
  prest->add_option("--group", group_path)->required();
  prest->add_option("--mult", mult)->required();
  prest->add_option("--p", p_s, "rational in [1, 2]");
  prest->add_option("--ell", ell_range);
  prest->callback([&] {
    action = [&] {
      GroupSpec g = use_group(rn, group_path);
      SampledMultiplier F = use_mult(rn, mult);
      const Rational p = parse_rational(p_s);
      return restriction_output(
          rn, restriction_scaling_probe(g, F, p, parse_int_range(ell_range), default_gaussian_trials(), rn.quad), p);
    };
  });

  // oracle
  std::string levels_s = "12,16,20";
  double box = 6.0;
  int degree = 256;
  bool strict = false;
  auto* orc = app.add_subcommand("oracle", "discrete sub-Laplacian on H1 as an independent check");
  orc->require_subcommand(1)->fallthrough();
  auto* ocmp = leaf(orc, "compare", "F(L_h) delta against the kernel");
  ocmp->add_option("--levels", levels_s, "grid points per axis");
  ocmp->add_option("--box", box, "half-width B");
  ocmp->add_option("--mult", mult)->required();
  ocmp->add_option("--degree", degree, "starting Chebyshev degree");
  ocmp->add_flag("--strict", strict, "box-mass check failure is an error (exit 2) instead of a flag (exit 3)");
  ocmp->callback([&] { action = [&] { return oracle_compare(rn, levels_s, box, mult, degree, strict); }; });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 2;
  }
  if (!action) {
    err << app.help();
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  rn.manifest.command_line = join_args(args, false);
  rn.manifest.canonical_command = join_args(args, true);
  rn.manifest.seed = c.seed;
  try {
    rn.quad = parse_quadrature(c.quad);
    rn.manifest.quadrature = quadrature_to_json(rn.quad);
    rn.manifest.threads = resolve_thread_count(c.threads);
    std::unique_ptr<WorkerPool> pool;
    if (rn.manifest.threads > 1) {
      pool = std::make_unique<WorkerPool>(rn.manifest.threads);
      rn.pfor = pool->as_parallel_for();
    }
    Result r = action();
    if (c.out.empty()) out << r.text;
    else write_text(c.out, r.text);
    if (after) after();
    rn.manifest.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json mj = rn.manifest.to_json();
    mj["id"] = rn.manifest.id();
    if (!c.manifest_path.empty()) write_text(c.manifest_path, mj.dump(2) + "\n");
    else if (!c.out.empty()) write_text(c.out + ".manifest.json", mj.dump(2) + "\n");
    if (r.flagged) {
      err << "flagged: " << r.flag_reason << "\n";
      return 3;
    }
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace metivier::cli
