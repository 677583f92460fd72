#include "metivier/multiplier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "metivier/errors.hpp"

namespace metivier {

namespace {

constexpr double kStep = 1.0 / 1024.0;
constexpr std::size_t kMaxNodes = std::size_t{1} << 24;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t next_pow2(std::size_t v) { return std::bit_ceil(std::max<std::size_t>(v, 1)); }

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// Unnormalized DFT of `in`; sign = FFTW_FORWARD or FFTW_BACKWARD.
std::vector<std::complex<double>> dft(std::vector<std::complex<double>>& in, int sign) {
  std::vector<std::complex<double>> out(in.size());
  auto* pi = reinterpret_cast<fftw_complex*>(in.data());
  auto* po = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(in.size()), pi, po, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw NumericalError("fftw: plan creation failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

// Zero-padded periodic layout used for all transforms. Even multipliers are
// mirrored around index 0 so their transform is exactly even.
std::vector<std::complex<double>> padded_layout(const SampledMultiplier& F) {
  const std::size_t n = F.grid.n;
  if (F.parity == Parity::Even) {
    const std::size_t P = 8 * n;
    std::vector<std::complex<double>> a(P, 0.0);
    for (std::size_t m = 0; m < n; ++m) a[m] = F.values[m];
    for (std::size_t m = 1; m < n; ++m) a[P - m] = F.values[m];
    return a;
  }
  std::vector<std::complex<double>> a(4 * n, 0.0);
  std::copy(F.values.begin(), F.values.end(), a.begin());
  return a;
}

double bin_frequency(std::size_t k, std::size_t P, double step) {
  const double ks = k < P / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(P);
  return 2.0 * std::numbers::pi * ks / (static_cast<double>(P) * step);
}

void check_grid(const Grid& g) {
  if (g.n < 4 || !std::has_single_bit(g.n)) throw ValidationError("multiplier grid: node count must be a power of two >= 4");
  if (!(g.step > 0.0) || !std::isfinite(g.lo)) throw ValidationError("multiplier grid: step must be positive");
  if (g.n > kMaxNodes) throw ValidationError("multiplier grid: more than 2^24 nodes requested");
}

double parse_number(const std::string& expr, std::size_t pos, std::size_t len) {
  const std::string tok = expr.substr(pos, len);
  if (tok.empty())
    throw ValidationError("multiplier expression '" + expr + "': missing number at column " + std::to_string(pos + 1));
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || !std::isfinite(v))
    throw ValidationError("multiplier expression '" + expr + "': bad number '" + tok + "' at column " +
                          std::to_string(pos + 1));
  return v;
}

SampledMultiplier load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("file multiplier: cannot open '" + path + "'");
  std::vector<double> lam;
  std::vector<std::complex<double>> val;
  Parity parity = Parity::None;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') {
      if (line.find("parity") != std::string::npos && line.find("even") != std::string::npos) parity = Parity::Even;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    double v[3] = {0.0, 0.0, 0.0};
    bool numeric = cols.size() == 2 || cols.size() == 3;
    for (std::size_t i = 0; numeric && i < cols.size(); ++i) {
      char* end = nullptr;
      v[i] = std::strtod(cols[i].c_str(), &end);
      while (end && (*end == ' ' || *end == '\r' || *end == '\t')) ++end;
      numeric = end && *end == '\0' && end != cols[i].c_str() && std::isfinite(v[i]);
    }
    if (!numeric) {
      if (lam.empty()) continue;  // header
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected lambda,re[,im]");
    }
    lam.push_back(v[0]);
    val.emplace_back(v[1], v[2]);
  }
  if (lam.size() < 4 || !std::has_single_bit(lam.size()))
    throw ValidationError(path + ": row count must be a power of two >= 4, got " + std::to_string(lam.size()));
  Grid g{lam[0], (lam.back() - lam[0]) / static_cast<double>(lam.size() - 1), lam.size()};
  for (std::size_t i = 0; i < lam.size(); ++i)
    if (std::abs(lam[i] - (g.lo + g.step * static_cast<double>(i))) > 1e-6 * g.step)
      throw ValidationError(path + ": lambda column is not uniform at row " + std::to_string(i + 1));
  if (parity == Parity::Even && g.lo != 0.0) throw ValidationError(path + ": even parity needs lambda starting at 0");
  check_grid(g);
  SampledMultiplier F;
  F.grid = g;
  F.values = std::move(val);
  F.parity = parity;
  F.spec = "file:" + path;
  auto [lo, hi] = F.nonzero_hull();
  F.supp_lo = lo;
  F.supp_hi = hi;
  return F;
}

}  // namespace

Grid default_grid(Parity parity) {
  if (parity == Parity::Even) return Grid{0.0, kStep, std::size_t{1} << 13};
  return Grid{-8.0, kStep, std::size_t{1} << 14};
}

Grid grid_covering(Parity parity, double need_hi) {
  if (!(need_hi >= 0.0) || !std::isfinite(need_hi)) throw ValidationError("grid_covering: bad extent");
  const std::size_t half = next_pow2(static_cast<std::size_t>(std::ceil(need_hi / kStep)) + 8);
  if (parity == Parity::Even) {
    Grid g{0.0, kStep, std::max<std::size_t>(half, std::size_t{1} << 13)};
    check_grid(g);
    return g;
  }
  const std::size_t n = std::max<std::size_t>(2 * half, std::size_t{1} << 14);
  Grid g{-kStep * static_cast<double>(n / 2), kStep, n};
  check_grid(g);
  return g;
}

std::complex<double> SampledMultiplier::operator()(double lambda) const {
  if (parity == Parity::Even) lambda = std::abs(lambda);
  const double s = (lambda - grid.lo) / grid.step;
  if (!(s > -2.0) || s >= static_cast<double>(grid.n) + 1.0) return 0.0;
  const double fl = std::floor(s);
  const long i = static_cast<long>(fl);
  const double u = s - fl;
  auto node = [&](long j) -> std::complex<double> {
    if (parity == Parity::Even && j < 0) j = -j;
    if (j < 0 || j >= static_cast<long>(grid.n)) return 0.0;
    return values[static_cast<std::size_t>(j)];
  };
  if (u == 0.0) return node(i);
  const double w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
  const double w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
  const double w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
  const double w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
  return w0 * node(i - 1) + w1 * node(i) + w2 * node(i + 1) + w3 * node(i + 2);
}

std::pair<double, double> SampledMultiplier::nonzero_hull() const {
  std::size_t first = grid.n, last = 0;
  for (std::size_t i = 0; i < grid.n; ++i)
    if (values[i] != 0.0) {
      first = std::min(first, i);
      last = i;
    }
  if (first == grid.n) return {0.0, 0.0};
  double lo = grid.lo + grid.step * (static_cast<double>(first) - 2.0);
  const double hi = grid.lo + grid.step * (static_cast<double>(last) + 2.0);
  if (parity == Parity::Even) lo = std::max(lo, 0.0);
  if (parity == Parity::Even && first < 2) lo = 0.0;
  return {lo, hi};
}

double SampledMultiplier::sup_abs() const {
  double m = 0.0;
  for (auto& v : values) m = std::max(m, std::abs(v));
  return m;
}

bool SampledMultiplier::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](auto v) { return v == 0.0; });
}

SampledMultiplier sample_function(const std::function<std::complex<double>(double)>& f, const Grid& grid,
                                  Parity parity, double supp_lo, double supp_hi, std::string label) {
  check_grid(grid);
  if (parity == Parity::Even && grid.lo != 0.0) throw ValidationError("even multipliers are stored from lambda = 0");
  SampledMultiplier F;
  F.grid = grid;
  F.parity = parity;
  F.supp_lo = supp_lo;
  F.supp_hi = supp_hi;
  F.spec = std::move(label);
  F.values.resize(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    F.values[i] = f(grid.lo + grid.step * static_cast<double>(i));
    if (!std::isfinite(F.values[i].real()) || !std::isfinite(F.values[i].imag()))
      throw NumericalError("multiplier '" + F.spec + "': non-finite sample");
  }
  return F;
}

SampledMultiplier bochner_riesz(double delta, double t) {
  if (!(t > 0.0)) throw ValidationError("bochner_riesz: t must be > 0");
  return bochner_riesz(delta, t, grid_covering(Parity::None, std::max(8.0, 1.0 / t)));
}

SampledMultiplier bochner_riesz(double delta, double t, const Grid& grid) {
  if (!(t > 0.0)) throw ValidationError("bochner_riesz: t must be > 0");
  if (!(delta >= 0.0)) throw ValidationError("bochner_riesz: delta must be >= 0");
  auto f = [=](double lam) -> std::complex<double> {
    if (lam < 0.0) return 0.0;
    const double b = 1.0 - t * lam;
    return b < 0.0 ? 0.0 : std::pow(b, delta);
  };
  return sample_function(f, grid, Parity::None, 0.0, 1.0 / t, "br:delta=" + fmt(delta) + ",t=" + fmt(t));
}

SampledMultiplier bump(double a, double b) {
  if (!(a >= 0.0) || !(b > a) || !std::isfinite(b)) throw ValidationError("bump: need 0 <= a < b");
  auto f = [=](double lam) -> std::complex<double> {
    const double s = 0.5 + 1.5 * (std::abs(lam) - a) / (b - a);
    if (s <= 0.5 || s >= 2.0) return 0.0;
    return std::exp(16.0 / 9.0 - 1.0 / ((s - 0.5) * (2.0 - s)));
  };
  return sample_function(f, grid_covering(Parity::Even, b), Parity::Even, a, b, "bump:" + fmt(a) + "," + fmt(b));
}

double psi0(double t) {
  if (t <= 0.5 || t >= 2.0) return 0.0;
  return std::exp(-1.0 / ((t - 0.5) * (2.0 - t)));
}

double dyadic_chi_value(int iota, double lambda) {
  const double t = std::ldexp(std::abs(lambda), -iota);
  const double num = psi0(t);
  if (num == 0.0) return 0.0;
  const int e = std::ilogb(t);
  double den = 0.0;
  for (int j = e - 2; j <= e + 2; ++j) den += psi0(std::ldexp(t, -j));
  return num / den;
}

SampledMultiplier dyadic_chi(int iota) {
  return dyadic_chi(iota, grid_covering(Parity::Even, std::ldexp(2.0, iota)));
}

SampledMultiplier dyadic_chi(int iota, const Grid& grid) {
  return sample_function([iota](double lam) -> std::complex<double> { return dyadic_chi_value(iota, lam); }, grid,
                         Parity::Even, std::ldexp(0.5, iota), std::ldexp(2.0, iota),
                         "chi:" + std::to_string(iota));
}

SampledMultiplier dilate_multiplier(const SampledMultiplier& F, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("dilate_multiplier: scale must be > 0");
  SampledMultiplier G = F;
  G.grid.lo = F.grid.lo / s;
  G.grid.step = F.grid.step / s;
  G.supp_lo = F.supp_lo / s;
  G.supp_hi = F.supp_hi / s;
  G.spec = "dilate(" + F.spec + "," + fmt(s) + ")";
  return G;
}

double l2_norm(const SampledMultiplier& F) {
  double s = 0.0;
  for (std::size_t i = 0; i < F.grid.n; ++i) {
    const double w = (F.parity == Parity::Even && i > 0) ? 2.0 : 1.0;
    s += w * std::norm(F.values[i]);
  }
  return std::sqrt(s * F.grid.step);
}

std::pair<int, int> freq_iota_range(const SampledMultiplier& F) {
  const std::size_t P = F.parity == Parity::Even ? 8 * F.grid.n : 4 * F.grid.n;
  const double dtau = 2.0 * std::numbers::pi / (static_cast<double>(P) * F.grid.step);
  const double tau_max = std::numbers::pi / F.grid.step;
  return {static_cast<int>(std::floor(std::log2(0.5 * dtau))) - 1, static_cast<int>(std::ceil(std::log2(tau_max))) + 1};
}

SampledMultiplier freq_localize(const SampledMultiplier& F, int iota) {
  if (F.parity != Parity::Even) throw ValidationError("freq_localize: multiplier must have even parity");
  auto a = padded_layout(F);
  const std::size_t P = a.size();
  auto X = dft(a, FFTW_FORWARD);
  const double dtau = 2.0 * std::numbers::pi / (static_cast<double>(P) * F.grid.step);
  for (std::size_t k = 0; k < P; ++k) {
    const double tau = std::max(std::abs(bin_frequency(k, P, F.grid.step)), 0.5 * dtau);
    X[k] *= dyadic_chi_value(iota, tau) / static_cast<double>(P);
  }
  auto y = dft(X, FFTW_BACKWARD);
  SampledMultiplier G = F;
  for (std::size_t m = 0; m < F.grid.n; ++m) G.values[m] = y[m];
  G.spec = "freq(" + F.spec + "," + std::to_string(iota) + ")";
  auto [lo, hi] = G.nonzero_hull();
  G.supp_lo = lo;
  G.supp_hi = hi;
  return G;
}

SobolevResult sobolev_norm(const SampledMultiplier& F, double s, bool strict) {
  if (!(s >= 0.0)) throw ValidationError("sobolev_norm: s must be >= 0");
  auto a = padded_layout(F);
  const std::size_t P = a.size();
  auto X = dft(a, FFTW_FORWARD);
  const double tau_max = std::numbers::pi / F.grid.step;
  double total = 0.0, top = 0.0;
  for (std::size_t k = 0; k < P; ++k) {
    const double tau = bin_frequency(k, P, F.grid.step);
    const double e = std::pow(1.0 + tau * tau, s) * std::norm(X[k]);
    total += e;
    if (std::abs(tau) >= 0.5 * tau_max) top += e;
  }
  SobolevResult r;
  r.value = std::sqrt(total * F.grid.step / static_cast<double>(P));
  r.tail_fraction = total > 0.0 ? top / total : 0.0;
  r.flagged = r.tail_fraction > kSobolevTailTol;
  if (strict && r.flagged)
    throw NumericalError("sobolev_norm: spectral tail fraction " + fmt(r.tail_fraction) + " exceeds " +
                         fmt(kSobolevTailTol) + " for '" + F.spec + "' at s=" + fmt(s));
  return r;
}

SobolevResult sloc_norm(const SampledMultiplier& F, double s, const std::vector<double>& t_grid, bool strict) {
  if (t_grid.empty()) throw ValidationError("sloc_norm: empty t grid");
  SobolevResult best;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw ValidationError("sloc_norm: t values must be > 0");
    auto G = sample_function(
        [&](double lam) -> std::complex<double> {
          if (lam <= 0.0) return 0.0;
          const double eta = dyadic_chi_value(0, lam);
          return eta == 0.0 ? std::complex<double>(0.0) : F(t * lam) * eta;
        },
        default_grid(Parity::None), Parity::None, 0.5, 2.0, "sloc");
    auto r = sobolev_norm(G, s, false);
    if (best.argmax_t == 0.0 || r.value > best.value) {
      best.value = r.value;
      best.argmax_t = t;
    }
    best.tail_fraction = std::max(best.tail_fraction, r.tail_fraction);
    best.flagged = best.flagged || r.flagged;
  }
  if (strict && best.flagged)
    throw NumericalError("sloc_norm: spectral tail fraction " + fmt(best.tail_fraction) + " exceeds " +
                         fmt(kSobolevTailTol) + " for '" + F.spec + "'");
  return best;
}

double cowling_sikora_norm(const SampledMultiplier& F, double M, int samples_per_cell) {
  if (!(M > 0.0) || !std::isfinite(M)) throw ValidationError("cowling_sikora_norm: M must be > 0");
  if (samples_per_cell < 1) throw ValidationError("cowling_sikora_norm: samples_per_cell must be >= 1");
  const Grid& g = F.grid;
  auto node_abs = [&](long j) -> double {
    if (F.parity == Parity::Even && j < 0) j = -j;
    if (j < 0 || j >= static_cast<long>(g.n)) return 0.0;
    return std::abs(F.values[static_cast<std::size_t>(j)]);
  };
  auto linear_abs = [&](double lam) {
    if (F.parity == Parity::Even) lam = std::abs(lam);
    const double s = (lam - g.lo) / g.step;
    const double fl = std::floor(s);
    const long i = static_cast<long>(fl);
    const double u = s - fl;
    return std::abs((1.0 - u) * node_abs(i) + u * node_abs(i + 1));
  };
  std::map<long, double> sup;
  auto visit = [&](double lam, double v) {
    const long K = static_cast<long>(std::floor(lam * M));
    auto& s = sup[K];
    s = std::max(s, v);
  };
  // stored nodes, mirrored for even parity
  long jlo = F.parity == Parity::Even ? -static_cast<long>(g.n) + 1 : 0;
  long first = static_cast<long>(g.n), last = jlo - 1;
  for (long j = jlo; j < static_cast<long>(g.n); ++j) {
    const double v = node_abs(j);
    if (v == 0.0) continue;
    first = std::min(first, j);
    last = j;
    visit(g.lo + g.step * static_cast<double>(j), v);
  }
  if (last < first) return 0.0;
  const double lam_lo = g.lo + g.step * static_cast<double>(first - 1);
  const double lam_hi = g.lo + g.step * static_cast<double>(last + 1);
  const long K0 = static_cast<long>(std::floor(lam_lo * M));
  const long K1 = static_cast<long>(std::floor(lam_hi * M));
  for (long K = K0; K <= K1; ++K)
    for (int i = 0; i < samples_per_cell; ++i) {
      const double lam = (static_cast<double>(K) + static_cast<double>(i) / samples_per_cell) / M;
      const double v = linear_abs(lam);
      if (v > 0.0) visit(lam, v);
    }
  double total = 0.0;
  for (auto& [K, s] : sup) total += s * s;
  return std::sqrt(total / M);
}

SampledMultiplier parse_multiplier(const std::string& expr) {
  const auto colon = expr.find(':');
  if (colon == std::string::npos || colon == 0)
    throw ValidationError("multiplier expression '" + expr + "': expected kind:arguments at column 1");
  const std::string kind = expr.substr(0, colon);
  const std::size_t body = colon + 1;
  if (kind == "file") {
    if (body >= expr.size()) throw ValidationError("multiplier expression '" + expr + "': missing path at column " + std::to_string(body + 1));
    return load_csv(expr.substr(body));
  }
  // split the argument list, remembering columns
  std::vector<std::pair<std::size_t, std::size_t>> args;
  std::size_t p = body;
  while (true) {
    const auto comma = expr.find(',', p);
    const std::size_t end = comma == std::string::npos ? expr.size() : comma;
    args.push_back({p, end - p});
    if (comma == std::string::npos) break;
    p = comma + 1;
  }
  if (kind == "bump") {
    if (args.size() != 2)
      throw ValidationError("multiplier expression '" + expr + "': bump takes two numbers a,b (column " +
                            std::to_string(body + 1) + ")");
    return bump(parse_number(expr, args[0].first, args[0].second), parse_number(expr, args[1].first, args[1].second));
  }
  if (kind == "br") {
    double delta = NAN, t = NAN;
    for (auto [pos, len] : args) {
      const std::string a = expr.substr(pos, len);
      const auto eq = a.find('=');
      if (eq == std::string::npos)
        throw ValidationError("multiplier expression '" + expr + "': expected key=value at column " + std::to_string(pos + 1));
      const std::string key = a.substr(0, eq);
      const double v = parse_number(expr, pos + eq + 1, len - eq - 1);
      if (key == "delta") delta = v;
      else if (key == "t") t = v;
      else throw ValidationError("multiplier expression '" + expr + "': unknown key '" + key + "' at column " + std::to_string(pos + 1));
    }
    if (std::isnan(delta) || std::isnan(t))
      throw ValidationError("multiplier expression '" + expr + "': br needs both delta= and t=");
    return bochner_riesz(delta, t);
  }
  throw ValidationError("multiplier expression '" + expr + "': unknown kind '" + kind + "' at column 1");
}

std::string multiplier_spec(const SampledMultiplier& F) { return F.spec; }

}  // namespace metivier
