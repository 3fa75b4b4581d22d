#include "rwlab/walk.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "rwlab/error.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/potential.hpp"

namespace rwlab {

std::int64_t WalkConfig::default_step_cap(std::int64_t n, int d) {
  const double cap = 1e4 * static_cast<double>(n) * static_cast<double>(n) * d;
  return cap > 4e18 ? std::int64_t{4'000'000'000'000'000'000} : static_cast<std::int64_t>(cap);
}

Stepper::Stepper(int d, double tilt) : d_(d), tilt_(tilt), tilted_(tilt != 0.0) {
  if (d < 1 || d > kMaxDim) throw InvalidArgument("walk dimension out of range");
  if (!std::isfinite(tilt)) throw InvalidArgument("tilt must be finite");
  // cosh(theta) - 1 = 2 sinh^2(theta / 2) keeps log m accurate for small theta.
  const double sh = std::sinh(0.5 * tilt);
  log_mgf_ = std::log1p(2.0 * sh * sh / d);
  const double m = std::exp(log_mgf_);
  p_plus_ = std::exp(tilt) / (2.0 * d * m);
  p_minus_ = std::exp(-tilt) / (2.0 * d * m);
  if (d == 1) p_minus_ = 1.0 - p_plus_;
}

double Stepper::probability(int k) const noexcept {
  if (!tilted_) return 1.0 / (2.0 * d_);
  if (k == 0) return p_plus_;
  if (k == 1) return p_minus_;
  return (1.0 - p_plus_ - p_minus_) / (2.0 * d_ - 2.0);
}

const char* to_string(ExitFlag flag) {
  switch (flag) {
    case ExitFlag::kNone:
      return "none";
    case ExitFlag::kPlane:
      return "plane";
    case ExitFlag::kTube:
      return "tube";
    case ExitFlag::kStepCap:
      return "step_cap";
  }
  return "?";
}

const char* to_string(ReturnMethod method) {
  return method == ReturnMethod::kQuadrature ? "quadrature" : "montecarlo";
}

TrajectorySummary run_to_hyperplane(const WalkConfig& cfg, std::int64_t n, Rng& rng,
                                    const RunOptions& options) {
  if (n < 1) throw InvalidArgument("run_to_hyperplane: n must be >= 1");
  if (options.sigma_radius != 0.0 && options.sigma_radius < 1.0)
    throw InvalidArgument("run_to_hyperplane: sigma radius must be >= 1");
  const Stepper stepper(cfg.d, cfg.tilt);
  const std::int64_t cap = cfg.cap_for(n);
  const int d = cfg.d;
  const double r2 = options.sigma_radius * options.sigma_radius;

  TrajectorySummary out;
  out.plane = n;
  Site x = options.start;
  Site sigma_center = x;
  SiteCounter local;
  if (options.sigma_radius > 0.0) out.sigma_indices.push_back(0);
  if (options.record_path) out.path.push_back(x);

  std::int64_t k = 0;
  for (;; ++k) {
    if (x[0] >= n) {
      out.hit_plane = true;
      out.exit = ExitFlag::kPlane;
      break;
    }
    if (options.tube && !options.tube->contains(x)) {
      out.exit = ExitFlag::kTube;
      break;
    }
    if (k >= cap) {
      out.exit = ExitFlag::kStepCap;
      break;
    }
    if (options.record_local_times) local.increment(x);
    Stepper::apply(x, stepper.draw(rng));
    if (options.record_path) out.path.push_back(x);
    if (r2 > 0.0 && static_cast<double>(dist2(x, sigma_center, d)) >= r2) {
      out.sigma_indices.push_back(k + 1);
      sigma_center = x;
    }
  }
  out.steps = k;
  out.endpoint = x;
  out.log_weight = stepper.log_weight(k, static_cast<std::int64_t>(x[0]) - options.start[0]);
  if (options.record_local_times) {
    out.local_times.reserve(local.size());
    local.for_each([&](const Site& s, std::int64_t c) { out.local_times.emplace_back(s, c); });
    std::sort(out.local_times.begin(), out.local_times.end());
  }
  return out;
}

std::vector<std::int64_t> sigma_times(std::span<const Site> path, int d, double radius) {
  if (!(radius >= 1.0)) throw InvalidArgument("sigma_times: radius eps0*L must be >= 1");
  std::vector<std::int64_t> out;
  if (path.empty()) return out;
  out.push_back(0);
  const double r2 = radius * radius;
  std::size_t center = 0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (static_cast<double>(dist2(path[k], path[center], d)) >= r2) {
      out.push_back(static_cast<std::int64_t>(k));
      center = k;
    }
  }
  return out;
}

namespace {

double green_by_quadrature(int d, double tolerance) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double kSplit = 400.0;
  const auto scaled_i0 = [](double s) {
    return std::exp(-s) * boost::math::cyl_bessel_i(0, s);
  };
  const auto integrand = [&](double s) { return d * std::pow(scaled_i0(s), d); };
  double body = 0.0;
  double left = 0.0;
  for (double right = 0.5; left < kSplit; right = std::min(kSplit, 2.0 * right)) {
    double err = 0.0;
    body += GK::integrate(integrand, left, right, 30, tolerance, &err);
    left = right;
  }
  // e^-s I_0(s) = (2 pi s)^-1/2 sum_k c_k s^-k, c_k = ((2k-1)!!)^2 / (k! 8^k).
  constexpr int kTerms = 7;
  std::array<double, kTerms> c{};
  c[0] = 1.0;
  for (int k = 1; k < kTerms; ++k) c[k] = c[k - 1] * (2.0 * k - 1) * (2.0 * k - 1) / (8.0 * k);
  std::array<double, kTerms> power{};
  power[0] = 1.0;
  for (int m = 0; m < d; ++m) {
    std::array<double, kTerms> next{};
    for (int i = 0; i < kTerms; ++i)
      for (int j = 0; i + j < kTerms; ++j) next[i + j] += power[i] * c[j];
    power = next;
  }
  double tail = 0.0;
  const double half_d = 0.5 * d;
  for (int j = 0; j < kTerms; ++j)
    tail += power[j] * std::pow(kSplit, 1.0 - half_d - j) / (half_d + j - 1.0);
  tail *= d * std::pow(2.0 * std::numbers::pi, -half_d);
  return body + tail;
}

}  // namespace

double expected_late_returns(int d, std::int64_t n) {
  if (d < 3) throw InvalidArgument("expected_late_returns: d must be >= 3");
  // P[X_2m = 0] ~ 2 (d / (4 pi m))^{d/2}; sum over 2m > n.
  const double amp = 2.0 * std::pow(d / (4.0 * std::numbers::pi), 0.5 * d);
  const std::int64_t m0 = n / 2 + 1;
  const std::int64_t explicit_terms = 10'000;
  double s = 0.0;
  for (std::int64_t m = m0; m < m0 + explicit_terms; ++m)
    s += std::pow(static_cast<double>(m), -0.5 * d);
  const double start = static_cast<double>(m0 + explicit_terms) - 0.5;
  s += std::pow(start, 1.0 - 0.5 * d) / (0.5 * d - 1.0);
  return amp * s;
}

LatticeConstants return_probability(int d, ReturnMethod method,
                                    const ReturnProbabilityOptions& options) {
  if (d < 3) throw InvalidArgument("return_probability: d < 3 is recurrent (q_d = 0)");
  if (d > kMaxDim) throw InvalidArgument("return_probability: d exceeds kMaxDim");
  LatticeConstants out;
  out.d = d;
  out.method = method;
  if (method == ReturnMethod::kQuadrature) {
    out.tolerance = options.tolerance;
    out.green_at_origin = green_by_quadrature(d, options.tolerance);
    out.qd = 1.0 / out.green_at_origin;
    return out;
  }
  const std::int64_t steps = options.mc_steps;
  const std::size_t replicas = options.mc_replicas;
  if (steps < 1 || replicas < 2) throw InvalidArgument("return_probability: bad MC sizes");
  const std::uint64_t root = derive_key(options.seed, 0x7164);  // "qd"
  auto escaped = parallel_map<char>(replicas, options.workers, [&](std::size_t r) -> char {
    Rng rng(derive_key(root, r));
    const Stepper stepper(d, 0.0);
    Site x{};
    const Site origin{};
    for (std::int64_t k = 0; k < steps; ++k) {
      Stepper::apply(x, stepper.draw(rng));
      if (x == origin) return 0;
    }
    return 1;
  });
  std::size_t count = 0;
  for (char e : escaped) count += static_cast<std::size_t>(e);
  const double p = static_cast<double>(count) / static_cast<double>(replicas);
  const double late = expected_late_returns(d, steps);
  out.raw_no_return = p;
  out.bias_bound = late;
  out.qd = p - p * p * late;
  out.green_at_origin = 1.0 / out.qd;
  out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(replicas));
  out.mc_steps = steps;
  out.replicas = replicas;
  return out;
}

double escape_probability(int d) {
  static std::mutex mutex;
  static std::map<int, double> memo;
  std::lock_guard lock(mutex);
  auto it = memo.find(d);
  if (it != memo.end()) return it->second;
  const double q = return_probability(d, ReturnMethod::kQuadrature).qd;
  memo.emplace(d, q);
  return q;
}

QdCache QdCache::load(const std::filesystem::path& path) {
  QdCache cache;
  std::ifstream in(path);
  if (!in) return cache;
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw InvalidArgument("qd cache " + path.string() + ": unsupported version header");
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    LatticeConstants c;
    std::string method;
    row >> c.d >> method >> c.tolerance >> c.qd >> c.green_at_origin >> c.std_error >>
        c.bias_bound >> c.mc_steps >> c.replicas;
    if (!row) throw InvalidArgument("qd cache " + path.string() + ": malformed row: " + line);
    c.method = method == "quadrature" ? ReturnMethod::kQuadrature : ReturnMethod::kMonteCarlo;
    cache.entries_.push_back(c);
  }
  return cache;
}

void QdCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write qd cache " + path.string());
  out << kHeader << '\n'
      << "# d method tolerance qd green_at_origin std_error bias_bound mc_steps replicas\n";
  for (const auto& c : entries_) {
    out << c.d << ' ' << to_string(c.method) << ' ' << format_double(c.tolerance) << ' '
        << format_double(c.qd) << ' ' << format_double(c.green_at_origin) << ' '
        << format_double(c.std_error) << ' ' << format_double(c.bias_bound) << ' '
        << c.mc_steps << ' ' << c.replicas << '\n';
  }
}

std::optional<LatticeConstants> QdCache::lookup(int d, ReturnMethod method,
                                                double tolerance) const {
  for (const auto& c : entries_)
    if (c.d == d && c.method == method && c.tolerance == tolerance) return c;
  return std::nullopt;
}

void QdCache::store(const LatticeConstants& constants) {
  for (auto& c : entries_) {
    if (c.d == constants.d && c.method == constants.method &&
        c.tolerance == constants.tolerance) {
      c = constants;
      return;
    }
  }
  entries_.push_back(constants);
}

Estimate hit_before_exit(const Site& x, double r, int d, std::size_t replicas,
                         std::uint64_t seed, unsigned workers) {
  const double x2 = static_cast<double>(norm2(x, d));
  if (!(x2 > 0.0) || !(x2 < r * r))
    throw InvalidArgument("hit_before_exit: requires 0 < |x| < r");
  const double r2 = r * r;
  const std::uint64_t root = derive_key(seed, 0x686974);  // "hit"
  auto hits = parallel_map<char>(replicas, workers, [&](std::size_t i) -> char {
    Rng rng(derive_key(root, i));
    const Stepper stepper(d, 0.0);
    Site s{};
    for (;;) {
      Stepper::apply(s, stepper.draw(rng));
      if (s == x) return 1;
      if (static_cast<double>(norm2(s, d)) > r2) return 0;
    }
  });
  RunningStats stats;
  for (char h : hits) stats.add(h);
  return stats.estimate();
}

double VisitHistogram::survival(std::size_t k) const {
  if (conditioned == 0) return 0.0;
  std::uint64_t tail = 0;
  for (std::size_t j = k; j < counts.size(); ++j) tail += counts[j];
  return static_cast<double>(tail) / static_cast<double>(conditioned);
}

VisitHistogram visit_histogram(const Site& x, double r, int d, std::size_t replicas,
                               std::uint64_t seed, VisitSampling sampling, unsigned workers,
                               std::uint64_t min_samples) {
  if (!(r > 0.0)) throw InvalidArgument("visit_histogram: r must be > 0");
  const double r2 = r * r;
  const bool inside = static_cast<double>(norm2(x, d)) < r2;
  const std::uint64_t root = derive_key(seed, 0x7669736974);  // "visit"
  auto visits = parallel_map<std::uint32_t>(replicas, workers, [&](std::size_t i) {
    Rng rng(derive_key(root, i));
    const Stepper stepper(d, 0.0);
    Site s = sampling == VisitSampling::kRestart ? x : Site{};
    std::uint32_t count = 0;
    while (static_cast<double>(norm2(s, d)) < r2) {
      if (s == x) ++count;
      Stepper::apply(s, stepper.draw(rng));
    }
    return count;
  });
  VisitHistogram out;
  out.walks = replicas;
  out.counts.assign(2, 0);
  RunningStats stats;
  for (auto v : visits) {
    if (v == 0) continue;
    if (v >= out.counts.size()) out.counts.resize(v + 1, 0);
    ++out.counts[v];
    stats.add(v);
  }
  out.conditioned = stats.count();
  out.insufficient = !inside || out.conditioned < min_samples;
  out.mean = out.insufficient ? std::nan("") : stats.mean();
  out.std_error = out.insufficient ? std::nan("") : stats.stderr_of_mean();
  return out;
}

Estimate sum_hit_probabilities(double r, int d, std::size_t replicas, std::uint64_t seed,
                               unsigned workers) {
  if (!(r >= 10.0)) throw InvalidArgument("sum_hit_probabilities: r must be >= 10");
  const double r2 = r * r;
  const std::uint64_t root = derive_key(seed, 0x72616e6765);  // "range"
  auto distinct = parallel_map<double>(replicas, workers, [&](std::size_t i) {
    thread_local SiteCounter seen;
    seen.clear();
    Rng rng(derive_key(root, i));
    const Stepper stepper(d, 0.0);
    Site s{};
    std::size_t count = 0;
    for (;;) {
      Stepper::apply(s, stepper.draw(rng));
      const double n2 = static_cast<double>(norm2(s, d));
      if (n2 > r2) break;
      if (n2 > 0.0 && n2 < r2 && seen.increment(s) == 1) ++count;
    }
    return static_cast<double>(count);
  });
  RunningStats stats;
  for (double v : distinct) stats.add(v);
  return stats.estimate();
}

}  // namespace rwlab
