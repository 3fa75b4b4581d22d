#include "rwlab/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "rwlab/asymptotics.hpp"
#include "rwlab/error.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/stats.hpp"

namespace rwlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log E[exp(-lambda k V)] for integer local times k.
class LogLaplaceTable {
 public:
  // Entries are filled on first use. compute() is pure, so two workers racing
  // on one slot store the same value.
  LogLaplaceTable(const PotentialDistribution& mu, double lambda, std::size_t size)
      : mu_(mu), lambda_(lambda), size_(size), table_(new std::atomic<double>[size]) {
    for (std::size_t k = 0; k < size; ++k)
      table_[k].store(std::numeric_limits<double>::quiet_NaN(), std::memory_order_relaxed);
  }
  double operator()(std::int64_t k) const {
    const auto i = static_cast<std::size_t>(k);
    if (i >= size_) return compute(k);
    double v = table_[i].load(std::memory_order_relaxed);
    if (std::isnan(v)) {
      v = compute(k);
      table_[i].store(v, std::memory_order_relaxed);
    }
    return v;
  }

 private:
  double compute(std::int64_t k) const {
    return std::log(mu_.laplace(lambda_ * static_cast<double>(k)));
  }
  const PotentialDistribution& mu_;
  double lambda_;
  std::size_t size_;
  std::unique_ptr<std::atomic<double>[]> table_;
};

struct ReplicaOutcome {
  // log weight of an arrived walk; -inf when censored.
  double log_z = kNegInf;
  // log weight held at censoring; -inf when arrived.
  double log_censored = kNegInf;
};

PassageCost summarize(std::int64_t n, const std::vector<ReplicaOutcome>& outcomes,
                      const char* what) {
  PassageCost cost;
  cost.n = n;
  cost.replicas = outcomes.size();
  std::vector<double> log_z(outcomes.size());
  double censored = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    log_z[i] = outcomes[i].log_z;
    if (outcomes[i].log_z == kNegInf) {
      ++cost.censored_replicas;
      censored += std::exp(outcomes[i].log_censored);
    }
  }
  if (cost.censored_replicas == cost.replicas)
    throw StatisticalError(std::string(what) + ": all " + std::to_string(cost.replicas) +
                           " replicas censored at n = " + std::to_string(n) +
                           " (raise the step cap or widen the tube)");
  const LogMean m = log_mean_exp(log_z);
  cost.value = std::max(0.0, -m.log_mean);
  cost.std_error = m.rel_stderr;
  cost.censored_mass = censored / static_cast<double>(cost.replicas);
  return cost;
}

void check_common(double lambda, std::int64_t n, const SamplingOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("lambda must be finite and >= 0");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (options.replicas < 2) throw InvalidArgument("need at least 2 replicas");
}

}  // namespace

const char* to_string(FitMethod method) {
  return method == FitMethod::kSlopeFit ? "slopeFit" : "largestN";
}

double default_tilt(const PotentialDistribution& mu, double lambda, int d) {
  if (!(lambda > 0.0)) return 0.0;
  double beta = 0.0;
  if (mu.is_point_mass())
    beta = lambda * mu.param_a();
  else if (d < 3)
    beta = -std::log(mu.laplace(lambda));
  else
    beta = I_integral(mu, lambda, escape_probability(d));
  return constant_potential_alpha(d, beta);
}

WalkConfig with_default_tilt(WalkConfig cfg, const PotentialDistribution& mu, double lambda) {
  cfg.tilt = default_tilt(mu, lambda, cfg.d);
  return cfg;
}

PassageCost annealed_cost(const PotentialDistribution& mu, double lambda, std::int64_t n,
                          const WalkConfig& cfg, const SamplingOptions& options) {
  check_common(lambda, n, options);
  if (lambda == 0.0) {
    PassageCost zero;
    zero.n = n;
    zero.replicas = options.replicas;
    return zero;
  }
  const Stepper stepper(cfg.d, cfg.tilt);
  const std::int64_t cap = cfg.cap_for(n);
  const LogLaplaceTable table(mu, lambda, 512);
  const std::uint64_t root = derive_key(options.seed, static_cast<std::uint64_t>(n));
  auto outcomes = parallel_map<ReplicaOutcome>(options.replicas, options.workers, [&](std::size_t i) {
    thread_local SiteCounter local;
    local.clear();
    Rng rng(derive_key(root, i));
    Site x{};
    std::int64_t k = 0;
    bool arrived = false;
    for (;; ++k) {
      if (x[0] >= n) {
        arrived = true;
        break;
      }
      if ((options.tube && !options.tube->contains(x)) || k >= cap) break;
      local.increment(x);
      Stepper::apply(x, stepper.draw(rng));
    }
    double lw = stepper.log_weight(k, x[0]);
    local.for_each([&](const Site&, std::int64_t c) { lw += table(c); });
    ReplicaOutcome out;
    (arrived ? out.log_z : out.log_censored) = lw;
    return out;
  });
  return summarize(n, outcomes, "annealed_cost");
}

PassageCost quenched_cost(const EnvironmentField& env, double lambda, std::int64_t n,
                          const WalkConfig& cfg, const SamplingOptions& options) {
  check_common(lambda, n, options);
  if (env.dim() != cfg.d) throw InvalidArgument("quenched_cost: field and walk dimensions differ");
  const Stepper stepper(cfg.d, cfg.tilt);
  const std::int64_t cap = cfg.cap_for(n);
  const std::uint64_t root =
      derive_key(derive_key(options.seed, env.seed()), static_cast<std::uint64_t>(n));
  auto outcomes = parallel_map<ReplicaOutcome>(options.replicas, options.workers, [&](std::size_t i) {
    Rng rng(derive_key(root, i));
    Site x{};
    std::int64_t k = 0;
    double charge = 0.0;
    bool arrived = false;
    for (;; ++k) {
      if (x[0] >= n) {
        arrived = true;
        break;
      }
      if ((options.tube && !options.tube->contains(x)) || k >= cap) break;
      if (lambda > 0.0) charge += env.value_at(x);
      Stepper::apply(x, stepper.draw(rng));
    }
    const double lw = stepper.log_weight(k, x[0]) - lambda * charge;
    ReplicaOutcome out;
    (arrived ? out.log_z : out.log_censored) = lw;
    return out;
  });
  return summarize(n, outcomes, "quenched_cost");
}

PassageSolution exact_passage(const EnvironmentField& env, double lambda, std::int64_t n,
                              const Box& box, double residual_tol, std::uint64_t volume_cap) {
  const int d = env.dim();
  if (box.d != d) throw InvalidArgument("exact_passage: box and field dimensions differ");
  if (n < 1) throw InvalidArgument("exact_passage: n must be >= 1");
  if (!(lambda >= 0.0)) throw InvalidArgument("exact_passage: lambda must be >= 0");
  if (!box.contains(Site{}) || box.hi[0] < n)
    throw InvalidArgument("exact_passage: box must contain the origin and reach x_1 = n");
  if (box.volume() > volume_cap)
    throw ResourceError("exact_passage: box volume " + std::to_string(box.volume()) +
                        " exceeds cap " + std::to_string(volume_cap));
  if (box.lo[0] == 0) return {0.0, 0.0, 0, box};

  // Padded grid: axis 0 spans x_1 = lo_0 .. n, others lo_i .. hi_i. The faces
  // are boundary cells: 1 on x_1 = n, 0 elsewhere.
  std::array<std::int64_t, kMaxDim> extent{};
  std::array<std::int64_t, kMaxDim> stride{};
  extent[0] = n - box.lo[0] + 1;
  for (int i = 1; i < d; ++i) extent[i] = static_cast<std::int64_t>(box.hi[i]) - box.lo[i] + 1;
  std::int64_t total = 1;
  for (int i = d - 1; i >= 0; --i) {
    stride[i] = total;
    total *= extent[i];
  }
  std::vector<double> u(static_cast<std::size_t>(total), 0.0);
  std::vector<std::int64_t> interior;
  std::vector<double> weight;
  const double inv = 1.0 / (2.0 * d);
  Site s{};
  std::int64_t origin_index = -1;
  for (std::int64_t idx = 0; idx < total; ++idx) {
    std::int64_t rem = idx;
    bool inner = true;
    for (int i = 0; i < d; ++i) {
      const std::int64_t c = rem / stride[i];
      rem -= c * stride[i];
      s[i] = static_cast<std::int32_t>((i == 0 ? box.lo[0] : box.lo[i]) + c);
      if (c == 0 || c == extent[i] - 1) inner = false;
    }
    if (s[0] == n) u[static_cast<std::size_t>(idx)] = 1.0;
    if (!inner) continue;
    if (s == Site{}) origin_index = static_cast<std::int64_t>(interior.size());
    interior.push_back(idx);
    weight.push_back(inv * std::exp(-lambda * env.value_at(s)));
  }
  if (origin_index < 0) return {0.0, 0.0, 0, box};

  PassageSolution out;
  out.box = box;
  const std::int64_t max_iter = 10'000'000;
  for (std::int64_t it = 1; it <= max_iter; ++it) {
    double change = 0.0;
    for (std::size_t m = 0; m < interior.size(); ++m) {
      const std::int64_t idx = interior[m];
      double sum = 0.0;
      for (int i = 0; i < d; ++i)
        sum += u[static_cast<std::size_t>(idx + stride[i])] +
               u[static_cast<std::size_t>(idx - stride[i])];
      const double next = weight[m] * sum;
      if (next > 0.0) change = std::max(change, (next - u[static_cast<std::size_t>(idx)]) / next);
      u[static_cast<std::size_t>(idx)] = next;
    }
    out.iterations = it;
    out.residual = change;
    if (change <= residual_tol) break;
  }
  out.z = u[static_cast<std::size_t>(interior[static_cast<std::size_t>(origin_index)])];
  return out;
}

ConvergedPassage exact_passage_converged(const EnvironmentField& env, double lambda,
                                         std::int64_t n, const Box& initial, double rel_tol,
                                         double growth, std::uint64_t volume_cap) {
  if (!(growth > 1.0)) throw InvalidArgument("exact_passage_converged: growth must be > 1");
  ConvergedPassage out;
  Box box = initial;
  const int d = env.dim();
  for (;;) {
    PassageSolution sol = exact_passage(env, lambda, n, box, 1e-13, volume_cap);
    out.history.push_back(sol.z);
    const bool done =
        out.history.size() >= 2 &&
        std::abs(sol.z - out.history[out.history.size() - 2]) <= rel_tol * std::abs(sol.z);
    out.solution = sol;
    if (done) return out;
    Box next = box;
    auto widen = [&](std::int32_t v) {
      const double w = std::ceil(std::abs(static_cast<double>(v)) * growth);
      return static_cast<std::int32_t>(std::max(w, std::abs(static_cast<double>(v)) + 1.0));
    };
    next.lo[0] = -widen(box.lo[0]);
    next.hi[0] = std::max<std::int32_t>(box.hi[0], static_cast<std::int32_t>(n));
    for (int i = 1; i < d; ++i) {
      next.lo[i] = -widen(box.lo[i]);
      next.hi[i] = widen(box.hi[i]);
    }
    if (next.volume() > volume_cap)
      throw ResourceError("exact_passage_converged: no convergence within the volume cap");
    box = next;
  }
}

AnnealedBracket enumerate_annealed(const PotentialDistribution& mu, double lambda,
                                   std::int64_t n, int t_cap) {
  if (n < 1 || n > 4) throw InvalidArgument("enumerate_annealed: requires 1 <= n <= 4");
  if (t_cap < 0 || t_cap > 20) throw InvalidArgument("enumerate_annealed: requires Tcap <= 20");
  if (!(lambda >= 0.0)) throw InvalidArgument("enumerate_annealed: lambda must be >= 0");
  std::vector<double> lap(static_cast<std::size_t>(t_cap) + 1);
  for (int k = 0; k <= t_cap; ++k) lap[static_cast<std::size_t>(k)] = mu.laplace(lambda * k);

  // Positions range over [-t_cap, n]; local[p + t_cap] counts visits.
  const int width = static_cast<int>(n) + t_cap + 1;
  std::vector<int> local(static_cast<std::size_t>(width), 0);
  AnnealedBracket out;
  auto weight = [&]() {
    double w = 1.0;
    for (int c : local) w *= lap[static_cast<std::size_t>(c)];
    return w;
  };
  // Depth-first over step sequences, +1 before -1.
  auto walk = [&](auto&& self, int pos, int t) -> void {
    if (pos >= n) {
      out.z_lower += std::ldexp(weight(), -t);
      return;
    }
    if (t == t_cap) {
      out.remainder_bound += std::ldexp(weight(), -t);
      return;
    }
    int& slot = local[static_cast<std::size_t>(pos + t_cap)];
    ++slot;
    self(self, pos + 1, t + 1);
    self(self, pos - 1, t + 1);
    --slot;
  };
  walk(walk, 0, 0);
  return out;
}

ExponentEstimate fit_exponent(std::span<const PassageCost> costs, FitMethod method) {
  std::vector<std::int64_t> ns;
  for (const auto& c : costs) {
    if (!std::isfinite(c.value)) throw InvalidArgument("fit_exponent: non-finite cost");
    ns.push_back(c.n);
  }
  std::vector<std::int64_t> distinct = ns;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw InvalidArgument("fit_exponent: need at least 3 distinct n");

  ExponentEstimate out;
  out.method = method;
  out.window = ns;
  out.per_n.assign(costs.begin(), costs.end());
  if (method == FitMethod::kLargestN) {
    const auto it = std::max_element(costs.begin(), costs.end(),
                                     [](const auto& a, const auto& b) { return a.n < b.n; });
    out.alpha = std::max(0.0, it->value / static_cast<double>(it->n));
    out.std_error = it->std_error / static_cast<double>(it->n);
    return out;
  }
  // Weights 1/stderr^2 when every point carries an error, ordinary least
  // squares with a residual-based error otherwise.
  const bool weighted =
      std::all_of(costs.begin(), costs.end(), [](const auto& c) { return c.std_error > 0.0; });
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& c : costs) {
    const double w = weighted ? 1.0 / (c.std_error * c.std_error) : 1.0;
    sw += w;
    sx += w * static_cast<double>(c.n);
    sy += w * c.value;
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& c : costs) {
    const double w = weighted ? 1.0 / (c.std_error * c.std_error) : 1.0;
    const double dx = static_cast<double>(c.n) - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * (c.value - ybar);
  }
  const double slope = sxy / sxx;
  out.alpha = std::max(0.0, slope);
  out.intercept = ybar - slope * xbar;
  if (weighted) {
    out.std_error = std::sqrt(1.0 / sxx);
  } else {
    double rss = 0.0;
    for (const auto& c : costs) {
      const double r = c.value - (out.intercept + slope * static_cast<double>(c.n));
      rss += r * r;
    }
    const double dof = static_cast<double>(costs.size()) - 2.0;
    out.std_error = std::sqrt(rss / dof / sxx);
  }
  return out;
}

ExponentEstimate annealed_alpha(const PotentialDistribution& mu, double lambda,
                                std::span<const std::int64_t> n_window, const WalkConfig& cfg,
                                const SamplingOptions& options, FitMethod method) {
  std::vector<PassageCost> costs;
  for (std::int64_t n : n_window) costs.push_back(annealed_cost(mu, lambda, n, cfg, options));
  return fit_exponent(costs, method);
}

QuenchedAlpha quenched_alpha(std::span<const std::uint64_t> env_seeds,
                             const PotentialDistribution& mu, double lambda,
                             std::span<const std::int64_t> n_window, const WalkConfig& cfg,
                             const SamplingOptions& options, FitMethod method) {
  if (env_seeds.empty()) throw InvalidArgument("quenched_alpha: need at least one seed");
  std::vector<EnvironmentField> fields;
  for (std::uint64_t s : env_seeds) fields.emplace_back(s, mu, cfg.d);
  QuenchedAlpha out;
  std::vector<PassageCost> averaged;
  const double count = static_cast<double>(env_seeds.size());
  for (std::int64_t n : n_window) {
    QuenchedLevel level;
    level.n = n;
    RunningStats scatter;
    std::vector<double> neg_costs;
    double var_sum = 0.0;
    PassageCost avg;
    avg.n = n;
    for (const auto& env : fields) {
      PassageCost c = quenched_cost(env, lambda, n, cfg, options);
      level.per_env.push_back(c);
      scatter.add(c.value);
      neg_costs.push_back(-c.value);
      var_sum += c.std_error * c.std_error;
      avg.censored_mass += c.censored_mass / count;
      avg.replicas += c.replicas;
      avg.censored_replicas += c.censored_replicas;
    }
    level.mean_cost = scatter.mean();
    level.seed_scatter = std::sqrt(scatter.variance());
    level.cost_of_mean = -log_mean_exp(neg_costs).log_mean;
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(level.mean_cost));
    level.jensen_holds = level.mean_cost + slack >= level.cost_of_mean;
    avg.value = level.mean_cost;
    avg.std_error = std::sqrt(var_sum) / count;
    averaged.push_back(avg);
    out.levels.push_back(std::move(level));
  }
  out.estimate = fit_exponent(averaged, method);
  return out;
}

}  // namespace rwlab
