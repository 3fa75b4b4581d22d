#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "rwlab/asymptotics.hpp"
#include "rwlab/error.hpp"
#include "rwlab/estimators.hpp"

using namespace rwlab;

namespace {

// Sum over all 1-d step sequences of length <= t_cap that first reach n at
// T: 2^-T prod_x w(l_x), l_x the visits to x at times 0..T-1.
double enumerate_paths(std::int64_t n, int t_cap, const std::function<double(int)>& w) {
  std::map<int, int> local;
  double total = 0.0;
  std::function<void(int, int)> go = [&](int x, int t) {
    if (x >= n) {
      double prod = std::ldexp(1.0, -t);
      for (auto [site, l] : local) prod *= w(l);
      total += prod;
      return;
    }
    if (t == t_cap) return;
    ++local[x];
    go(x + 1, t + 1);
    go(x - 1, t + 1);
    if (--local[x] == 0) local.erase(x);
  };
  go(0, 0);
  return total;
}

std::vector<PassageCost> affine(double alpha, double c, std::vector<std::int64_t> ns, double se) {
  std::vector<PassageCost> out;
  for (auto n : ns) out.push_back({n, alpha * double(n) + c, se, 0.0, 100, 0});
  return out;
}

}  // namespace

TEST(Enumeration, MatchesBruteForce) {
  const double lambda = 0.4;
  for (const char* spec : {"bernoulli:0.5,3", "exp:1", "pointmass:0.5"}) {
    const auto mu = PotentialDistribution::parse(spec);
    for (std::int64_t n : {1, 2, 3}) {
      const int t_cap = 12;
      const double oracle =
          enumerate_paths(n, t_cap, [&](int l) { return mu.laplace(lambda * l); });
      const auto b = enumerate_annealed(mu, lambda, n, t_cap);
      EXPECT_NEAR(b.z_lower, oracle, 1e-14 * std::max(1.0, oracle)) << spec << " n=" << n;
      EXPECT_GE(b.remainder_bound, 0.0);
    }
  }
}

TEST(Enumeration, PointMassBracketHoldsTruth) {
  const double beta = 0.3;
  const double truth = std::exp(-3.0 * constant_potential_alpha(1, beta));
  for (int t_cap : {8, 12, 16}) {
    const auto b = enumerate_annealed(PotentialDistribution::point_mass(beta), 1.0, 3, t_cap);
    EXPECT_LE(b.z_lower, truth);
    EXPECT_GE(b.z_upper(), truth);
  }
}

TEST(Annealed, ZeroVarianceTiltIsExact) {
  // For a point mass the tilted weight is exactly e^{-alpha n}.
  for (int d : {1, 3}) {
    const double beta = 0.2;
    const auto mu = PotentialDistribution::point_mass(beta);
    const auto cfg = with_default_tilt({d, 0.0, 0}, mu, 1.0);
    SamplingOptions opt;
    opt.replicas = 500;
    const auto c = annealed_cost(mu, 1.0, 10, cfg, opt);
    EXPECT_NEAR(c.value / 10.0, constant_potential_alpha(d, beta), 1e-10) << d;
    EXPECT_LT(c.std_error, 1e-8);
  }
}

TEST(Annealed, UntiltedAgreesWithTilted) {
  const auto mu = PotentialDistribution::exponential(1.0);
  SamplingOptions opt;
  opt.replicas = 20'000;
  opt.seed = 9;
  // Untilted walks are capped; the censored weight widens the tolerance.
  const auto a = annealed_cost(mu, 0.3, 3, {3, 0.0, 400}, opt);
  const auto b = annealed_cost(mu, 0.3, 3, with_default_tilt({3, 0.0, 0}, mu, 0.3), opt);
  const double slack = a.censored_mass / std::exp(-a.value);
  EXPECT_LT(b.value, a.value + 4 * std::hypot(a.std_error, b.std_error));
  EXPECT_GT(b.value, a.value - 4 * std::hypot(a.std_error, b.std_error) - slack);
}

TEST(Annealed, AllCensoredThrows) {
  SamplingOptions opt;
  opt.replicas = 10;
  EXPECT_THROW(annealed_cost(PotentialDistribution::exponential(1.0), 0.1, 5, {3, 0.0, 1}, opt),
               StatisticalError);
}

TEST(Annealed, DeterministicAcrossWorkers) {
  const auto mu = PotentialDistribution::pareto(0.7, 1.0);
  const auto cfg = with_default_tilt({3, 0.0, 0}, mu, 0.1);
  SamplingOptions one;
  one.replicas = 3000;
  one.seed = 21;
  SamplingOptions three = one;
  three.workers = 3;
  const auto a = annealed_cost(mu, 0.1, 6, cfg, one);
  const auto b = annealed_cost(mu, 0.1, 6, cfg, three);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Quenched, ConstantFieldMatchesAnnealed) {
  const double beta = 0.1;
  const auto mu = PotentialDistribution::point_mass(beta);
  const EnvironmentField env(3, mu, 3);
  SamplingOptions opt;
  opt.replicas = 200;
  const auto q = quenched_cost(env, 1.0, 8, with_default_tilt({3, 0.0, 0}, mu, 1.0), opt);
  EXPECT_NEAR(q.value, 8.0 * constant_potential_alpha(3, beta), 1e-9);
}

TEST(Quenched, MonteCarloMatchesLinearSystem) {
  const auto mu = PotentialDistribution::exponential(1.0);
  const EnvironmentField env(77, mu, 1);
  const double lambda = 0.3;
  const std::int64_t n = 4;
  const auto exact = exact_passage_converged(env, lambda, n, Box{1, Site::of({-20}), Site::of({4})});
  SamplingOptions opt;
  opt.replicas = 100'000;
  opt.seed = 2;
  const auto c = quenched_cost(env, lambda, n, with_default_tilt({1, 0.0, 0}, mu, lambda), opt);
  EXPECT_NEAR(c.value, -std::log(exact.solution.z), 4 * c.std_error + 1e-3);
}

TEST(ExactPassage, LowerBoundGrowsWithBox) {
  const double beta = 0.2;
  const EnvironmentField env(1, PotentialDistribution::point_mass(beta), 3);
  const double truth = std::exp(-5.0 * constant_potential_alpha(3, beta));
  double prev = 0.0;
  for (int r : {3, 6, 12}) {
    Box box = Box::cube(3, r);
    box.hi[0] = 5;
    const auto s = exact_passage(env, 1.0, 5, box);
    EXPECT_GT(s.z, prev);
    EXPECT_LE(s.z, truth * (1 + 1e-12));
    prev = s.z;
  }
  Box box = Box::cube(3, 6);
  box.hi[0] = 5;
  const auto conv = exact_passage_converged(env, 1.0, 5, box, 1e-9);
  EXPECT_NEAR(conv.solution.z / truth, 1.0, 1e-6);
}

TEST(ExactPassage, BruteForceLowerBoundInOneDimension) {
  // Paths of length <= 14 are a subset of all paths, so their weight sits
  // below the linear-system value.
  const auto mu = PotentialDistribution::exponential(1.0);
  const EnvironmentField env(5, mu, 1);
  const double lambda = 0.5;
  std::map<int, double> v;
  for (int x = -20; x <= 3; ++x) v[x] = env.value_at(Site::of({x}));
  double brute = 0.0;
  std::function<void(int, int, double)> go = [&](int x, int t, double w) {
    if (x >= 3) {
      brute += w;
      return;
    }
    if (t == 14) return;
    const double step = 0.5 * std::exp(-lambda * v[x]);
    go(x + 1, t + 1, w * step);
    go(x - 1, t + 1, w * step);
  };
  go(0, 0, 1.0);
  const auto s = exact_passage_converged(env, lambda, 3, Box{1, Site::of({-20}), Site::of({3})});
  EXPECT_LE(brute, s.solution.z);
  EXPECT_GT(brute, 0.5 * s.solution.z);
}

TEST(Fit, AffineDataIsExact) {
  const auto costs = affine(0.37, 2.5, {10, 20, 30, 40}, 0.1);
  const auto e = fit_exponent(costs);
  EXPECT_NEAR(e.alpha, 0.37, 1e-12);
  EXPECT_NEAR(e.intercept, 2.5, 1e-10);
  const auto l = fit_exponent(costs, FitMethod::kLargestN);
  EXPECT_NEAR(l.alpha, (0.37 * 40 + 2.5) / 40, 1e-14);
}

TEST(Fit, SlopeIgnoresIntercept) {
  const auto a = fit_exponent(affine(0.5, 0.0, {4, 8, 12}, 0.05));
  const auto b = fit_exponent(affine(0.5, 7.0, {4, 8, 12}, 0.05));
  EXPECT_NEAR(a.alpha, b.alpha, 1e-12);
  EXPECT_NEAR(a.std_error, b.std_error, 1e-15);
}

TEST(Fit, NeedsThreeDistinctN) {
  EXPECT_THROW(fit_exponent(affine(1, 0, {5, 5, 10}, 0.1)), InvalidArgument);
}

TEST(Fit, CoverageOfStandardError) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  int covered = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    auto costs = affine(0.8, 1.0, {10, 20, 40, 80}, 0.0);
    for (auto& c : costs) {
      c.std_error = 0.02 * std::sqrt(double(c.n));
      c.value += c.std_error * noise(gen);
    }
    const auto e = fit_exponent(costs);
    covered += std::abs(e.alpha - 0.8) <= 1.96 * e.std_error;
  }
  EXPECT_GT(covered, 0.90 * trials);
  EXPECT_LT(covered, 0.99 * trials);
}

TEST(QuenchedAlpha, JensenAtEveryLevel) {
  const auto mu = PotentialDistribution::pareto(0.7, 1.0);
  const std::uint64_t seeds[] = {1, 2, 3, 4};
  const std::int64_t window[] = {3, 6, 9};
  SamplingOptions opt;
  opt.replicas = 200;
  const auto qa =
      quenched_alpha(seeds, mu, 0.2, window, with_default_tilt({3, 0.0, 0}, mu, 0.2), opt);
  ASSERT_EQ(qa.levels.size(), 3u);
  for (const auto& level : qa.levels) {
    EXPECT_TRUE(level.jensen_holds);
    EXPECT_GE(level.mean_cost, level.cost_of_mean);
    EXPECT_EQ(level.per_env.size(), 4u);
  }
}
