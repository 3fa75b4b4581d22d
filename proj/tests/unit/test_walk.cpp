#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <vector>

#include "rwlab/error.hpp"
#include "rwlab/walk.hpp"

using namespace rwlab;

TEST(Stepper, UntiltedIsUniform) {
  Stepper st(3, 0.0);
  for (int k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(st.probability(k), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(st.log_mgf(), 0.0);
}

TEST(Stepper, TiltedProbabilities) {
  const double th = 0.7;
  const int d = 3;
  Stepper st(d, th);
  const double m = (std::cosh(th) + d - 1) / d;
  EXPECT_NEAR(st.probability(0), std::exp(th) / (2 * d * m), 1e-15);
  EXPECT_NEAR(st.probability(1), std::exp(-th) / (2 * d * m), 1e-15);
  for (int k = 2; k < 2 * d; ++k) EXPECT_NEAR(st.probability(k), 1.0 / (2 * d * m), 1e-15);
  EXPECT_NEAR(st.log_mgf(), std::log(m), 1e-15);
  EXPECT_NEAR(st.log_weight(10, 4), 10 * std::log(m) - 4 * th, 1e-13);

  Rng rng(11);
  std::vector<int> freq(2 * d);
  const int draws = 200'000;
  for (int i = 0; i < draws; ++i) ++freq[st.draw(rng)];
  for (int k = 0; k < 2 * d; ++k) {
    const double p = st.probability(k);
    EXPECT_NEAR(freq[k] / double(draws), p, 5 * std::sqrt(p * (1 - p) / draws));
  }
}

TEST(Walk, SigmaTimesByHand) {
  std::vector<Site> path;
  for (int x : {0, 1, 2, 1, 2, 3, 4, 4}) path.push_back(Site::of({x}));
  EXPECT_EQ(sigma_times(path, 1, 2.0), (std::vector<std::int64_t>{0, 2, 6}));
  EXPECT_THROW(sigma_times(path, 1, 0.5), InvalidArgument);
}

TEST(Walk, SummaryIsConsistent) {
  Rng rng(3);
  WalkConfig cfg{3, 0.4, 0};
  RunOptions opt;
  opt.record_path = true;
  for (int rep = 0; rep < 50; ++rep) {
    const auto t = run_to_hyperplane(cfg, 5, rng, opt);
    ASSERT_TRUE(t.hit_plane);
    EXPECT_EQ(t.exit, ExitFlag::kPlane);
    EXPECT_EQ(t.endpoint[0], 5);
    ASSERT_EQ(t.path.size(), static_cast<std::size_t>(t.steps + 1));
    EXPECT_EQ(t.path.back(), t.endpoint);
    std::int64_t total = 0;
    for (const auto& [s, c] : t.local_times) total += c;
    EXPECT_EQ(total, t.steps);
    Stepper st(3, 0.4);
    EXPECT_NEAR(t.log_weight, st.log_weight(t.steps, 5), 1e-9);
    for (std::size_t k = 1; k < t.path.size(); ++k) EXPECT_EQ(dist2(t.path[k - 1], t.path[k], 3), 1);
  }
}

TEST(Walk, GamblersRuin) {
  // 1-d walk from 0, absorbed at -1 (tube exit) or K (plane): P[plane] = 1/(K+1).
  const int K = 4;
  RunOptions opt;
  opt.tube = Box{1, Site::of({0}), Site::of({K})};
  Rng rng(17);
  const int reps = 40'000;
  int hits = 0;
  for (int i = 0; i < reps; ++i) {
    const auto t = run_to_hyperplane({1, 0.0, 0}, K, rng, opt);
    if (t.hit_plane) ++hits;
    else EXPECT_EQ(t.exit, ExitFlag::kTube);
  }
  const double p = 1.0 / (K + 1);
  EXPECT_NEAR(hits / double(reps), p, 4 * std::sqrt(p * (1 - p) / reps));
}

TEST(Walk, StepCapCensors) {
  Rng rng(1);
  const auto t = run_to_hyperplane({3, 0.0, 5}, 1000, rng);
  EXPECT_FALSE(t.hit_plane);
  EXPECT_EQ(t.exit, ExitFlag::kStepCap);
  EXPECT_EQ(t.steps, 5);
}

TEST(LatticeConstants, WatsonIntegral) {
  // Watson's value of the d = 3 return probability 0.340537329551.
  const auto c = return_probability(3, ReturnMethod::kQuadrature);
  EXPECT_NEAR(c.qd, 1.0 - 0.340537329551, 1e-11);
  EXPECT_NEAR(c.green_at_origin, 1.516386059152, 1e-10);
  EXPECT_NEAR(escape_probability(3), c.qd, 1e-15);
  // d = 4 return probability 0.193201673224.
  EXPECT_NEAR(escape_probability(4), 1.0 - 0.193201673224, 1e-10);
  EXPECT_THROW(return_probability(2, ReturnMethod::kQuadrature), InvalidArgument);
}

TEST(LatticeConstants, LateReturnsFollowLocalClt) {
  // p_k(0) ~ 2 (3 / (2 pi k))^{3/2} on even k, so the tail sum past n is
  // about (3 / (2 pi))^{3/2} * 2 / sqrt(n).
  for (std::int64_t n : {2'000, 20'000}) {
    const double approx = std::pow(3.0 / (2.0 * std::numbers::pi), 1.5) * 2.0 / std::sqrt(double(n));
    EXPECT_NEAR(expected_late_returns(3, n) / approx, 1.0, 0.02) << n;
  }
  EXPECT_GT(expected_late_returns(3, 100), expected_late_returns(3, 1000));
}

TEST(LatticeConstants, CacheRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "rwlab_qd_cache_test.txt";
  QdCache cache;
  auto c = return_probability(3, ReturnMethod::kQuadrature);
  cache.store(c);
  cache.save(path);
  const auto back = QdCache::load(path);
  const auto hit = back.lookup(3, ReturnMethod::kQuadrature, c.tolerance);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->qd, c.qd);
  EXPECT_FALSE(back.lookup(4, ReturnMethod::kQuadrature, c.tolerance).has_value());
  std::filesystem::remove(path);
}

TEST(Visits, AdjacentPointHitProbability) {
  // P_0[T_{e1} < inf] = 1 - q_3; a radius-30 ball loses a little.
  const auto e = hit_before_exit(Site::of({1, 0, 0}), 30.0, 3, 20'000, 5);
  EXPECT_GT(e.value, 0.30);
  EXPECT_LT(e.value, 1.0 - escape_probability(3) + 3 * e.std_error);
  EXPECT_THROW(hit_before_exit(Site::of({0, 0, 0}), 30.0, 3, 10, 5), InvalidArgument);
}

TEST(Visits, DirectAndRestartAgree) {
  const Site x = Site::of({2, 1, 0});
  const auto a = visit_histogram(x, 15.0, 3, 60'000, 1, VisitSampling::kDirect);
  const auto b = visit_histogram(x, 15.0, 3, 30'000, 2, VisitSampling::kRestart);
  ASSERT_FALSE(a.insufficient);
  ASSERT_FALSE(b.insufficient);
  EXPECT_EQ(a.counts[0], 0u);
  std::uint64_t sum = 0;
  for (auto c : b.counts) sum += c;
  EXPECT_EQ(sum, b.conditioned);
  EXPECT_DOUBLE_EQ(b.survival(1), 1.0);
  EXPECT_NEAR(a.mean, b.mean, 4 * std::hypot(a.std_error, b.std_error));
}

TEST(Visits, SumHitRequiresRadius) {
  EXPECT_THROW(sum_hit_probabilities(5.0, 3, 10, 1), InvalidArgument);
}
