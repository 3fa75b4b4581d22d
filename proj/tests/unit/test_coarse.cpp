#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rwlab/coarse.hpp"
#include "rwlab/error.hpp"

using namespace rwlab;

namespace {

GoodnessParams small_params(double delta1, double L) {
  GoodnessParams g;
  g.d = 3;
  g.eps = 0.5;
  g.lambda = 1.0;
  g.L = L;
  g.delta1 = delta1;
  g.delta = 1.0;
  return g;
}

Box region_cube(std::int32_t lo, std::int32_t hi) {
  Box b{3, {}, {}};
  for (int i = 0; i < 3; ++i) {
    b.lo[i] = lo;
    b.hi[i] = hi;
  }
  return b;
}

TrajectorySummary from_path(std::vector<Site> path) {
  TrajectorySummary t;
  t.path = std::move(path);
  t.steps = static_cast<std::int64_t>(t.path.size()) - 1;
  t.endpoint = t.path.back();
  return t;
}

// Moves one step at a time from the last point to `to`, first axis last.
void walk_to(std::vector<Site>& path, const Site& to, int d) {
  for (int axis = d - 1; axis >= 0; --axis) {
    while (path.back()[axis] != to[axis]) {
      Site s = path.back();
      s[axis] += to[axis] > s[axis] ? 1 : -1;
      path.push_back(s);
    }
  }
}

ScenarioParams event_params() {
  ScenarioParams p = ScenarioParams::defaults(2, 1.0, 10.0);
  p.eps0 = 0.2;
  return p;
}

}  // namespace

TEST(Partition, HalfEpsUnitLambda) {
  const auto p = partition(0.5, 1.0);
  ASSERT_EQ(p.intervals.size(), 7u);
  EXPECT_EQ(p.finite_count(), 6u);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_DOUBLE_EQ(p.intervals[j].lo, 0.5 + 0.25 * double(j));
    EXPECT_DOUBLE_EQ(p.intervals[j].hi, 0.75 + 0.25 * double(j));
  }
  EXPECT_DOUBLE_EQ(p.intervals[6].lo, 2.0);
  EXPECT_TRUE(std::isinf(p.intervals[6].hi));
  EXPECT_EQ(p.index_of(0.49), IntervalPartition::npos);
  EXPECT_EQ(p.index_of(0.5), 0u);
  EXPECT_EQ(p.index_of(0.75), 1u);
  EXPECT_EQ(p.index_of(1.999), 5u);
  EXPECT_EQ(p.index_of(2.0), 6u);
  EXPECT_EQ(p.index_of(1e30), 6u);
}

TEST(Partition, ShortLastIntervalTiles) {
  const double eps = 0.3, lambda = 2.0;
  const auto p = partition(eps, lambda);
  const double top = 1.0 / (eps * lambda);
  // (1/eps - eps)/eps^2 = 33.7: 33 full intervals and one short one.
  ASSERT_EQ(p.finite_count(), 34u);
  EXPECT_DOUBLE_EQ(p.intervals.front().lo, eps / lambda);
  EXPECT_DOUBLE_EQ(p.intervals[p.finite_count() - 1].hi, top);
  EXPECT_LT(p.intervals[33].hi - p.intervals[33].lo, eps * eps / lambda);
  for (std::size_t j = 1; j < p.intervals.size(); ++j)
    EXPECT_DOUBLE_EQ(p.intervals[j].lo, p.intervals[j - 1].hi);

  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 2.0 * top);
  for (int i = 0; i < 20000; ++i) {
    const double v = u(gen);
    const auto j = p.index_of(v);
    if (v < eps / lambda) {
      EXPECT_EQ(j, IntervalPartition::npos);
    } else {
      ASSERT_NE(j, IntervalPartition::npos);
      EXPECT_TRUE(p.intervals[j].contains(v)) << v;
    }
  }
}

TEST(Partition, ClassifyThreshold) {
  const auto mu = PotentialDistribution::exponential(1.0);
  const double L = 3.0;
  const auto p = classify(partition(0.5, 1.0), mu, L);
  const double cut = std::pow(0.5, 9) / (L * L);
  for (std::size_t j = 0; j < p.intervals.size(); ++j) {
    const double m = std::exp(-p.intervals[j].lo) - (std::isinf(p.intervals[j].hi) ? 0.0 : std::exp(-p.intervals[j].hi));
    EXPECT_NEAR(p.masses[j], m, 1e-14);
    EXPECT_EQ(p.relevant[j], m >= cut);
  }
  const auto none = classify(partition(0.5, 1.0), PotentialDistribution::point_mass(0.0), L);
  for (bool r : none.relevant) EXPECT_FALSE(r);
}

TEST(Mesoscopic, BoxesTileTheAxis) {
  for (double side : {1.0, 1.7, 2.5, 4.0}) {
    std::int32_t next = mesoscopic_box(Site::of({-5}), side, 1).lo[0];
    for (int n = -5; n <= 5; ++n) {
      const Box b = mesoscopic_box(Site::of({n}), side, 1);
      EXPECT_EQ(b.lo[0], next);
      EXPECT_GE(b.hi[0], b.lo[0]);
      EXPECT_GE(b.lo[0], side * n);
      EXPECT_LT(b.hi[0], side * (n + 1));
      next = b.hi[0] + 1;
    }
  }
}

TEST(Certify, CleanFieldIsGood) {
  const EnvironmentField env(1, PotentialDistribution::point_mass(0.0), 3);
  const auto r = certify_region(env, region_cube(0, 7), small_params(0.4, 10.0), GoodnessMode::kCase1);
  EXPECT_TRUE(r.overall);
  EXPECT_EQ(r.boxes.size(), 8u);
  EXPECT_DOUBLE_EQ(r.box_side, 4.0);
}

TEST(Certify, PlantedBadBox) {
  const EnvironmentField base(1, PotentialDistribution::point_mass(0.0), 3);
  // 1.1 falls in [1.0, 1.25), interval 2; every interval is irrelevant under
  // this law, so one site breaks its box.
  const auto env = base.with_planted({Site::of({5, 1, 2})}, 1.1);
  const auto r = certify_region(env, region_cube(0, 7), small_params(0.4, 10.0), GoodnessMode::kCase1);
  EXPECT_FALSE(r.overall);
  EXPECT_EQ(r.bad_boxes, 1u);
  for (const auto& b : r.boxes) {
    if (b.index == Site::of({1, 0, 0})) {
      EXPECT_EQ(b.kind, BoxVerdictKind::kBadIrrelevant);
      EXPECT_EQ(b.interval, 2);
      EXPECT_EQ(b.count, 1);
    } else {
      EXPECT_EQ(b.kind, BoxVerdictKind::kGood);
    }
  }
  const auto json = to_json(r);
  EXPECT_NE(json.find("badIrrelevant"), std::string::npos);
}

TEST(Certify, Case2CountsAndMonotonicity) {
  // cap = 2 L^{d-2} delta^d K' eps^4 = 2 * 10 * 1 * 1 * 0.0625 = 1.25
  const EnvironmentField base(1, PotentialDistribution::point_mass(0.0), 3);
  const auto params = small_params(0.4, 10.0);
  const auto region = region_cube(0, 7);
  auto bad_set = [&](const EnvironmentField& env) {
    std::vector<Site> bad;
    for (const auto& b : certify_region(env, region, params, GoodnessMode::kCase2).boxes)
      if (b.kind != BoxVerdictKind::kGood) bad.push_back(b.index);
    return bad;
  };
  EXPECT_TRUE(bad_set(base.with_planted({Site::of({0, 0, 0})}, 9.0)).empty());
  EXPECT_TRUE(bad_set(base.with_planted({Site::of({0, 0, 0}), Site::of({4, 0, 0})}, 9.0)).empty());
  const auto two = bad_set(base.with_planted({Site::of({0, 0, 0}), Site::of({1, 2, 3})}, 9.0));
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(two[0], Site::of({0, 0, 0}));

  // Adding important sites never repairs a box.
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> coord(0, 7);
  std::vector<Site> planted;
  std::vector<Site> prev;
  for (int round = 0; round < 12; ++round) {
    planted.push_back(Site::of({coord(gen), coord(gen), coord(gen)}));
    const auto now = bad_set(base.with_planted(planted, 9.0));
    for (const auto& s : prev) EXPECT_NE(std::find(now.begin(), now.end(), s), now.end());
    prev = now;
  }
}

TEST(Certify, SubLatticeBoxesRejected) {
  const EnvironmentField env(1, PotentialDistribution::point_mass(0.0), 3);
  EXPECT_THROW(certify_region(env, region_cube(0, 3), small_params(0.05, 10.0), GoodnessMode::kCase1),
               ConfigError);
}

TEST(Certify, VolumeCap) {
  const EnvironmentField env(1, PotentialDistribution::point_mass(0.0), 3);
  EXPECT_THROW(certify_region(env, region_cube(0, 40), small_params(0.4, 10.0), GoodnessMode::kCase1, 1000),
               ResourceError);
}

TEST(Health, NoImportantPointsIsHealthy) {
  const EnvironmentField env(1, PotentialDistribution::point_mass(0.0), 3);
  auto p = ScenarioParams::defaults(3, 2.0, 1000.0);
  p.eps0 = 0.2;
  p.delta = 0.005;
  p.delta1 = 0.0005;
  const auto h = is_healthy(env, Site{}, p, 0.1, 200, 1);
  EXPECT_TRUE(h.healthy);
  EXPECT_EQ(h.nearby_important, 0u);
  EXPECT_EQ(h.probability.value, 0.0);
}

TEST(Health, AdjacentImportantPointIsUnhealthy) {
  // P[hit a neighbour] is close to 1 - q_3 = 0.34, above delta^{1/4} = 0.266.
  const auto env =
      EnvironmentField(1, PotentialDistribution::point_mass(0.0), 3).with_planted({Site::of({1, 0, 0})}, 1e9);
  auto p = ScenarioParams::defaults(3, 2.0, 1000.0);
  p.eps0 = 0.2;
  p.delta = 0.005;
  p.delta1 = 0.0005;
  const auto h = is_healthy(env, Site{}, p, 0.1, 4000, 1);
  EXPECT_EQ(h.nearby_important, 1u);
  EXPECT_NEAR(h.threshold, std::pow(0.005, 0.25), 1e-12);
  EXPECT_NEAR(h.probability.value, 0.34, 0.03);
  EXPECT_FALSE(h.healthy);
}

TEST(Generic, EmptyAnnulusIsGeneric) {
  const EnvironmentField env(1, PotentialDistribution::point_mass(0.0), 3);
  const auto p = ScenarioParams::defaults(3, 2.0, 100.0);
  GenericOptions o;
  o.outer_replicas = 2000;
  const auto t = generic_score(env, Site{}, p, 0.1, o);
  EXPECT_EQ(t.annulus_important, 0u);
  EXPECT_EQ(t.overall.value, 0.0);
  EXPECT_EQ(t.non_generic_fraction(), 0.0);
  EXPECT_NEAR(t.threshold, 0.05 * 0.05 * std::cbrt(0.01), 1e-15);
}

TEST(Generic, SaturatedAnnulusIsNotGeneric) {
  // Every site important: any exit from the sigma ball crosses the annulus.
  const EnvironmentField env(1, PotentialDistribution::point_mass(5.0), 3);
  const auto p = ScenarioParams::defaults(3, 2.0, 100.0);
  GenericOptions o;
  o.outer_replicas = 2000;
  const auto t = generic_score(env, Site{}, p, 0.1, o);
  EXPECT_GT(t.annulus_important, 0u);
  EXPECT_DOUBLE_EQ(t.overall.value, 1.0);
  EXPECT_DOUBLE_EQ(t.non_generic_fraction(), 1.0);
  EXPECT_FALSE(t.is_generic(Site::of({5, 0, 0})));
}

TEST(Events, TildeDeadline) {
  const auto p = event_params();
  EXPECT_EQ(tilde_a_deadline(p),
            static_cast<std::int64_t>(std::floor(std::sqrt(2.0) * 1.2 / (0.2 * 0.2))));
}

TEST(Events, StaircaseHitsTarget) {
  // d = 2, M = 1, L = 10: target {x_1 = 10} x (5, 15), tube x_2 in (-10, 20).
  const auto p = event_params();
  std::vector<Site> path{Site::of({0, 0})};
  for (int k = 0; k < 6; ++k) {
    walk_to(path, Site::of({k, k + 1}), 2);
    walk_to(path, Site::of({k + 1, k + 1}), 2);
  }
  walk_to(path, Site::of({10, 6}), 2);
  const auto out = evaluate_event(from_path(path), p, {EventKind::kAhLM});
  EXPECT_TRUE(out.occurred);
  EXPECT_EQ(out.hit_time, static_cast<std::int64_t>(path.size()) - 1);
  EXPECT_TRUE(check_event(from_path(path), p, {EventKind::kTildeA}));
}

TEST(Events, TubeExitAndTimeout) {
  const auto p = event_params();
  std::vector<Site> out_of_tube{Site::of({0, 0})};
  walk_to(out_of_tube, Site::of({0, -10}), 2);
  walk_to(out_of_tube, Site::of({10, 6}), 2);
  auto o = evaluate_event(from_path(out_of_tube), p, {EventKind::kAhLM});
  EXPECT_FALSE(o.occurred);
  EXPECT_FALSE(o.undecided);

  // Dawdling past M L^2 / h = 141.4 steps.
  std::vector<Site> slow{Site::of({0, 0})};
  for (int k = 0; k < 80; ++k) {
    slow.push_back(Site::of({0, 1}));
    slow.push_back(Site::of({0, 0}));
  }
  walk_to(slow, Site::of({10, 6}), 2);
  EXPECT_FALSE(check_event(from_path(slow), p, {EventKind::kAhLM}));

  std::vector<Site> short_path{Site::of({0, 0}), Site::of({1, 0})};
  EXPECT_TRUE(evaluate_event(from_path(short_path), p, {EventKind::kAhLM}).undecided);
}

TEST(Events, RatesAreDeterministic) {
  auto p = ScenarioParams::defaults(3, 2.0, 20.0);
  const std::vector<EventSpec> specs{{EventKind::kAhLM}, {EventKind::kTildeA}};
  const auto a = event_rates(p, specs, 300, 5, 1);
  const auto b = event_rates(p, specs, 300, 5, 2);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].hits, b[i].hits);
    EXPECT_EQ(a[i].probability.value, b[i].probability.value);
  }
}
