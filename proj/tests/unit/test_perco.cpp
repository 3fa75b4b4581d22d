#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwlab/error.hpp"
#include "rwlab/perco.hpp"

using namespace rwlab;

namespace {

OrientedGrid all_open(int n, int j_max) {
  OrientedGrid g(n, j_max);
  for (int i = 0; i <= n; ++i)
    for (int j = -j_max; j <= j_max; ++j) g.set_open(i, j);
  return g;
}

// Forward reachability from (0, 0), independent of the library's search.
bool reaches_end(const OrientedGrid& g) {
  const int n = g.columns(), jm = g.j_max();
  std::vector<char> cur(2 * jm + 1, 0);
  if (!g.is_open(0, 0)) return false;
  cur[jm] = 1;
  for (int i = 1; i <= n; ++i) {
    std::vector<char> nxt(2 * jm + 1, 0);
    for (int j = -jm; j <= jm; ++j) {
      if (!g.is_open(i, j)) continue;
      const bool from_below = j - 1 >= -jm && cur[j - 1 + jm];
      const bool from_above = j + 1 <= jm && cur[j + 1 + jm];
      nxt[j + jm] = from_below || from_above;
    }
    cur.swap(nxt);
  }
  for (char c : cur)
    if (c) return true;
  return false;
}

void expect_valid(const OrientedGrid& g, const std::vector<int>& path) {
  ASSERT_EQ(path.size(), static_cast<std::size_t>(g.columns() + 1));
  EXPECT_EQ(path[0], 0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    EXPECT_TRUE(g.is_open(static_cast<int>(i), path[i]));
    if (i) EXPECT_EQ(std::abs(path[i] - path[i - 1]), 1);
  }
}

}  // namespace

TEST(Grid, VertexSetAndParity) {
  OrientedGrid g(4, 2);
  EXPECT_TRUE(g.in_range(0, 0));
  EXPECT_FALSE(g.in_range(0, 1));
  EXPECT_TRUE(g.in_range(1, -1));
  EXPECT_FALSE(g.in_range(5, 1));
  EXPECT_FALSE(g.in_range(2, 4));
  g.set_open(0, 1);  // off the vertex set: ignored
  EXPECT_EQ(g.open_count(), 0u);
  // columns 0..4 hold 3, 2, 3, 2, 3 vertices
  EXPECT_EQ(g.vertex_count(), 13u);
  EXPECT_EQ(all_open(4, 2).open_count(), 13u);
}

TEST(Path, FullyOpenZigzag) {
  const auto path = directed_path(all_open(9, 4));
  ASSERT_TRUE(path.has_value());
  for (std::size_t i = 0; i < path->size(); ++i) EXPECT_EQ((*path)[i], static_cast<int>(i % 2));
}

TEST(Path, ClosedColumnBlocks) {
  auto g = all_open(8, 3);
  for (int j = -3; j <= 3; ++j) g.set_open(5, j, false);
  EXPECT_FALSE(directed_path(g).has_value());
  EXPECT_FALSE(directed_path(OrientedGrid(3, 3)).has_value());
}

TEST(Path, DetoursAroundHoles) {
  auto g = all_open(6, 3);
  g.set_open(1, 1, false);
  g.set_open(3, -1, false);
  const auto path = directed_path(g);
  ASSERT_TRUE(path.has_value());
  expect_valid(g, *path);
  EXPECT_EQ((*path)[1], -1);
}

TEST(Path, AgreesWithReachabilityAndIsValid) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto g = random_grid(30, 6, 0.62, seed);
    const auto path = directed_path(g);
    EXPECT_EQ(path.has_value(), reaches_end(g)) << seed;
    if (path) expect_valid(g, *path);
  }
}

TEST(Path, OpeningSitesNeverDestroysAPath) {
  std::mt19937_64 gen(8);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto g = random_grid(25, 5, 0.6, seed);
    bool had = directed_path(g).has_value();
    for (int k = 0; k < 20; ++k) {
      std::uniform_int_distribution<int> col(0, 25), row(-5, 5);
      g.set_open(col(gen), row(gen));
      const bool has = directed_path(g).has_value();
      if (had) EXPECT_TRUE(has);
      had = has;
    }
  }
}

TEST(RandomGrid, DeterministicAndExtreme) {
  const auto a = random_grid(20, 5, 0.5, 9);
  const auto b = random_grid(20, 5, 0.5, 9);
  EXPECT_EQ(to_json(a, std::nullopt), to_json(b, std::nullopt));
  EXPECT_EQ(random_grid(20, 5, 1.0, 1).open_count(), random_grid(20, 5, 1.0, 1).vertex_count());
  EXPECT_EQ(random_grid(20, 5, 0.0, 1).open_count(), 0u);
}

TEST(Output, JsonAndAscii) {
  const auto g = all_open(4, 2);
  const auto path = directed_path(g);
  const auto j = nlohmann::json::parse(to_json(g, path));
  EXPECT_EQ(j.at("N"), 4);
  EXPECT_EQ(j.at("Jmax"), 2);
  EXPECT_EQ(j.at("open").size(), 13u);
  EXPECT_EQ(j.at("path"), nlohmann::json({0, 1, 0, 1, 0}));
  EXPECT_TRUE(nlohmann::json::parse(to_json(OrientedGrid(4, 2), std::nullopt)).at("path").is_null());

  const std::string art = render_ascii(g, path);
  EXPECT_EQ(std::count(art.begin(), art.end(), '*'), 5);
  EXPECT_EQ(std::count(art.begin(), art.end(), 'o'), 8);
  EXPECT_EQ(std::count(art.begin(), art.end(), '.'), 0);
}

TEST(Blocks, GeometryBoundaries) {
  // M = 2, L = 1.5: x_1 in (-6, 4.5), transverse (-6.36, 6.36).
  BlockGeometry geo{3, 2.0, 1.5};
  const Box b = geo.block(0, 0);
  EXPECT_EQ(b.lo[0], -5);
  EXPECT_EQ(b.hi[0], 4);
  EXPECT_EQ(b.lo[1], -6);
  EXPECT_EQ(b.hi[1], 6);
  EXPECT_EQ(b.lo[2], -6);
  EXPECT_EQ(b.hi[2], 6);
  const Box c = geo.block(1, 1);
  EXPECT_EQ(c.lo[0], -2);  // (3 - 6, 7.5)
  EXPECT_EQ(c.hi[0], 7);
  EXPECT_EQ(c.lo[1], -4);  // (-4.24, 8.49)
  EXPECT_EQ(c.hi[1], 8);
}

TEST(Blocks, CleanFieldGivesOpenGrid) {
  ScenarioParams p;
  p.d = 2;
  p.M = 1.0;
  p.eps = 0.9;
  p.eps0 = 0.9;
  p.delta = 0.45;
  p.delta1 = 0.07;
  p.L = 15.0;
  const EnvironmentField env(1, PotentialDistribution::point_mass(0.0), 2);
  const auto g = build_grid(env, p, 0.5, 4, 3);
  EXPECT_EQ(g.open_count(), g.vertex_count());
  const auto path = directed_path(g);
  ASSERT_TRUE(path.has_value());
  EXPECT_EQ(*path, (std::vector<int>{0, 1, 0, 1, 0}));
  EXPECT_THROW(build_grid(env, p, 0.5, 4, 3, GoodnessMode::kCase1, 1000), ResourceError);
}
