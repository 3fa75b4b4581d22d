#include "rwlab/perco.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "rwlab/error.hpp"
#include "rwlab/parallel.hpp"
#include "rwlab/rng.hpp"

namespace rwlab {

OrientedGrid::OrientedGrid(int n, int j_max) : n_(n), j_max_(j_max) {
  if (n < 1 || j_max < 1) throw InvalidArgument("OrientedGrid: N and Jmax must be >= 1");
  open_.assign(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(2 * j_max + 1), 0);
}

void OrientedGrid::set_open(int i, int j, bool open) noexcept {
  if (in_range(i, j)) open_[slot(i, j)] = open ? 1 : 0;
}

std::size_t OrientedGrid::open_count() const noexcept {
  return static_cast<std::size_t>(std::count(open_.begin(), open_.end(), 1));
}

std::size_t OrientedGrid::vertex_count() const noexcept {
  std::size_t c = 0;
  for (int i = 0; i <= n_; ++i)
    for (int j = -j_max_; j <= j_max_; ++j) c += valid_parity(i, j) ? 1 : 0;
  return c;
}

Box BlockGeometry::block(int i, int j) const {
  const double sq = std::sqrt(M) * L;
  auto lo = [](double a) { return static_cast<std::int32_t>(std::floor(a)) + 1; };
  auto hi = [](double b) { return static_cast<std::int32_t>(std::ceil(b)) - 1; };
  Box b{d, {}, {}};
  b.lo[0] = lo(i * M * L - 4.0 * L);
  b.hi[0] = hi((i * M + M + 1.0) * L);
  if (d >= 2) {
    b.lo[1] = lo((j - 3.0) * sq);
    b.hi[1] = hi((j + 3.0) * sq);
  }
  for (int k = 2; k < d; ++k) {
    b.lo[k] = lo(-3.0 * sq);
    b.hi[k] = hi(3.0 * sq);
  }
  return b;
}

OrientedGrid build_grid(const EnvironmentField& env, const ScenarioParams& params, double lambda,
                        int n, std::optional<int> j_max, GoodnessMode mode,
                        std::uint64_t volume_cap, unsigned workers) {
  params.validate();
  if (n < 1) throw InvalidArgument("build_grid: N must be >= 1");
  const int jm = j_max.value_or(n);
  if (jm < 1) throw InvalidArgument("build_grid: Jmax must be >= 1");
  OrientedGrid grid(n, jm);
  const BlockGeometry geom = BlockGeometry::from(params);
  std::vector<std::pair<int, int>> vertices;
  std::uint64_t total = 0;
  for (int i = 0; i <= n; ++i)
    for (int j = -jm; j <= jm; ++j) {
      if (!OrientedGrid::valid_parity(i, j)) continue;
      vertices.emplace_back(i, j);
      total += geom.block(i, j).volume();
      if (total > volume_cap)
        throw ResourceError("build_grid: certified volume exceeds cap " +
                            std::to_string(volume_cap));
    }
  const GoodnessParams gp = GoodnessParams::from(params, lambda);
  const IntervalPartition p = classify(partition(gp.eps, gp.lambda), env.law(), gp.L);
  auto good = parallel_map<char>(vertices.size(), workers, [&](std::size_t k) -> char {
    const auto [i, j] = vertices[k];
    return certify_region(env, geom.block(i, j), gp, p, mode, volume_cap, 1).overall ? 1 : 0;
  });
  for (std::size_t k = 0; k < vertices.size(); ++k)
    grid.set_open(vertices[k].first, vertices[k].second, good[k] != 0);
  return grid;
}

OrientedGrid random_grid(int n, int j_max, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("random_grid: p must be in [0, 1]");
  OrientedGrid grid(n, j_max);
  Rng rng(derive_key(seed, 0x7065726321));
  for (int i = 0; i <= n; ++i)
    for (int j = -j_max; j <= j_max; ++j)
      if (OrientedGrid::valid_parity(i, j)) grid.set_open(i, j, rng.uniform() < p);
  return grid;
}

std::optional<std::vector<int>> directed_path(const OrientedGrid& grid) {
  const int n = grid.columns();
  const int jm = grid.j_max();
  const auto width = static_cast<std::size_t>(2 * jm + 1);
  // reach[i][j]: an open path runs from (i, j) to column N.
  std::vector<char> reach(static_cast<std::size_t>(n + 1) * width, 0);
  auto at = [&](int i, int j) -> char& {
    return reach[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(j + jm)];
  };
  auto reaches = [&](int i, int j) { return j >= -jm && j <= jm && at(i, j) != 0; };
  for (int j = -jm; j <= jm; ++j) at(n, j) = grid.is_open(n, j) ? 1 : 0;
  for (int i = n - 1; i >= 0; --i)
    for (int j = -jm; j <= jm; ++j)
      at(i, j) = grid.is_open(i, j) && (reaches(i + 1, j - 1) || reaches(i + 1, j + 1)) ? 1 : 0;
  if (!reaches(0, 0)) return std::nullopt;
  std::vector<int> path{0};
  int j = 0;
  for (int i = 0; i < n; ++i) {
    int up = j + 1, down = j - 1;
    // smaller |j| first, ties to the upper row
    int first = std::abs(down) < std::abs(up) ? down : up;
    int second = first == up ? down : up;
    j = reaches(i + 1, first) ? first : second;
    path.push_back(j);
  }
  return path;
}

std::string to_json(const OrientedGrid& grid, const std::optional<std::vector<int>>& path) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["N"] = grid.columns();
  j["Jmax"] = grid.j_max();
  ordered_json open = ordered_json::array();
  for (int i = 0; i <= grid.columns(); ++i)
    for (int r = -grid.j_max(); r <= grid.j_max(); ++r)
      if (grid.is_open(i, r)) open.push_back({i, r});
  j["open"] = std::move(open);
  j["path"] = path ? ordered_json(*path) : ordered_json(nullptr);
  return j.dump(2);
}

std::string render_ascii(const OrientedGrid& grid, const std::optional<std::vector<int>>& path) {
  const int n = grid.columns();
  const int top = std::min(grid.j_max(), n);
  std::string out;
  for (int j = top; j >= -top; --j) {
    std::string row;
    for (int i = 0; i <= n; ++i) {
      char c = ' ';
      if (OrientedGrid::valid_parity(i, j)) c = grid.is_open(i, j) ? 'o' : '.';
      if (path && (*path)[static_cast<std::size_t>(i)] == j) c = '*';
      row += c;
    }
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row;
    out += '\n';
  }
  return out;
}

}  // namespace rwlab
