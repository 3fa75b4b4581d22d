#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rwlab/coarse.hpp"
#include "rwlab/field.hpp"
#include "rwlab/site.hpp"

namespace rwlab {

/// Oriented site grid on {(i, j) : 0 <= i <= N, |j| <= Jmax, i + j even}
/// with edges (i, j) -> (i + 1, j +- 1).
class OrientedGrid {
 public:
  OrientedGrid() = default;
  OrientedGrid(int n, int j_max);

  int columns() const noexcept { return n_; }
  int j_max() const noexcept { return j_max_; }
  static bool valid_parity(int i, int j) noexcept { return ((i + j) & 1) == 0; }
  bool in_range(int i, int j) const noexcept {
    return i >= 0 && i <= n_ && j >= -j_max_ && j <= j_max_ && valid_parity(i, j);
  }
  bool is_open(int i, int j) const noexcept { return in_range(i, j) && open_[slot(i, j)] != 0; }
  /// Ignored off the vertex set.
  void set_open(int i, int j, bool open = true) noexcept;
  std::size_t open_count() const noexcept;
  std::size_t vertex_count() const noexcept;

 private:
  std::size_t slot(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(2 * j_max_ + 1) +
           static_cast<std::size_t>(j + j_max_);
  }
  int n_ = 0;
  int j_max_ = 0;
  std::vector<char> open_;
};

/// Block (i, j): the integer sites strictly inside
/// (iML - 4L, (iM + M + 1)L) x ((j - 3) sqrt(M) L, (j + 3) sqrt(M) L) x (-3 sqrt(M) L, 3 sqrt(M) L)^(d-2).
struct BlockGeometry {
  int d = 3;
  double M = 1.0;
  double L = 1.0;

  static BlockGeometry from(const ScenarioParams& p) { return {p.d, p.M, p.L}; }
  Box block(int i, int j) const;
};

/// (i, j) is open iff certify_region(block(i, j)) is good overall. Blocks are
/// certified in parallel; volume_cap bounds the summed certified volume.
OrientedGrid build_grid(const EnvironmentField& env, const ScenarioParams& params, double lambda,
                        int n, std::optional<int> j_max = std::nullopt,
                        GoodnessMode mode = GoodnessMode::kCase1,
                        std::uint64_t volume_cap = kDefaultBoxVolumeCap, unsigned workers = 1);

/// Every vertex open independently with probability p.
OrientedGrid random_grid(int n, int j_max, double p, std::uint64_t seed);

/// Open path j_0 = 0, ..., j_N, or nullopt. Among the steps that can still
/// reach column N the walk prefers the smaller |j|, then the upper row, which
/// gives 0, 1, 0, 1, ... on a fully open grid. Rows beyond Jmax do not exist.
std::optional<std::vector<int>> directed_path(const OrientedGrid& grid);

/// {"N", "Jmax", "open": [[i, j], ...], "path": [...] | null}
std::string to_json(const OrientedGrid& grid, const std::optional<std::vector<int>>& path);

/// Rows j = top..bottom, one character per column: '*' path, 'o' open,
/// '.' closed, ' ' off the vertex set. Rows are clipped to |j| <= min(Jmax, N).
std::string render_ascii(const OrientedGrid& grid, const std::optional<std::vector<int>>& path);

}  // namespace rwlab
