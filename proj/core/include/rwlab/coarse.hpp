#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rwlab/field.hpp"
#include "rwlab/potential.hpp"
#include "rwlab/site.hpp"
#include "rwlab/stats.hpp"
#include "rwlab/walk.hpp"

namespace rwlab {

/// Half-open value band [lo, hi); hi = +inf for the terminal band.
struct ValueInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return v >= lo && v < hi; }
};

/// I_0..I_R of width eps^2/lambda tiling [eps/lambda, 1/(eps lambda)) (the
/// last finite one may be shorter), then I_{R+1} = [1/(eps lambda), inf).
struct IntervalPartition {
  double eps = 0.0;
  double lambda = 0.0;
  std::vector<ValueInterval> intervals;
  /// One flag per interval (terminal included); empty until classify().
  std::vector<bool> relevant;
  /// Masses mu(I_j) recorded by classify().
  std::vector<double> masses;

  std::size_t finite_count() const noexcept { return intervals.size() - 1; }
  /// Index of the interval holding v, or npos when v < eps/lambda.
  std::size_t index_of(double v) const noexcept;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

IntervalPartition partition(double eps, double lambda);

/// Flags I_j relevant iff mu(I_j) >= eps^9 / L^2.
IntervalPartition classify(IntervalPartition p, const PotentialDistribution& mu, double L);

/// Scenario parameters of the block construction. Validated on construction:
/// M >= 1, 0 < eps < 1, 0 < eps0 <= eps, 0 < delta <= eps0/2,
/// 0 < delta1 <= delta/(3d), L > 0. h = 1/sqrt(d).
struct ScenarioParams {
  int d = 3;
  double M = 2.0;
  double eps = 0.2;
  double eps0 = 0.05;
  double delta = 0.01;
  double delta1 = 0.0;
  double L = 1.0;

  /// Defaults eps = 0.2, eps0 = 0.05, delta = 0.01, delta1 = min(delta/(3d), 0.002).
  static ScenarioParams defaults(int d, double M, double L);
  void validate() const;
  double h() const;
  /// sigma-ball radius eps0 L.
  double sigma_radius() const noexcept { return eps0 * L; }
};

enum class GoodnessMode { kCase1, kCase2 };

const char* to_string(GoodnessMode mode);

/// Inputs of the goodness test alone. Kept separate from ScenarioParams so a
/// coarse delta1 can be certified without the delta1 <= delta/(3d) ordering
/// that the walk scenario needs.
struct GoodnessParams {
  int d = 3;
  double eps = 0.2;
  double lambda = 0.0;
  double L = 1.0;
  double delta1 = 0.0;
  /// Case 2 only.
  double delta = 0.01;
  double k_prime = 1.0;

  static GoodnessParams from(const ScenarioParams& s, double lambda);
  void validate() const;
};

enum class BoxVerdictKind { kGood, kBadRelevant, kBadIrrelevant, kBadCase2 };

const char* to_string(BoxVerdictKind kind);

struct BoxVerdict {
  Site index;
  BoxVerdictKind kind = BoxVerdictKind::kGood;
  /// Violated interval (Case 1), -1 otherwise.
  int interval = -1;
  std::int64_t count = 0;
  double threshold = 0.0;
};

struct GoodnessReport {
  Box region;
  GoodnessMode mode = GoodnessMode::kCase1;
  double delta1 = 0.0;
  /// Side delta1 L of a mesoscopic box.
  double box_side = 0.0;
  /// One verdict per mesoscopic box meeting the region, lexicographic in the
  /// box index.
  std::vector<BoxVerdict> boxes;
  std::size_t bad_boxes = 0;
  bool overall = true;
};

/// Mesoscopic box n: sites x with delta1 L n_i <= x_i < delta1 L (n_i + 1).
Box mesoscopic_box(const Site& index, double side, int d);

/// Counts per interval (Case 1) or important points (Case 2) over every whole
/// mesoscopic box meeting `region`. The partition must be classified with
/// the same eps, lambda, L. Throws ConfigError when delta1 L < 1 and
/// ResourceError when the enumerated volume exceeds volume_cap.
GoodnessReport certify_region(const EnvironmentField& env, const Box& region,
                              const GoodnessParams& params, const IntervalPartition& classified,
                              GoodnessMode mode,
                              std::uint64_t volume_cap = kDefaultBoxVolumeCap,
                              unsigned workers = 1);

/// Convenience overload classifying mu = env.law() itself.
GoodnessReport certify_region(const EnvironmentField& env, const Box& region,
                              const GoodnessParams& params, GoodnessMode mode,
                              std::uint64_t volume_cap = kDefaultBoxVolumeCap,
                              unsigned workers = 1);

/// Stable-key-order JSON.
std::string to_json(const GoodnessReport& report);

struct HealthReport {
  bool healthy = true;
  Estimate probability;
  std::size_t nearby_important = 0;
  double threshold = 0.0;
};

/// P_x[hit an important point (V >= eps/lambda) within eps0 delta L of x
/// before sigma = inf{n : |X_n - x| >= eps0 L}] against delta^(1/4).
HealthReport is_healthy(const EnvironmentField& env, const Site& x, const ScenarioParams& params,
                        double lambda, std::size_t replicas, std::uint64_t seed,
                        unsigned workers = 1);

struct GenericOptions {
  std::size_t outer_replicas = 20'000;
  /// Continuations sampled from each exit point.
  std::size_t inner_replicas = 4;
  std::size_t min_per_bin = 30;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct ExitBin {
  int face = 0;
  std::vector<int> cell;
  std::size_t samples = 0;
  double score = 0.0;
  double std_error = 0.0;
  bool generic = true;
};

/// Conditional annulus-hit probability given the exit point, binned over exit
/// directions on a cube-sphere grid of about eps0^-(d-1) cells.
struct GenericTable {
  Site center;
  double threshold = 0.0;
  /// Cells per face edge after widening.
  int cells_per_edge = 1;
  bool widened = false;
  /// Some occupied bin stayed below min_per_bin at the coarsest grid.
  bool insufficient = false;
  std::size_t annulus_important = 0;
  /// Unconditional annulus-hit probability.
  Estimate overall;
  std::vector<ExitBin> bins;

  /// Fraction of occupied bins that are not generic.
  double non_generic_fraction() const;
  /// Whether (center, y) is generic under this table (unvisited bins count
  /// as generic).
  bool is_generic(const Site& y) const;
};

/// The annulus is B(x, L(eps0 + 2 delta)) \ B(x, L(eps0 - delta)). A sample
/// hits when the walk meets an important annulus site before sigma, or, in
/// one of the inner continuations from X_sigma, before leaving the outer ball.
GenericTable generic_score(const EnvironmentField& env, const Site& x, const ScenarioParams& params,
                           double lambda, const GenericOptions& options);

enum class EventKind { kAhLM, kTildeA, kAM, kChain, kCase2 };

const char* to_string(EventKind kind);

/// Reading of the time bound in the remaining-case event: chi_M <= M d^(3/2)
/// as printed, or chi_M <= M L^2 d^(3/2) with the diffusive scaling.
enum class ChiReading { kLiteral, kDiffusive };

struct EventSpec {
  EventKind kind = EventKind::kAhLM;
  /// Chain: j_0 = 0, j_1, ..., j_N.
  std::vector<int> path_columns;
  ChiReading chi = ChiReading::kLiteral;
  /// kAM / kChain clause (iii); skipped when empty.
  std::function<bool(const Site&, const Site&)> generic_pair;
  /// kCase2 clause (ii): sites that must not be hit before chi_M.
  std::function<bool(const Site&)> important;
  /// kCase2 clause (iii); skipped when empty.
  std::function<bool(const Site&)> good_point;
};

struct EventOutcome {
  bool occurred = false;
  /// Hitting time of the target (A, TildeA, Case2), -1 if none.
  std::int64_t hit_time = -1;
  /// TildeA: smallest k with sigma_k >= hitting time of {x_1 >= ML};
  /// AM: first sigma-index in ((M - eps0) L, inf); Chain: max over blocks.
  std::int64_t F = -1;
  /// Trajectory ended before the event was decided.
  bool undecided = false;
};

/// Evaluates the event on a recorded path (traj.path required). sigma indices
/// are recomputed with radius eps0 L when traj.sigma_indices is empty.
EventOutcome evaluate_event(const TrajectorySummary& traj, const ScenarioParams& params,
                            const EventSpec& spec);

inline bool check_event(const TrajectorySummary& traj, const ScenarioParams& params,
                        const EventSpec& spec) {
  return evaluate_event(traj, params, spec).occurred;
}

/// K = floor((M/h)(1 + eps)/eps0^2), the sigma-index deadline of TildeA.
std::int64_t tilde_a_deadline(const ScenarioParams& params);

struct EventRate {
  EventKind kind = EventKind::kAhLM;
  Estimate probability;
  std::size_t hits = 0;
  std::size_t undecided = 0;
  /// -log(p) / M, +inf when no hit.
  double rate = 0.0;
};

/// Plain (untilted) walks from the origin, each recorded until every
/// requested event is decided; one rate per spec.
std::vector<EventRate> event_rates(const ScenarioParams& params, const std::vector<EventSpec>& specs,
                                   std::size_t replicas, std::uint64_t seed, unsigned workers = 1);

}  // namespace rwlab
