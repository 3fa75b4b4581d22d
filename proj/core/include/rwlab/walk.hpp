#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rwlab/rng.hpp"
#include "rwlab/site.hpp"
#include "rwlab/stats.hpp"

namespace rwlab {

/// Simple random walk on Z^d with an optional exponential tilt theta along
/// e_1 = (1, 0, ..., 0). Under the tilt, step e is drawn with probability
/// exp(theta * e_1 . e) / (2d m(theta)), m(theta) = (cosh theta + d - 1) / d.
struct WalkConfig {
  int d = 3;
  double tilt = 0.0;
  /// 0 selects default_step_cap(n, d).
  std::int64_t step_cap = 0;

  static std::int64_t default_step_cap(std::int64_t n, int d);
  std::int64_t cap_for(std::int64_t n) const {
    return step_cap > 0 ? step_cap : default_step_cap(n, d);
  }
};

/// Draws nearest-neighbour steps. Direction k in [0, 2d) moves axis k/2 by
/// +1 (k even) or -1 (k odd).
class Stepper {
 public:
  Stepper(int d, double tilt);

  int dim() const noexcept { return d_; }
  double tilt() const noexcept { return tilt_; }
  /// log m(theta).
  double log_mgf() const noexcept { return log_mgf_; }
  /// Probability of direction k.
  double probability(int k) const noexcept;

  int draw(Rng& rng) const noexcept {
    if (!tilted_) return static_cast<int>(rng.below(static_cast<std::uint32_t>(2 * d_)));
    const double u = rng.uniform();
    if (u < p_plus_) return 0;
    if (u < p_plus_ + p_minus_) return 1;
    return 2 + static_cast<int>(rng.below(static_cast<std::uint32_t>(2 * d_ - 2)));
  }

  static void apply(Site& s, int k) noexcept { s[k >> 1] += (k & 1) ? -1 : 1; }

  /// Log of d(untilted)/d(tilted) for a path of `steps` steps whose first
  /// coordinate moved by `dx`: steps * log m(theta) - theta * dx.
  double log_weight(std::int64_t steps, std::int64_t dx) const noexcept {
    return static_cast<double>(steps) * log_mgf_ - tilt_ * static_cast<double>(dx);
  }

 private:
  int d_;
  double tilt_;
  bool tilted_;
  double p_plus_ = 0.0;
  double p_minus_ = 0.0;
  double log_mgf_ = 0.0;
};

enum class ExitFlag { kNone, kPlane, kTube, kStepCap };

const char* to_string(ExitFlag flag);

/// One realisation of a walk stopped at the hyperplane {x_1 >= n}.
struct TrajectorySummary {
  Site endpoint;
  std::int64_t steps = 0;
  /// Visit counts of the sites occupied at times 0..steps-1, sorted by site;
  /// the counts sum to `steps`.
  std::vector<std::pair<Site, std::int64_t>> local_times;
  bool hit_plane = false;
  std::int64_t plane = 0;
  /// sigma_0 = 0 < sigma_1 < ...; empty unless a sigma radius was requested.
  std::vector<std::int64_t> sigma_indices;
  ExitFlag exit = ExitFlag::kNone;
  /// log d(untilted)/d(tilted) of the recorded path.
  double log_weight = 0.0;
  /// X_0..X_steps when recording was requested.
  std::vector<Site> path;
};

struct RunOptions {
  Site start{};
  /// The walk is censored on its first visit outside this box.
  std::optional<Box> tube;
  bool record_path = false;
  bool record_local_times = true;
  /// Radius eps0 * L of the sigma balls; 0 disables sigma tracking.
  double sigma_radius = 0.0;
};

/// Runs until X . e_1 >= n, a tube exit, or the step cap, whichever first.
TrajectorySummary run_to_hyperplane(const WalkConfig& cfg, std::int64_t n, Rng& rng,
                                    const RunOptions& options = {});

/// sigma_0 = 0 and sigma_i = inf{k > sigma_{i-1} : |X_k - X_{sigma_{i-1}}| >= radius}
/// (Euclidean norm) over a recorded path. Requires radius >= 1.
std::vector<std::int64_t> sigma_times(std::span<const Site> path, int d, double radius);

enum class ReturnMethod { kQuadrature, kMonteCarlo };

const char* to_string(ReturnMethod method);

/// Escape probability q_d = 1 / G(0) of the simple random walk.
struct LatticeConstants {
  int d = 3;
  double qd = 0.0;
  double green_at_origin = 0.0;
  ReturnMethod method = ReturnMethod::kQuadrature;
  /// Quadrature: requested relative tolerance. Monte Carlo: unused.
  double tolerance = 0.0;
  /// Monte Carlo only: standard error of qd.
  double std_error = 0.0;
  /// Monte Carlo only: non-return within `mc_steps` before tail correction,
  /// and the expected number of returns after mc_steps (local CLT), which
  /// bounds the truncation bias of the raw estimate.
  double raw_no_return = 0.0;
  double bias_bound = 0.0;
  std::int64_t mc_steps = 0;
  std::size_t replicas = 0;
};

struct ReturnProbabilityOptions {
  double tolerance = 1e-12;
  std::int64_t mc_steps = 10'000;
  std::size_t mc_replicas = 200'000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

/// Quadrature: G(0) = (2 pi)^-d int (1 - d^-1 sum cos k_i)^-1 dk evaluated
/// through the equivalent one-dimensional form d * int_0^inf (e^-s I_0(s))^d ds
/// with an asymptotic-series tail. Monte Carlo: fraction of walks that avoid
/// the origin for mc_steps steps, minus the local-CLT estimate q^2 R(N) of
/// the late-return mass. Throws InvalidArgument for d < 3 (recurrent).
LatticeConstants return_probability(int d, ReturnMethod method,
                                    const ReturnProbabilityOptions& options = {});

/// Expected number of returns to the origin after time n (local CLT).
double expected_late_returns(int d, std::int64_t n);

/// Memoised quadrature q_d (relative tolerance 1e-12).
double escape_probability(int d);

/// Versioned on-disk cache of lattice constants keyed by (d, method, tolerance).
class QdCache {
 public:
  static constexpr const char* kHeader = "# rwlab qd cache v1";

  static QdCache load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<LatticeConstants> lookup(int d, ReturnMethod method, double tolerance) const;
  void store(const LatticeConstants& constants);
  const std::vector<LatticeConstants>& entries() const noexcept { return entries_; }

 private:
  std::vector<LatticeConstants> entries_;
};

/// P_0[T_x < tau_r], tau_r = inf{n : |X_n| > r}, by plain Monte Carlo.
/// Requires 0 < |x| < r.
Estimate hit_before_exit(const Site& x, double r, int d, std::size_t replicas,
                         std::uint64_t seed, unsigned workers = 1);

enum class VisitSampling {
  /// Walks from the origin; only those that visit x are kept.
  kDirect,
  /// Walks from x: by the strong Markov property the visit count of a walk
  /// restarted at its first visit has exactly the conditional law.
  kRestart,
};

/// Law of N(x), the number of visits to x before the exit time
/// inf{n : |X_n| >= r} of the open ball B(0, r), conditioned on N(x) >= 1.
struct VisitHistogram {
  /// counts[k] = number of conditioned samples with N(x) = k; counts[0] = 0.
  std::vector<std::uint64_t> counts;
  std::uint64_t conditioned = 0;
  std::uint64_t walks = 0;
  double mean = 0.0;
  double std_error = 0.0;
  /// Fewer than min_samples conditioned samples.
  bool insufficient = false;

  /// Empirical P[N >= k | N >= 1].
  double survival(std::size_t k) const;
};

VisitHistogram visit_histogram(const Site& x, double r, int d, std::size_t replicas,
                               std::uint64_t seed, VisitSampling sampling,
                               unsigned workers = 1, std::uint64_t min_samples = 30);

/// Estimates sum_{0<|x|<r} P_0[T_x < tau_r] as the mean number of distinct
/// sites other than the origin visited before tau_r. Requires r >= 10.
Estimate sum_hit_probabilities(double r, int d, std::size_t replicas, std::uint64_t seed,
                               unsigned workers = 1);

}  // namespace rwlab
