#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwlab/field.hpp"
#include "rwlab/potential.hpp"
#include "rwlab/site.hpp"
#include "rwlab/walk.hpp"

namespace rwlab {

/// -log Z_n for one plane distance n. Z is a lower bound (censored walks
/// contribute nothing), so `value` is an upper bound on the true cost.
struct PassageCost {
  std::int64_t n = 0;
  double value = 0.0;
  double std_error = 0.0;
  /// Mean importance weight held by censored walks at their censoring time;
  /// bounds the mass missing from Z.
  double censored_mass = 0.0;
  std::size_t replicas = 0;
  std::size_t censored_replicas = 0;
};

enum class FitMethod { kSlopeFit, kLargestN };

const char* to_string(FitMethod method);

struct ExponentEstimate {
  double alpha = 0.0;
  double std_error = 0.0;
  /// Slope fit only.
  double intercept = 0.0;
  std::vector<std::int64_t> window;
  std::vector<PassageCost> per_n;
  FitMethod method = FitMethod::kSlopeFit;
};

/// Monte Carlo settings shared by the estimators.
struct SamplingOptions {
  std::size_t replicas = 10'000;
  unsigned workers = 1;
  std::uint64_t seed = 1;
  /// Walks leaving this box are censored.
  std::optional<Box> tube;
};

/// Zero-variance tilt for a constant per-step cost beta_bar, with beta_bar the
/// predicted cost of one step: lambda v for a point mass, -log E[e^-lambda V]
/// for d < 3, I_lambda otherwise.
double default_tilt(const PotentialDistribution& mu, double lambda, int d);

/// cfg with its tilt replaced by default_tilt(mu, lambda, cfg.d).
WalkConfig with_default_tilt(WalkConfig cfg, const PotentialDistribution& mu, double lambda);

/// -log E_0[prod_x E[exp(-lambda l_x V)]], local times l_x up to T_n. The
/// environment average is exact; only walks are sampled (under cfg.tilt).
/// Throws StatisticalError when every replica is censored.
PassageCost annealed_cost(const PotentialDistribution& mu, double lambda, std::int64_t n,
                          const WalkConfig& cfg, const SamplingOptions& options);

/// -log E_0[exp(-lambda sum_{k < T_n} V(X_k))] in the frozen environment.
PassageCost quenched_cost(const EnvironmentField& env, double lambda, std::int64_t n,
                          const WalkConfig& cfg, const SamplingOptions& options);

/// Z_n from u(x) = e^{-lambda V(x)} (2d)^-1 sum_y u(y) on the open box, with
/// u = 1 for x_1 >= n and u = 0 on the remaining faces of `box`. Gauss-Seidel
/// from u = 0 increases monotonically to the solution, so every iterate and
/// the returned value are lower bounds of the infinite-lattice Z_n. Iteration
/// stops once no site grows by more than residual_tol relative in a sweep.
struct PassageSolution {
  double z = 0.0;
  double residual = 0.0;
  std::int64_t iterations = 0;
  Box box;
};

PassageSolution exact_passage(const EnvironmentField& env, double lambda, std::int64_t n,
                              const Box& box, double residual_tol = 1e-12,
                              std::uint64_t volume_cap = kDefaultBoxVolumeCap);

/// Widens `initial` (back face and transverse faces by `growth`) until two
/// successive values of u(0) differ by at most rel_tol relative.
struct ConvergedPassage {
  PassageSolution solution;
  std::vector<double> history;
};

ConvergedPassage exact_passage_converged(const EnvironmentField& env, double lambda,
                                         std::int64_t n, const Box& initial,
                                         double rel_tol = 1e-9, double growth = 1.5,
                                         std::uint64_t volume_cap = kDefaultBoxVolumeCap);

/// d = 1 enumeration of all 2^Tcap step sequences. z_lower sums
/// 2^-T prod_x L(lambda l_x) over paths that reach n at T <= Tcap; the
/// remainder bound sums 2^-Tcap prod_x L(lambda l_x) over the unarrived paths
/// (their local times can only grow, so this bounds their future weight).
struct AnnealedBracket {
  double z_lower = 0.0;
  double remainder_bound = 0.0;
  double z_upper() const { return z_lower + remainder_bound; }
};

AnnealedBracket enumerate_annealed(const PotentialDistribution& mu, double lambda,
                                   std::int64_t n, int t_cap);

/// Weighted least squares of value against n with intercept (slopeFit), or
/// value / n at the largest n (largestN). Needs >= 3 distinct n.
ExponentEstimate fit_exponent(std::span<const PassageCost> costs,
                              FitMethod method = FitMethod::kSlopeFit);

/// Annealed costs over a window of n, then fit_exponent. Each n uses its own
/// stream derived from options.seed.
ExponentEstimate annealed_alpha(const PotentialDistribution& mu, double lambda,
                                std::span<const std::int64_t> n_window, const WalkConfig& cfg,
                                const SamplingOptions& options,
                                FitMethod method = FitMethod::kSlopeFit);

/// Per-n environment average of quenched costs and the Jensen diagnostic.
struct QuenchedLevel {
  std::int64_t n = 0;
  /// Cost per environment seed.
  std::vector<PassageCost> per_env;
  /// Mean over environments of -log Z_hat.
  double mean_cost = 0.0;
  /// -log of the mean over environments of Z_hat.
  double cost_of_mean = 0.0;
  /// Standard deviation of the per-environment costs (diagnostic only).
  double seed_scatter = 0.0;
  /// mean_cost >= cost_of_mean up to a few ulps of rounding.
  bool jensen_holds = true;
};

struct QuenchedAlpha {
  ExponentEstimate estimate;
  std::vector<QuenchedLevel> levels;
};

/// Averages per-environment quenched costs over env_seeds at each n (walk
/// noise only in the stderr), then fit_exponent.
QuenchedAlpha quenched_alpha(std::span<const std::uint64_t> env_seeds,
                             const PotentialDistribution& mu, double lambda,
                             std::span<const std::int64_t> n_window, const WalkConfig& cfg,
                             const SamplingOptions& options,
                             FitMethod method = FitMethod::kSlopeFit);

}  // namespace rwlab
