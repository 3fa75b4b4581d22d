#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace rwlab {

/// P[V >= c] together with E[V | V < c].
struct TailSplit {
  double tail_prob = 0.0;
  double cond_mean_below = 0.0;
};

/// Law mu of a single site value V(0) >= 0.
///
/// Five kinds are supported: point mass, Bernoulli(p, v) on {0, v},
/// exponential, Pareto(a, x_m), and the truncation of any of these at a
/// cutoff c. The truncated law keeps every value >= c and replaces every
/// value < c by E[V | V < c]; it stores (base, c) instead of a materialised
/// mixture so the closed forms of the base stay available.
///
/// Values are immutable and cheap to copy.
class PotentialDistribution {
 public:
  enum class Kind { kPointMass, kBernoulli, kExponential, kPareto, kTruncated };

  static PotentialDistribution point_mass(double v);
  static PotentialDistribution bernoulli(double p, double v);
  static PotentialDistribution exponential(double rate);
  static PotentialDistribution pareto(double tail_index, double scale);

  /// Parses the distribution grammar
  ///   pointmass:v | bernoulli:p,v | exp:rate | pareto:a,xm | trunc(<spec>):c
  /// Throws InvalidArgument on malformed input or invalid parameters.
  static PotentialDistribution parse(std::string_view spec);

  /// Inverse of parse(); numbers use the shortest round-trip representation.
  std::string to_spec() const;

  Kind kind() const noexcept { return kind_; }
  bool is_point_mass() const noexcept { return kind_ == Kind::kPointMass; }

  // Raw parameters. Meaning depends on kind(): point mass (v), Bernoulli
  // (p, v), exponential (rate), Pareto (a, x_m), truncated (cutoff).
  double param_a() const noexcept { return a_; }
  double param_b() const noexcept { return b_; }
  const PotentialDistribution* base() const noexcept { return base_.get(); }
  double cutoff() const noexcept { return a_; }

  /// E[exp(-t V)], t >= 0. Closed form where available, adaptive
  /// Gauss-Kronrod otherwise (absolute error below 1e-10).
  double laplace(double t) const;

  /// P[V >= c] and E[V | V < c]. Throws DegenerateError when mu has no mass
  /// below c.
  TailSplit tail_and_conditional_mean(double c) const;

  /// Truncation at cutoff c (see class comment).
  PotentialDistribution truncated_at(double c) const;

  /// Inverse-CDF transform of u in [0, 1). Deterministic in u.
  double sample(double u) const;

  /// P[V <= x].
  double cdf(double x) const;
  /// P[V >= x].
  double tail(double x) const;
  /// P[lo <= V < hi].
  double mass(double lo, double hi) const;
  /// E[V]; +inf when the mean diverges.
  double mean() const;

  /// E[g(V); lo <= V < hi]. Atoms are summed exactly, continuous parts are
  /// integrated adaptively to the given relative tolerance. `breakpoints` are
  /// value-space points where g changes scale; the integration domain is split
  /// there.
  double expect(const std::function<double(double)>& g, double lo, double hi,
                std::span<const double> breakpoints = {}, double rel_tol = 1e-12) const;

  /// E[g(V)] over the whole support.
  double expect(const std::function<double(double)>& g,
                std::span<const double> breakpoints = {}, double rel_tol = 1e-12) const;

 private:
  PotentialDistribution(Kind kind, double a, double b,
                        std::shared_ptr<const PotentialDistribution> base = nullptr)
      : kind_(kind), a_(a), b_(b), base_(std::move(base)) {}

  Kind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  // Truncated only: base law, P_base[V >= c], E_base[V | V < c].
  std::shared_ptr<const PotentialDistribution> base_;
  double trunc_tail_ = 0.0;
  double trunc_mean_ = 0.0;
};

/// Truncation of mu at eps / lambda: sites with V >= eps/lambda keep their
/// value, the rest are replaced by E[V | V < eps/lambda].
PotentialDistribution truncate(const PotentialDistribution& mu, double eps, double lambda);

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

}  // namespace rwlab
