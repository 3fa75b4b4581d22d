#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace rwlab {

/// Point estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Welford running mean / variance.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double stderr_of_mean() const noexcept {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  Estimate estimate() const noexcept { return {mean_, stderr_of_mean(), n_}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Mean of exp(log_w[i]) held in log space: returns {log mean, relative stderr}.
/// Entries equal to -inf contribute zero weight. Relative stderr is
/// stderr(mean)/mean, i.e. the delta-method stderr of the log.
struct LogMean {
  double log_mean = -std::numeric_limits<double>::infinity();
  double rel_stderr = std::numeric_limits<double>::infinity();
};

inline LogMean log_mean_exp(std::span<const double> log_w) {
  LogMean out;
  const std::size_t n = log_w.size();
  if (n == 0) return out;
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : log_w) peak = std::fmax(peak, v);
  if (!std::isfinite(peak)) return out;
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : log_w) {
    const double w = std::exp(v - peak);
    s1 += w;
    s2 += w * w;
  }
  const double dn = static_cast<double>(n);
  const double mean = s1 / dn;
  const double var = n > 1 ? std::fmax(0.0, (s2 - s1 * s1 / dn) / (dn - 1.0)) : 0.0;
  out.log_mean = peak + std::log(mean);
  out.rel_stderr = std::sqrt(var / dn) / mean;
  return out;
}

/// Standard normal upper tail.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace rwlab
