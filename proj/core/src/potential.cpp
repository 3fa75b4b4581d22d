#include "rwlab/potential.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

#include "rwlab/error.hpp"

namespace rwlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

// Adaptive 31-point Gauss-Kronrod over [a, b] (b may be +inf), split at the
// sorted interior points of `cuts`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::vector<double> cuts, double rel_tol) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  if (!(b > a)) return 0.0;
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                            [&](double c) { return !(c > a && c < b) || !std::isfinite(c); }),
             cuts.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(b);
  // A cheap pass fixes the overall scale, so tiny segments (deep Pareto
  // tails) are held to an absolute tolerance instead of recursing forever.
  struct Piece {
    double left, right, value, err, l1;
  };
  std::vector<Piece> pieces;
  double scale = 0.0;
  double left = a;
  for (double right : cuts) {
    Piece p{left, right, 0.0, 0.0, 0.0};
    p.value = GK::integrate(f, left, right, 0, rel_tol, &p.err, &p.l1);
    if (std::isfinite(p.l1)) scale += p.l1;
    pieces.push_back(p);
    left = right;
  }
  const double budget = rel_tol * scale;
  double total = 0.0;
  for (const auto& p : pieces) {
    // A non-finite estimate will not improve by refining.
    if (p.err <= budget || p.l1 == 0.0 || !std::isfinite(p.err)) {
      total += p.value;
      continue;
    }
    const double tol = std::max(rel_tol, budget / p.l1);
    total += GK::integrate(f, p.left, p.right, 20, tol);
  }
  return total;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  PotentialDistribution parse_all() {
    auto mu = parse_one();
    if (pos_ != s_.size()) fail("trailing characters");
    return mu;
  }

 private:
  PotentialDistribution parse_one() {
    if (consume("trunc(")) {
      auto base = parse_one();
      expect(')');
      expect(':');
      return base.truncated_at(number());
    }
    if (consume("pointmass:")) return PotentialDistribution::point_mass(number());
    if (consume("bernoulli:")) {
      const double p = number();
      expect(',');
      return PotentialDistribution::bernoulli(p, number());
    }
    if (consume("exp:")) return PotentialDistribution::exponential(number());
    if (consume("pareto:")) {
      const double a = number();
      expect(',');
      return PotentialDistribution::pareto(a, number());
    }
    fail("unknown distribution kind");
  }

  bool consume(std::string_view token) {
    if (s_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  double number() {
    double v = 0.0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{}) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw InvalidArgument("distribution spec '" + std::string(s_) + "' at offset " +
                          std::to_string(pos_) + ": " + why);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

PotentialDistribution PotentialDistribution::point_mass(double v) {
  require(std::isfinite(v) && v >= 0.0, "point mass value must be finite and >= 0");
  return {Kind::kPointMass, v, 0.0};
}

PotentialDistribution PotentialDistribution::bernoulli(double p, double v) {
  require(p >= 0.0 && p <= 1.0, "Bernoulli p must lie in [0, 1]");
  require(std::isfinite(v) && v >= 0.0, "Bernoulli value must be finite and >= 0");
  return {Kind::kBernoulli, p, v};
}

PotentialDistribution PotentialDistribution::exponential(double rate) {
  require(std::isfinite(rate) && rate > 0.0, "exponential rate must be > 0");
  return {Kind::kExponential, rate, 0.0};
}

PotentialDistribution PotentialDistribution::pareto(double tail_index, double scale) {
  require(std::isfinite(tail_index) && tail_index > 0.0, "Pareto tail index must be > 0");
  require(std::isfinite(scale) && scale > 0.0, "Pareto scale must be > 0");
  return {Kind::kPareto, tail_index, scale};
}

PotentialDistribution PotentialDistribution::parse(std::string_view spec) {
  return Parser(spec).parse_all();
}

std::string PotentialDistribution::to_spec() const {
  switch (kind_) {
    case Kind::kPointMass:
      return "pointmass:" + format_double(a_);
    case Kind::kBernoulli:
      return "bernoulli:" + format_double(a_) + "," + format_double(b_);
    case Kind::kExponential:
      return "exp:" + format_double(a_);
    case Kind::kPareto:
      return "pareto:" + format_double(a_) + "," + format_double(b_);
    case Kind::kTruncated:
      return "trunc(" + base_->to_spec() + "):" + format_double(a_);
  }
  return {};
}

double PotentialDistribution::tail(double x) const {
  switch (kind_) {
    case Kind::kPointMass:
      return a_ >= x ? 1.0 : 0.0;
    case Kind::kBernoulli:
      if (x <= 0.0) return 1.0;
      return x <= b_ ? a_ : 0.0;
    case Kind::kExponential:
      return x <= 0.0 ? 1.0 : std::exp(-a_ * x);
    case Kind::kPareto:
      return x <= b_ ? 1.0 : std::pow(b_ / x, a_);
    case Kind::kTruncated: {
      double t = base_->tail(std::max(x, a_));
      if (trunc_mean_ >= x) t += 1.0 - trunc_tail_;
      return t;
    }
  }
  return 0.0;
}

double PotentialDistribution::cdf(double x) const {
  switch (kind_) {
    case Kind::kPointMass:
      return x >= a_ ? 1.0 : 0.0;
    case Kind::kBernoulli:
      if (x < 0.0) return 0.0;
      return x < b_ ? 1.0 - a_ : 1.0;
    case Kind::kExponential:
      return x <= 0.0 ? 0.0 : -std::expm1(-a_ * x);
    case Kind::kPareto:
      return x <= b_ ? 0.0 : -std::expm1(a_ * std::log(b_ / x));
    case Kind::kTruncated: {
      double c = 0.0;
      if (x >= a_) c += base_->cdf(x) - (1.0 - trunc_tail_);
      if (x >= trunc_mean_) c += 1.0 - trunc_tail_;
      return std::clamp(c, 0.0, 1.0);
    }
  }
  return 0.0;
}

double PotentialDistribution::mass(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  return std::max(0.0, tail(lo) - tail(hi));
}

double PotentialDistribution::mean() const {
  switch (kind_) {
    case Kind::kPointMass:
      return a_;
    case Kind::kBernoulli:
      return a_ * b_;
    case Kind::kExponential:
      return 1.0 / a_;
    case Kind::kPareto:
      return a_ > 1.0 ? a_ * b_ / (a_ - 1.0) : kInf;
    case Kind::kTruncated: {
      if (base_->mean() == kInf) return kInf;
      const double upper = base_->expect([](double z) { return z; }, a_, kInf);
      return upper + (1.0 - trunc_tail_) * trunc_mean_;
    }
  }
  return 0.0;
}

double PotentialDistribution::sample(double u) const {
  switch (kind_) {
    case Kind::kPointMass:
      return a_;
    case Kind::kBernoulli:
      return u >= 1.0 - a_ ? b_ : 0.0;
    case Kind::kExponential:
      return -std::log1p(-u) / a_;
    case Kind::kPareto:
      return b_ * std::pow(1.0 - u, -1.0 / a_);
    case Kind::kTruncated: {
      const double x = base_->sample(u);
      return x >= a_ ? x : trunc_mean_;
    }
  }
  return 0.0;
}

double PotentialDistribution::expect(const std::function<double(double)>& g, double lo,
                                     double hi, std::span<const double> breakpoints,
                                     double rel_tol) const {
  if (!(hi > lo)) return 0.0;
  auto in = [&](double v) { return v >= lo && v < hi; };
  switch (kind_) {
    case Kind::kPointMass:
      return in(a_) ? g(a_) : 0.0;
    case Kind::kBernoulli: {
      double s = 0.0;
      if (in(0.0) && a_ < 1.0) s += (1.0 - a_) * g(0.0);
      if (in(b_) && a_ > 0.0) s += a_ * g(b_);
      return s;
    }
    case Kind::kExponential: {
      const double rate = a_;
      const double from = std::max(lo, 0.0);
      std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
      // Beyond 800/rate the density underflows.
      const double to = std::min(hi, from + 800.0 / rate);
      for (double k = 1.0; from + k / rate < to; k *= 2.0) cuts.push_back(from + k / rate);
      return integrate([&](double z) { return g(z) * rate * std::exp(-rate * z); }, from, to,
                       std::move(cuts), rel_tol);
    }
    case Kind::kPareto: {
      // With v = (x_m / z)^a the Pareto law becomes uniform on (0, 1].
      const double a = a_, xm = b_;
      auto to_v = [&](double z) { return z <= xm ? 1.0 : std::pow(xm / z, a); };
      const double v_hi = to_v(lo);
      // Below (x_m / DBL_MAX)^a the map overflows z to inf; that sliver of
      // mass is dropped.
      const double v_floor =
          std::max(2.0 * std::pow(xm / std::numeric_limits<double>::max(), a), 1e-300);
      const double v_lo = std::max(std::isfinite(hi) ? to_v(hi) : 0.0, v_floor);
      if (!(v_hi > v_lo)) return 0.0;
      std::vector<double> cuts;
      for (double z : breakpoints) cuts.push_back(to_v(z));
      for (double v = v_hi / 10.0; v > v_lo; v /= 10.0) cuts.push_back(v);
      return integrate([&](double v) { return g(xm * std::pow(v, -1.0 / a)); }, v_lo, v_hi,
                       std::move(cuts), rel_tol);
    }
    case Kind::kTruncated: {
      double s = base_->expect(g, std::max(lo, a_), hi, breakpoints, rel_tol);
      if (in(trunc_mean_)) s += (1.0 - trunc_tail_) * g(trunc_mean_);
      return s;
    }
  }
  return 0.0;
}

double PotentialDistribution::expect(const std::function<double(double)>& g,
                                     std::span<const double> breakpoints,
                                     double rel_tol) const {
  return expect(g, 0.0, kInf, breakpoints, rel_tol);
}

double PotentialDistribution::laplace(double t) const {
  if (!std::isfinite(t) || t < 0.0) throw InvalidArgument("laplace: t must be finite and >= 0");
  if (t == 0.0) return 1.0;
  switch (kind_) {
    case Kind::kPointMass:
      return std::exp(-t * a_);
    case Kind::kBernoulli:
      return (1.0 - a_) + a_ * std::exp(-t * b_);
    case Kind::kExponential:
      return a_ / (a_ + t);
    case Kind::kPareto: {
      const double cuts[] = {0.1 / t, 1.0 / t, 10.0 / t, 100.0 / t};
      return expect([t](double z) { return std::exp(-t * z); }, cuts, 1e-13);
    }
    case Kind::kTruncated: {
      // Truncated transform = base transform minus the (nonnegative) Jensen
      // gap of the collapsed lower part.
      const double below = 1.0 - trunc_tail_;
      const double cuts[] = {1.0 / t};
      const double lower_exact =
          base_->expect([t](double z) { return std::exp(-t * z); }, 0.0, a_, cuts, 1e-13);
      const double gap = std::max(0.0, lower_exact - below * std::exp(-t * trunc_mean_));
      return std::max(0.0, base_->laplace(t) - gap);
    }
  }
  return 0.0;
}

TailSplit PotentialDistribution::tail_and_conditional_mean(double c) const {
  if (!(c > 0.0) || std::isnan(c)) throw InvalidArgument("cutoff must be > 0");
  const double tl = tail(c);
  const double below = 1.0 - tl;
  auto degenerate = [&] {
    return DegenerateError("degenerate truncation: " + to_spec() + " has no mass below " +
                           format_double(c));
  };
  if (!(below > 0.0)) throw degenerate();
  switch (kind_) {
    case Kind::kPointMass:
      return {0.0, a_};
    case Kind::kBernoulli:
      return c > b_ ? TailSplit{0.0, a_ * b_} : TailSplit{a_, 0.0};
    case Kind::kExponential: {
      const double x = a_ * c;
      const double below_e = -std::expm1(-x);
      const double partial = (below_e - x * std::exp(-x)) / a_;
      return {tl, partial / below_e};
    }
    case Kind::kPareto: {
      const double a = a_, xm = b_;
      const double partial = a == 1.0 ? xm * std::log(c / xm)
                                      : a * xm * (std::pow(c / xm, 1.0 - a) - 1.0) / (1.0 - a);
      return {tl, partial / below};
    }
    case Kind::kTruncated: {
      const double partial = expect([](double z) { return z; }, 0.0, c);
      return {tl, partial / below};
    }
  }
  return {};
}

PotentialDistribution PotentialDistribution::truncated_at(double c) const {
  const TailSplit split = tail_and_conditional_mean(c);
  PotentialDistribution out(Kind::kTruncated, c, 0.0,
                            std::make_shared<const PotentialDistribution>(*this));
  out.trunc_tail_ = split.tail_prob;
  out.trunc_mean_ = split.cond_mean_below;
  return out;
}

PotentialDistribution truncate(const PotentialDistribution& mu, double eps, double lambda) {
  if (!(eps > 0.0) || !(lambda > 0.0) || !std::isfinite(eps / lambda))
    throw InvalidArgument("truncate: eps and lambda must be > 0");
  return mu.truncated_at(eps / lambda);
}

}  // namespace rwlab
