#include "rwlab/asymptotics.hpp"

#include <cmath>

#include "rwlab/error.hpp"
#include "rwlab/walk.hpp"

namespace rwlab {

const char* to_string(Regime regime) {
  return regime == Regime::kMassAboveCutoff ? "MassAboveCutoff" : "MassBelowCutoff";
}

double f_eval(double z, double qd) {
  if (!(z >= 0.0)) throw InvalidArgument("f_eval: z must be >= 0");
  if (!(qd > 0.0 && qd <= 1.0)) throw InvalidArgument("f_eval: qd must be in (0, 1]");
  if (std::isinf(z)) return qd;
  // 1 - e^-z and 1 - (1-q)e^-z = q + (1-q)(1-e^-z) without cancellation.
  const double one_minus = -std::expm1(-z);
  return qd * one_minus / (qd + (1.0 - qd) * one_minus);
}

double I_integral(const PotentialDistribution& mu, double lambda, double qd) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("I_integral: lambda must be > 0");
  const double cuts[] = {0.01 / lambda, 0.1 / lambda, 1.0 / lambda, 10.0 / lambda,
                         100.0 / lambda};
  return mu.expect([&](double z) { return f_eval(lambda * z, qd); }, cuts, 1e-11);
}

AsymptoticReport report(const PotentialDistribution& mu, double eps, double lambda, int d) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("report: eps must be in (0, 1)");
  if (!(lambda > 0.0)) throw InvalidArgument("report: lambda must be > 0");
  if (d < 3) throw InvalidArgument("report: d must be >= 3");
  AsymptoticReport r;
  r.d = d;
  r.lambda = lambda;
  r.eps = eps;
  r.qd = escape_probability(d);
  r.I_lambda = I_integral(mu, lambda, r.qd);
  r.I_eps_lambda = I_integral(truncate(mu, eps, lambda), lambda, r.qd);
  if (!(r.I_eps_lambda > 0.0))
    throw DegenerateError("report: I_eps_lambda = 0 for " + mu.to_spec() +
                          ", the scale L_lambda is undefined");
  r.L_lambda = 1.0 / std::sqrt(2.0 * r.I_eps_lambda);
  r.predicted_alpha = std::sqrt(2.0 * d * r.I_lambda);
  r.tail_prob = mu.tail(eps / lambda);
  r.regime = 1.0 / r.L_lambda <= std::sqrt(r.tail_prob) / (eps * eps)
                 ? Regime::kMassAboveCutoff
                 : Regime::kMassBelowCutoff;
  return r;
}

double integrable_asymptote(const PotentialDistribution& mu, double lambda, int d) {
  const double m = mu.mean();
  if (!std::isfinite(m)) throw InvalidArgument("integrable_asymptote: E[V] is infinite");
  if (!(lambda >= 0.0)) throw InvalidArgument("integrable_asymptote: lambda must be >= 0");
  return std::sqrt(2.0 * d * lambda * m);
}

double constant_potential_alpha(int d, double beta) {
  if (d < 1) throw InvalidArgument("constant_potential_alpha: d must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw InvalidArgument("constant_potential_alpha: beta must be >= 0");
  // arccosh(1 + x) = log1p(x + sqrt(x (x + 2))) with x = d (e^beta - 1).
  const double x = d * std::expm1(beta);
  return std::log1p(x + std::sqrt(x * (x + 2.0)));
}

double block_cost(double L, double I, int d) {
  if (!(L > 0.0) || !(I > 0.0)) throw InvalidArgument("block_cost: L and I must be > 0");
  const double sd = std::sqrt(static_cast<double>(d));
  return L * sd * I + sd / (2.0 * L);
}

}  // namespace rwlab
