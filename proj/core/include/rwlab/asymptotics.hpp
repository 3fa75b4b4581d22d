#pragma once

#include <string>

#include "rwlab/potential.hpp"

namespace rwlab {

enum class Regime { kMassAboveCutoff, kMassBelowCutoff };

const char* to_string(Regime regime);

/// f(z) = q (1 - e^-z) / (1 - (1 - q) e^-z): expected cost of one visited
/// site of value z / lambda once geometric revisits are accounted for.
double f_eval(double z, double qd);

/// I_lambda = int f(lambda z) dmu(z); relative error below 1e-8.
double I_integral(const PotentialDistribution& mu, double lambda, double qd);

struct AsymptoticReport {
  int d = 3;
  double lambda = 0.0;
  double eps = 0.0;
  double qd = 0.0;
  double I_lambda = 0.0;
  /// I computed with the truncated law mu_eps.
  double I_eps_lambda = 0.0;
  /// (2 I_eps_lambda)^(-1/2).
  double L_lambda = 0.0;
  /// sqrt(2 d I_lambda).
  double predicted_alpha = 0.0;
  /// P[V >= eps / lambda].
  double tail_prob = 0.0;
  Regime regime = Regime::kMassAboveCutoff;
};

/// Throws DegenerateError when I_eps_lambda = 0 (no scale L exists).
AsymptoticReport report(const PotentialDistribution& mu, double eps, double lambda, int d);

/// sqrt(2 d lambda E[V]); InvalidArgument when E[V] is infinite.
double integrable_asymptote(const PotentialDistribution& mu, double lambda, int d);

/// Positive root of (cosh a + d - 1) / d = e^beta, i.e. arccosh(d e^beta - (d - 1)).
double constant_potential_alpha(int d, double beta);

/// Cost per unit distance of one block of side L: L sqrt(d) I + sqrt(d) / (2L).
double block_cost(double L, double I, int d);

}  // namespace rwlab
