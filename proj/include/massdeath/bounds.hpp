#pragma once

// Distances between the law of X(t) and the equilibrium law, and the
// exponential bounds on them: uniform (Kolmogorov) distance, moment
// differences through a Kantorovich-Rubinstein functional, and the Gini index.

#include <string>

#include "massdeath/chain.hpp"

namespace massdeath {

enum class BoundKind { kolmogorov, moment, gini };

struct BoundReport {
  BoundKind kind = BoundKind::kolmogorov;
  int m = 0;  // moment order; 0 unless kind == moment
  double t = 0.0;
  double exact = 0.0;
  double bound = 0.0;
  /// Rigorous bound on the part of the exact side lost to state truncation.
  double truncation = 0.0;
  /// Estimated rounding error of the exact side.
  double rounding = 0.0;

  /// exact + truncation <= bound + slack.
  bool holds(double slack = 1e-10) const { return exact + truncation <= bound + slack; }
};

std::string to_string(BoundKind kind);

/// exp{-mu t - theta (e^{-mu t} + mu t - 1)}.
double decay_factor(const ChainParams& params, double t);

/// sup_x |law of X(t) - Pi*| against sup_x |T - Pi*| times the decay factor.
BoundReport kolmogorov_bound(const ChainParams& params, const StateDistribution& initial,
                             double t);

/// h_m(x) = E[(x + rho)^{m-1}] for rho ~ Poisson(theta), via the Stirling
/// expansion sum_j C(m-1, j) x^{m-1-j} sum_k S(j, k) theta^k.
double h_weight(const ChainParams& params, int m, double x);

/// Integral over [0, inf) of h_m(x) |T(x) - Pi*(x)|, evaluated exactly on unit
/// intervals where both cdfs are constant.
double kr_functional(const ChainParams& params, const StateDistribution& initial, int m);

/// |E X(t)^m - E_pi* X^m| against m K_{h_m}(tau, pi*) times the decay factor.
BoundReport moment_bound(const ChainParams& params, const StateDistribution& initial, int m,
                         double t);

/// Integral of |F_X(t) - Pi*| against the decay factor times the integral of |T - Pi*|.
BoundReport gini_bound(const ChainParams& params, const StateDistribution& initial, double t);

/// CSV header and row: kind,m,t,theta,mu,tau,exact,bound,ratio.
std::string bound_csv_header();
std::string bound_csv_row(const BoundReport& r, const ChainParams& params,
                          const std::string& tau_id);

}  // namespace massdeath
