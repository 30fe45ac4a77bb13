#pragma once

// The birth/mass-death chain on {0, 1, 2, ...}: up-jumps of size one at rate
// lambda, and from state i a jump to each of 0..i-1 at rate mu. Everything
// here is closed form: rates, the embedded jump chain, the tail function
// R_t(tau, n) = P(X(t) >= n), transition probabilities, the equilibrium law
// and mean return times.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace massdeath {

using State = int;

/// Default remainder for adaptively truncated state sums.
inline constexpr double kDefaultTruncationTol = 1e-12;

class ChainParams {
 public:
  /// Throws std::invalid_argument unless lambda > 0 and mu > 0.
  static ChainParams from_rates(double lambda, double mu);
  /// lambda = theta * mu.
  static ChainParams from_ratio(double theta, double mu);

  double lambda() const { return lambda_; }
  double mu() const { return mu_; }
  double theta() const { return theta_; }
  /// c(i) = lambda + i mu, the total exit rate of state i.
  double exit_rate(State i) const { return lambda_ + i * mu_; }

 private:
  ChainParams(double lambda, double mu, double theta)
      : lambda_(lambda), mu_(mu), theta_(theta) {}
  double lambda_;
  double mu_;
  double theta_;
};

/// q(i, j) of the generator.
double rate(const ChainParams& p, State i, State j);

/// Entry (i, j) of the jump matrix; zero on the diagonal.
double jump_prob(const ChainParams& p, State i, State j);

/// I(n) = theta^n / (theta+1)_n, the equilibrium survival P(X >= n).
double equilibrium_tail(double theta, State n);

/// A probability vector on 0..N plus the mass beyond N. Survival and cdf
/// treat the tail mass as an atom at N+1.
class StateDistribution {
 public:
  static StateDistribution point_mass(State x);
  /// Weights must be non-negative and sum to at most 1 (+1e-12); the
  /// remainder becomes tail mass. With normalize, weights are rescaled to
  /// sum to one instead.
  static StateDistribution from_weights(std::vector<double> weights, bool normalize = false);
  /// Weights and explicit tail mass; the total must be 1 within 1e-12.
  static StateDistribution with_tail(std::vector<double> weights, double tail_mass);
  /// Geometric law p (1-p)^n restricted to 0..n_max and renormalised.
  static StateDistribution truncated_geometric(double p, State n_max);

  std::span<const double> weights() const { return weights_; }
  double weight(State n) const;
  double tail_mass() const { return tail_mass_; }
  /// Largest state with an explicit weight.
  State max_state() const { return static_cast<State>(weights_.size()) - 1; }
  /// Largest state carrying mass, counting the tail atom at N+1.
  State support_max() const { return tail_mass_ > 0.0 ? max_state() + 1 : max_state(); }

  /// tau([n, inf)).
  double survival(State n) const;
  /// T(x) = tau((-inf, x]).
  double cdf(double x) const;
  double mean() const;
  double moment(int m) const;

 private:
  StateDistribution(std::vector<double> weights, double tail_mass);
  std::vector<double> weights_;
  std::vector<double> survival_;  // survival_[n] = tau([n, inf)), n <= N+1
  double tail_mass_;
};

/// pi*(n) = I(n) - I(n+1) = theta^n (n+1) / (theta+1)_{n+1}.
class EquilibriumLaw {
 public:
  explicit EquilibriumLaw(const ChainParams& params) : params_(params) {}

  const ChainParams& params() const { return params_; }
  double pmf(State n) const;
  /// Pi*(x) = sum_{n <= x} pi*(n); right-continuous step function.
  double cdf(double x) const;
  /// I(n) = P(X >= n).
  double survival(State n) const { return equilibrium_tail(params_.theta(), n); }
  /// Smallest N with I(N+1) < tol.
  State truncation_point(double tol = kDefaultTruncationTol) const;
  StateDistribution to_distribution(double tol = kDefaultTruncationTol) const;

 private:
  ChainParams params_;
};

EquilibriumLaw equilibrium(const ChainParams& params);

/// sum_n n^rho pi*(n) through sum_{n>=1} I(n) (n^rho - (n-1)^rho).
double equilibrium_moment(const ChainParams& params, double rho,
                          double tol = kDefaultTruncationTol);

/// Evaluates R_t(tau, n) for a fixed (params, t):
///   R = I(n) + e^{-theta mu t} sum_{rho=0}^{n} e^{-(n-rho) mu t} g^rho / rho! Delta(n-rho)
/// with g = theta (1 - e^{-mu t}) and Delta(k) = tau([k, inf)) - I(k).
/// Every coefficient is bounded by one, so sums never overflow.
class TailKernel {
 public:
  TailKernel(const ChainParams& params, double t);

  struct Eval {
    double value = 0.0;
    /// (|I(n)| + sum |terms|) / |value|; infinite when value is 0.
    double condition = 1.0;
    /// Rounding bound on |value| in absolute terms.
    double abs_error = 0.0;
  };

  Eval tail(const StateDistribution& tau, State n) const;
  Eval tail_point(State x, State n) const;
  /// p_t(x, y), clamped at zero when rounding pushes it negative.
  double transition(State x, State y) const;
  /// R_t(delta_x, n) for n = 0..n_max.
  std::vector<double> tail_row(State x, State n_max) const;

  double t() const { return t_; }
  const ChainParams& params() const { return params_; }

 private:
  void ensure(State n) const;
  ChainParams params_;
  double t_;
  double decay_;  // e^{-mu t}
  mutable std::vector<double> coef_;   // e^{-theta mu t} g^rho / rho!
  mutable std::vector<double> eq_;     // I(k)
  mutable std::vector<double> pow_;    // e^{-k mu t}
};

struct TailOptions {
  /// Relative-error bound above which tail_R signals loss of precision.
  double max_rel_error = 1e-6;
};

/// R_t(tau, n) = P(X(t) >= n) from start law tau. Throws ConditioningError
/// when cancellation leaves fewer than -log10(max_rel_error) good digits.
double tail_R(const ChainParams& params, const StateDistribution& start, State n, double t,
              const TailOptions& opts = {});

/// p_t(x, y) = R_t(delta_x, y) - R_t(delta_x, y+1).
double transition(const ChainParams& params, State x, State y, double t);

/// Law of X(t) from start law tau, truncated where P(X(t) > N) < tol.
StateDistribution propagate(const ChainParams& params, const StateDistribution& start,
                            double t, double tol = kDefaultTruncationTol);

/// Row p_t(x, .) as a distribution; tail_mass = R_t(delta_x, N+1).
StateDistribution transition_row(const ChainParams& params, State x, double t,
                                 double tol = kDefaultTruncationTol);

/// Mean return time to x by two formulas. `derived` is 1 / (c(x) pi*(x))
/// from the stationary-cycle identity; `printed` is the closed form
/// (theta+1)_x / (mu (theta+x)(1+x) theta^x), which is smaller by the
/// factor theta + x + 1.
struct ReturnTimeReport {
  double derived = 0.0;
  double printed = 0.0;
  double discrepancy_factor = 0.0;  // derived / printed
};
ReturnTimeReport return_time_mean(const ChainParams& params, State x);

}  // namespace massdeath
