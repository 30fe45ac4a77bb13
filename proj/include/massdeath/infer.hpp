#pragma once

// Inference on theta from negative-jump magnitudes treated as i.i.d. draws
// from phi_theta(d) = theta^d / ((theta+1)_d (M(1, theta+1, theta) - 1)):
// the moment estimator solving L(theta) = mean magnitude, its consistency and
// normal-approximation error statements, the rate estimator for mu, and the
// prior-averaged consistency bound.

#include <cstdint>
#include <optional>
#include <vector>

#include "massdeath/chain.hpp"
#include "massdeath/rng.hpp"
#include "massdeath/sim.hpp"

namespace massdeath {

/// phi_theta(d) for d >= 1, in log space; phi_0 is the point mass at 1.
double phi_pmf(double theta, int d);

/// E[d^m] under phi_theta through the Stirling/Kummer expansion
///   (1 / (l - 1)) sum_k S(m, k) theta^k k! / (theta+1)_k M(1+k, theta+1+k, theta).
double phi_moment(double theta, int m);

/// v^2(theta) = theta + L(theta) (1 - L(theta)), the variance of phi_theta.
double phi_variance(double theta);

/// Inverse-cdf sampler for phi_theta. The table stops where a geometric
/// bound on the remaining tail falls below 1e-17 and is then renormalized.
class MagnitudeSampler {
 public:
  explicit MagnitudeSampler(double theta);
  int operator()(CounterRng& rng) const;
  double theta() const { return theta_; }

 private:
  double theta_;
  std::vector<double> cdf_;  // cdf_[k] = P(d <= k + 1)
};

/// n draws from phi_theta on stream (seed, stream).
std::vector<int> sample_magnitudes(double theta, std::size_t n, std::uint64_t seed,
                                   std::uint64_t stream = 0);

struct EstimateOptions {
  double abs_tol = 1e-10;  // on |L(theta_hat) - dbar|
  int max_iter = 200;
};

struct EstimateReport {
  double theta_hat = 0.0;
  std::size_t n = 0;
  double dbar = 1.0;
  std::optional<double> se_asymptotic;  // absent when theta_hat == 0
  std::optional<double> mu_hat;         // absent without time data
  double residual = 0.0;                // L(theta_hat) - dbar
  int iterations = 0;

  /// Consistency bound with theta_hat plugged in for theta_0.
  double consistency(std::uint64_t m, double eps) const;
};

/// Solves L(theta) = dbar by bracket doubling and safeguarded Newton.
/// Returns 0 when dbar == 1. Throws std::invalid_argument for dbar < 1.
double solve_link(double dbar, const EstimateOptions& opts = {}, double* residual = nullptr,
                  int* iterations = nullptr);

/// Throws std::invalid_argument on an empty sample or a value below 1.
EstimateReport estimate_theta(const std::vector<int>& sample, const EstimateOptions& opts = {});

/// Estimate with mu_hat from the record and its observation horizon.
EstimateReport estimate_theta(const NegJumpRecord& record, double horizon,
                              const EstimateOptions& opts = {});

/// 1 - (v / (L(theta+eps) - L(theta)))^2 (1/m + sum_{k>m} 1/k^2), floored at 0.
double consistency_bound(double theta0, std::uint64_t m, double eps);

/// The same bound without the floor at zero.
double consistency_bound_raw(double theta0, std::uint64_t m, double eps);

/// v(theta0) / (L'(theta0) sqrt(n)).
double asymptotic_se(double theta0, std::size_t n);

/// |theta_hat - theta0| < eps exactly when dbar lies in (lo, hi), since L is
/// strictly increasing. lo = 0 when theta0 < eps, so every dbar passes below.
struct DbarBand {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double dbar) const { return dbar > lo && dbar < hi; }
};
DbarBand consistency_band(double theta0, double eps);

/// Negative jumps per unit time. Throws on an empty record or horizon <= 0.
double estimate_mu(const NegJumpRecord& record, double horizon);

/// Times multiplied by mu_hat, so that the new unit is the mean spacing of
/// negative jumps and mu = 1, theta = lambda.
NegJumpRecord rescale_time(const NegJumpRecord& record, double mu_hat);

/// Params in the rescaled unit: mu = 1, lambda = theta.
ChainParams rescaled_params(double theta);

/// Prior on theta given by atoms and probabilities.
struct DiscretePrior {
  std::vector<double> atoms;
  std::vector<double> probs;
  void validate() const;
  double mean() const;
  double second_moment() const;
};

/// Prior known only through its first two moments.
struct MomentPrior {
  double mean = 0.0;
  double second_moment = 0.0;
  void validate() const;
};

/// W(theta) = (v(theta) / (L(theta+eps) - L(theta)))^2.
double consistency_weight(double theta, double eps);

/// Prior-averaged bound 1 - (1/m + sum_{k>m} 1/k^2) E_q[W]. With moment input
/// E_q[W] is replaced by 2(pi-2)/eps^2 (E theta^2 + c eps E theta) for c in
/// {0, 1}, which gives an interval; with a discrete prior lower == upper.
/// `vacuous` is set when the lower end is negative; nothing is clamped.
struct BayesBound {
  double lower = 0.0;
  double upper = 0.0;
  double expected_w_lo = 0.0;
  double expected_w_hi = 0.0;
  bool vacuous = false;
};
BayesBound bayes_bound(const DiscretePrior& prior, double eps, std::uint64_t m);
BayesBound bayes_bound(const MomentPrior& prior, double eps, std::uint64_t m);

/// theta_hat for `reps` independent samples of size n, replicate i on stream i.
std::vector<double> replicate_estimates(double theta0, std::size_t n, std::size_t reps,
                                        std::uint64_t seed, unsigned threads = 0);

/// Fraction of `reps` sequences with |theta_hat_k - theta0| < eps for every
/// k in [m, horizon_factor * m]. Cutting the intersection at a finite horizon
/// enlarges the event, so this frequency overestimates the infinite one.
double consistency_frequency(double theta0, double eps, std::uint64_t m, std::size_t reps,
                             std::uint64_t seed, std::uint64_t horizon_factor = 10,
                             unsigned threads = 0);

/// Kolmogorov-Smirnov statistic of `x` against the standard normal, and the
/// asymptotic p-value 2 sum_k (-1)^{k-1} exp(-2 k^2 n D^2).
double ks_statistic_normal(std::vector<double> x);
double kolmogorov_pvalue(double d, std::size_t n);

}  // namespace massdeath
