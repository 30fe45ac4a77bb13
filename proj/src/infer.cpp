#include "massdeath/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "massdeath/errors.hpp"
#include "massdeath/numeric.hpp"
#include "massdeath/parallel.hpp"
#include "massdeath/specfun.hpp"

namespace massdeath {

namespace {

void require_theta(double theta, const char* who) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw std::invalid_argument(std::string(who) + ": theta must be finite and non-negative");
  }
}

double link(double theta) { return eval_L(theta).value; }

// 1/m + sum_{k>m} 1/k^2.
double hajek_renyi_factor(std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("consistency bound: m must be >= 1");
  return 1.0 / static_cast<double>(m) + inverse_square_tail(m);
}

}  // namespace

double phi_pmf(double theta, int d) {
  require_theta(theta, "phi_pmf");
  if (d < 1) throw std::invalid_argument("phi_pmf: d must be >= 1");
  if (theta == 0.0) return d == 1 ? 1.0 : 0.0;
  const double log_num = d * std::log(theta) - log_pochhammer(theta + 1.0, static_cast<unsigned>(d));
  return std::exp(log_num - std::log(theta * link_denominator(theta)));
}

double phi_moment(double theta, int m) {
  require_theta(theta, "phi_moment");
  if (m < 1) throw std::invalid_argument("phi_moment: m must be >= 1");
  if (theta == 0.0) return 1.0;
  CompensatedSum sum;
  double ratio = 1.0;  // theta^k k! / (theta+1)_k
  for (int k = 1; k <= m; ++k) {
    ratio *= theta * k / (theta + k);
    sum += static_cast<double>(stirling2(static_cast<unsigned>(m), static_cast<unsigned>(k))) *
           ratio * kummer(1.0 + k, theta + 1.0 + k, theta);
  }
  return sum.value() / (theta * link_denominator(theta));
}

double phi_variance(double theta) {
  require_theta(theta, "phi_variance");
  const double l = link(theta);
  return theta + l * (1.0 - l);
}

MagnitudeSampler::MagnitudeSampler(double theta) : theta_(theta) {
  require_theta(theta, "MagnitudeSampler");
  if (theta == 0.0) {
    cdf_ = {1.0};
    return;
  }
  // Unnormalized terms I(d) with I(d+1) = I(d) theta / (theta + d + 1); the
  // tail after d is at most I(d+1) / (1 - r) with r = theta / (theta + d + 2).
  CompensatedSum total;
  double term = theta / (theta + 1.0);
  for (int d = 1;; ++d) {
    total += term;
    cdf_.push_back(total.value());
    const double next = term * theta / (theta + d + 1.0);
    const double tail = next * (theta + d + 2.0) / (d + 2.0);
    if (tail < 1e-17 * total.value()) break;
    term = next;
  }
  const double norm = cdf_.back();
  for (double& c : cdf_) c /= norm;
  cdf_.back() = 1.0;
}

int MagnitudeSampler::operator()(CounterRng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(it - cdf_.begin()) + 1;
}

std::vector<int> sample_magnitudes(double theta, std::size_t n, std::uint64_t seed,
                                   std::uint64_t stream) {
  const MagnitudeSampler sampler(theta);
  CounterRng rng(seed, stream);
  std::vector<int> out(n);
  for (auto& d : out) d = sampler(rng);
  return out;
}

double solve_link(double dbar, const EstimateOptions& opts, double* residual, int* iterations) {
  if (!(dbar >= 1.0) || !std::isfinite(dbar)) {
    throw std::invalid_argument("solve_link: the mean magnitude must be finite and >= 1");
  }
  if (residual) *residual = 0.0;
  if (iterations) *iterations = 0;
  if (dbar == 1.0) return 0.0;

  // L(0) = 1 < dbar; double until L(hi) > dbar, which terminates as L grows
  // without bound.
  double lo = 0.0, hi = 1.0;
  int iter = 0;
  while (link(hi) <= dbar) {
    lo = hi;
    hi *= 2.0;
    if (++iter > 2000) throw NonConvergenceError("solve_link: bracket doubling did not terminate");
  }
  // Start from the small- or large-theta inversion of L, kept inside the bracket.
  double x = dbar < 2.0 ? 2.0 * (dbar - 1.0) : std::numbers::pi * dbar * dbar / 2.0;
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  double f = 0.0;
  for (;; ++iter) {
    const auto e = eval_L(x);
    f = e.value - dbar;
    if (std::abs(f) < opts.abs_tol) break;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    if (iter >= opts.max_iter) {
      throw NonConvergenceError("solve_link: no convergence within the iteration cap");
    }
    const double newton = e.d1 > 0.0 ? x - f / e.d1 : lo - 1.0;
    x = newton > lo && newton < hi ? newton : 0.5 * (lo + hi);
  }
  if (residual) *residual = f;
  if (iterations) *iterations = iter;
  return x;
}

double EstimateReport::consistency(std::uint64_t m, double eps) const {
  if (theta_hat == 0.0) return 1.0;
  return consistency_bound(theta_hat, m, eps);
}

EstimateReport estimate_theta(const std::vector<int>& sample, const EstimateOptions& opts) {
  if (sample.empty()) throw std::invalid_argument("estimate_theta: empty sample");
  long double sum = 0.0L;
  for (int d : sample) {
    if (d < 1) throw std::invalid_argument("estimate_theta: magnitudes must be >= 1");
    sum += d;
  }
  EstimateReport r;
  r.n = sample.size();
  r.dbar = static_cast<double>(sum / static_cast<long double>(r.n));
  r.theta_hat = solve_link(r.dbar, opts, &r.residual, &r.iterations);
  if (r.theta_hat > 0.0) r.se_asymptotic = asymptotic_se(r.theta_hat, r.n);
  return r;
}

EstimateReport estimate_theta(const NegJumpRecord& record, double horizon,
                              const EstimateOptions& opts) {
  auto r = estimate_theta(record.magnitudes, opts);
  r.mu_hat = estimate_mu(record, horizon);
  return r;
}

double consistency_weight(double theta, double eps) {
  require_theta(theta, "consistency_weight");
  if (!(eps > 0.0)) throw std::invalid_argument("consistency_weight: eps must be positive");
  const double gap = link(theta + eps) - link(theta);
  return phi_variance(theta) / (gap * gap);
}

double consistency_bound_raw(double theta0, std::uint64_t m, double eps) {
  return 1.0 - consistency_weight(theta0, eps) * hajek_renyi_factor(m);
}

double consistency_bound(double theta0, std::uint64_t m, double eps) {
  return std::max(0.0, consistency_bound_raw(theta0, m, eps));
}

double asymptotic_se(double theta0, std::size_t n) {
  if (!(theta0 > 0.0)) throw std::invalid_argument("asymptotic_se: theta0 must be positive");
  if (n == 0) throw std::invalid_argument("asymptotic_se: n must be >= 1");
  const auto e = eval_L(theta0);
  return std::sqrt(phi_variance(theta0)) / (e.d1 * std::sqrt(static_cast<double>(n)));
}

DbarBand consistency_band(double theta0, double eps) {
  require_theta(theta0, "consistency_band");
  if (!(eps > 0.0)) throw std::invalid_argument("consistency_band: eps must be positive");
  return {theta0 >= eps ? link(theta0 - eps) : 0.0, link(theta0 + eps)};
}

double estimate_mu(const NegJumpRecord& record, double horizon) {
  record.validate();
  if (record.empty()) throw std::invalid_argument("estimate_mu: no negative jumps observed");
  if (!(horizon > 0.0)) throw std::invalid_argument("estimate_mu: horizon must be positive");
  if (record.times.back() > horizon) {
    throw std::invalid_argument("estimate_mu: record extends past the horizon");
  }
  return static_cast<double>(record.size()) / horizon;
}

NegJumpRecord rescale_time(const NegJumpRecord& record, double mu_hat) {
  if (!(mu_hat > 0.0)) throw std::invalid_argument("rescale_time: mu_hat must be positive");
  NegJumpRecord out = record;
  for (double& t : out.times) t *= mu_hat;
  return out;
}

ChainParams rescaled_params(double theta) { return ChainParams::from_ratio(theta, 1.0); }

void DiscretePrior::validate() const {
  if (atoms.empty() || atoms.size() != probs.size()) {
    throw std::invalid_argument("DiscretePrior: need matching, non-empty atoms and probs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i] >= 0.0) || !std::isfinite(atoms[i])) {
      throw std::invalid_argument("DiscretePrior: atoms must be finite and non-negative");
    }
    if (!(probs[i] >= 0.0)) throw std::invalid_argument("DiscretePrior: negative probability");
    total += probs[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("DiscretePrior: probs must sum to 1");
}

double DiscretePrior::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) s += probs[i] * atoms[i];
  return s;
}

double DiscretePrior::second_moment() const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) s += probs[i] * atoms[i] * atoms[i];
  return s;
}

void MomentPrior::validate() const {
  if (!std::isfinite(mean) || !std::isfinite(second_moment)) {
    throw std::invalid_argument("MomentPrior: the first two moments must be finite");
  }
  if (!(mean > 0.0)) throw std::invalid_argument("MomentPrior: mean must be positive");
  if (second_moment < mean * mean * (1.0 - 1e-12)) {
    throw std::invalid_argument("MomentPrior: second moment below mean squared");
  }
}

BayesBound bayes_bound(const DiscretePrior& prior, double eps, std::uint64_t m) {
  prior.validate();
  CompensatedSum ew;
  for (std::size_t i = 0; i < prior.atoms.size(); ++i) {
    if (prior.probs[i] > 0.0) ew += prior.probs[i] * consistency_weight(prior.atoms[i], eps);
  }
  BayesBound b;
  b.expected_w_lo = b.expected_w_hi = ew.value();
  b.lower = b.upper = 1.0 - hajek_renyi_factor(m) * ew.value();
  b.vacuous = b.lower < 0.0;
  return b;
}

BayesBound bayes_bound(const MomentPrior& prior, double eps, std::uint64_t m) {
  prior.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("bayes_bound: eps must be positive");
  const double k = 2.0 * (std::numbers::pi - 2.0) / (eps * eps);
  BayesBound b;
  b.expected_w_lo = k * prior.second_moment;
  b.expected_w_hi = k * (prior.second_moment + eps * prior.mean);
  const double s = hajek_renyi_factor(m);
  b.lower = 1.0 - s * b.expected_w_hi;
  b.upper = 1.0 - s * b.expected_w_lo;
  b.vacuous = b.lower < 0.0;
  return b;
}

std::vector<double> replicate_estimates(double theta0, std::size_t n, std::size_t reps,
                                        std::uint64_t seed, unsigned threads) {
  if (n == 0) throw std::invalid_argument("replicate_estimates: n must be >= 1");
  const MagnitudeSampler sampler(theta0);
  return run_replicates(
      reps,
      [&](std::size_t i) {
        CounterRng rng(seed, i);
        std::uint64_t sum = 0;
        for (std::size_t k = 0; k < n; ++k) sum += static_cast<std::uint64_t>(sampler(rng));
        return solve_link(static_cast<double>(sum) / static_cast<double>(n));
      },
      threads);
}

double consistency_frequency(double theta0, double eps, std::uint64_t m, std::size_t reps,
                             std::uint64_t seed, std::uint64_t horizon_factor, unsigned threads) {
  if (m == 0 || horizon_factor == 0) {
    throw std::invalid_argument("consistency_frequency: m and horizon_factor must be >= 1");
  }
  const MagnitudeSampler sampler(theta0);
  const DbarBand band = consistency_band(theta0, eps);
  const std::uint64_t horizon = m * horizon_factor;
  const auto hits = run_replicates(
      reps,
      [&](std::size_t i) {
        CounterRng rng(seed, i);
        std::uint64_t sum = 0;
        for (std::uint64_t k = 1; k <= horizon; ++k) {
          sum += static_cast<std::uint64_t>(sampler(rng));
          if (k >= m && !band.contains(static_cast<double>(sum) / static_cast<double>(k))) return 0;
        }
        return 1;
      },
      threads);
  double total = 0.0;
  for (int h : hits) total += h;
  return reps ? total / static_cast<double>(reps) : 0.0;
}

double ks_statistic_normal(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("ks_statistic_normal: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 0.5 * std::erfc(-x[i] / std::numbers::sqrt2);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double kolmogorov_pvalue(double d, std::size_t n) {
  // Stephens' finite-n adjustment of the limiting Kolmogorov law.
  const double rn = std::sqrt(static_cast<double>(n));
  const double x = (rn + 0.12 + 0.11 / rn) * d;
  if (x < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    p += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace massdeath
