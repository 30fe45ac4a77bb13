#include "massdeath/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "massdeath/errors.hpp"
#include "massdeath/numeric.hpp"
#include "massdeath/specfun.hpp"

namespace massdeath {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_state(State s, const char* what) {
  if (s < 0) throw std::invalid_argument(std::string(what) + ": state must be non-negative");
}

}  // namespace

ChainParams ChainParams::from_rates(double lambda, double mu) {
  if (!(lambda > 0.0) || !(mu > 0.0) || !std::isfinite(lambda) || !std::isfinite(mu)) {
    throw std::invalid_argument("ChainParams: lambda and mu must be positive and finite");
  }
  return ChainParams(lambda, mu, lambda / mu);
}

ChainParams ChainParams::from_ratio(double theta, double mu) {
  if (!(theta > 0.0) || !(mu > 0.0) || !std::isfinite(theta) || !std::isfinite(mu)) {
    throw std::invalid_argument("ChainParams: theta and mu must be positive and finite");
  }
  return ChainParams(theta * mu, mu, theta);
}

double rate(const ChainParams& p, State i, State j) {
  require_state(i, "rate");
  require_state(j, "rate");
  if (j == i + 1) return p.lambda();
  if (j == i) return -p.exit_rate(i);
  if (j < i) return p.mu();
  return 0.0;
}

double jump_prob(const ChainParams& p, State i, State j) {
  require_state(i, "jump_prob");
  require_state(j, "jump_prob");
  if (j == i) return 0.0;
  return rate(p, i, j) / p.exit_rate(i);
}

double equilibrium_tail(double theta, State n) {
  require_state(n, "equilibrium_tail");
  if (n == 0) return 1.0;
  if (n <= 30) {
    double v = 1.0;
    for (State k = 1; k <= n; ++k) v *= theta / (theta + k);
    return v;
  }
  return std::exp(n * std::log(theta) - log_pochhammer(theta + 1.0, static_cast<unsigned>(n)));
}

// ---------------------------------------------------------------- StateDistribution

StateDistribution::StateDistribution(std::vector<double> weights, double tail_mass)
    : weights_(std::move(weights)), tail_mass_(tail_mass) {
  if (weights_.empty()) throw std::invalid_argument("StateDistribution: no weights");
  survival_.assign(weights_.size() + 2, 0.0);
  CompensatedSum acc;
  acc += tail_mass_;
  survival_[weights_.size()] = tail_mass_;
  for (std::size_t i = weights_.size(); i-- > 0;) {
    acc += weights_[i];
    survival_[i] = acc.value();
  }
}

StateDistribution StateDistribution::point_mass(State x) {
  require_state(x, "point_mass");
  std::vector<double> w(static_cast<std::size_t>(x) + 1, 0.0);
  w.back() = 1.0;
  return StateDistribution(std::move(w), 0.0);
}

StateDistribution StateDistribution::from_weights(std::vector<double> weights, bool normalize) {
  if (weights.empty()) throw std::invalid_argument("StateDistribution: no weights");
  CompensatedSum total;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("StateDistribution: weights must be finite and non-negative");
    }
    total += w;
  }
  const double sum = total.value();
  if (normalize) {
    if (!(sum > 0.0)) throw std::invalid_argument("StateDistribution: zero total weight");
    for (double& w : weights) w /= sum;
    return StateDistribution(std::move(weights), 0.0);
  }
  if (sum > 1.0 + 1e-12) {
    throw std::invalid_argument("StateDistribution: weights sum above one");
  }
  return StateDistribution(std::move(weights), std::max(0.0, 1.0 - sum));
}

StateDistribution StateDistribution::with_tail(std::vector<double> weights, double tail_mass) {
  if (!(tail_mass >= 0.0)) throw std::invalid_argument("StateDistribution: negative tail mass");
  CompensatedSum total;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("StateDistribution: negative weight");
    total += w;
  }
  total += tail_mass;
  if (std::abs(total.value() - 1.0) > 1e-12) {
    throw std::invalid_argument("StateDistribution: weights plus tail must sum to one");
  }
  return StateDistribution(std::move(weights), tail_mass);
}

StateDistribution StateDistribution::truncated_geometric(double p, State n_max) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("truncated_geometric: p in (0, 1]");
  require_state(n_max, "truncated_geometric");
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1);
  double v = p;
  for (auto& x : w) {
    x = v;
    v *= 1.0 - p;
  }
  return from_weights(std::move(w), true);
}

double StateDistribution::weight(State n) const {
  if (n < 0) return 0.0;
  if (n < static_cast<State>(weights_.size())) return weights_[static_cast<std::size_t>(n)];
  if (n == static_cast<State>(weights_.size())) return tail_mass_;
  return 0.0;
}

double StateDistribution::survival(State n) const {
  if (n <= 0) return 1.0;
  if (n < static_cast<State>(survival_.size())) return survival_[static_cast<std::size_t>(n)];
  return 0.0;
}

double StateDistribution::cdf(double x) const {
  if (x < 0.0) return 0.0;
  const double fl = std::floor(x);
  if (fl >= static_cast<double>(survival_.size())) return 1.0;
  return 1.0 - survival(static_cast<State>(fl) + 1);
}

double StateDistribution::mean() const { return moment(1); }

double StateDistribution::moment(int m) const {
  CompensatedSum s;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    s += weights_[i] * std::pow(static_cast<double>(i), m);
  }
  s += tail_mass_ * std::pow(static_cast<double>(weights_.size()), m);
  return s.value();
}

// ---------------------------------------------------------------- EquilibriumLaw

double EquilibriumLaw::pmf(State n) const {
  if (n < 0) return 0.0;
  const double theta = params_.theta();
  if (n <= 30) {
    double v = 1.0 / (theta + 1.0);
    for (State k = 1; k <= n; ++k) v *= theta / (theta + k + 1.0);
    return v * (n + 1.0);
  }
  return std::exp(n * std::log(theta) + std::log(n + 1.0) -
                  log_pochhammer(theta + 1.0, static_cast<unsigned>(n) + 1));
}

double EquilibriumLaw::cdf(double x) const {
  if (x < 0.0) return 0.0;
  return 1.0 - survival(static_cast<State>(std::floor(x)) + 1);
}

State EquilibriumLaw::truncation_point(double tol) const {
  State n = 0;
  while (survival(n + 1) >= tol) ++n;
  return n;
}

StateDistribution EquilibriumLaw::to_distribution(double tol) const {
  const State n_max = truncation_point(tol);
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1);
  for (State n = 0; n <= n_max; ++n) w[static_cast<std::size_t>(n)] = pmf(n);
  return StateDistribution::with_tail(std::move(w), survival(n_max + 1));
}

EquilibriumLaw equilibrium(const ChainParams& params) { return EquilibriumLaw(params); }

double equilibrium_moment(const ChainParams& params, double rho, double tol) {
  if (!(rho > 0.0)) throw std::invalid_argument("equilibrium_moment: rho must be positive");
  const double theta = params.theta();
  CompensatedSum sum;
  double bound_factor = 1.0;  // theta^n / n!
  for (State n = 1;; ++n) {
    const double nn = static_cast<double>(n);
    bound_factor *= theta / nn;
    const double term = equilibrium_tail(theta, n) * (std::pow(nn, rho) - std::pow(nn - 1.0, rho));
    sum += term;
    const double bound = std::pow(nn, rho) * bound_factor;
    if (nn > theta && bound < tol * std::max(sum.value(), 1e-300) * 1e-4) break;
    if (n > 1000000) throw NonConvergenceError("equilibrium_moment: no convergence");
  }
  return sum.value();
}

// ---------------------------------------------------------------- TailKernel

TailKernel::TailKernel(const ChainParams& params, double t)
    : params_(params), t_(t), decay_(std::exp(-params.mu() * t)) {
  if (!(t >= 0.0)) throw std::invalid_argument("TailKernel: t must be non-negative");
  coef_.push_back(std::exp(-params_.theta() * params_.mu() * t_));
  eq_.push_back(1.0);
  pow_.push_back(1.0);
}

void TailKernel::ensure(State n) const {
  const auto need = static_cast<std::size_t>(n) + 1;
  if (coef_.size() >= need) return;
  const double theta = params_.theta();
  const double g = theta * -std::expm1(-params_.mu() * t_);
  while (coef_.size() < need) {
    const auto k = coef_.size();
    coef_.push_back(coef_.back() * g / static_cast<double>(k));
    pow_.push_back(pow_.back() * decay_);
    if (k <= 30) {
      eq_.push_back(eq_.back() * theta / (theta + static_cast<double>(k)));
    } else {
      eq_.push_back(equilibrium_tail(theta, static_cast<State>(k)));
    }
  }
}

TailKernel::Eval TailKernel::tail(const StateDistribution& tau, State n) const {
  require_state(n, "tail_R");
  if (t_ == 0.0) return {tau.survival(n), 1.0, 0.0};
  ensure(n);
  CompensatedSum s;
  s += eq_[static_cast<std::size_t>(n)];
  for (State r = 0; r <= n; ++r) {
    const State j = n - r;
    if (j == 0) continue;  // Delta(0) = 0
    const double delta = tau.survival(j) - eq_[static_cast<std::size_t>(j)];
    if (delta == 0.0) continue;
    s += coef_[static_cast<std::size_t>(r)] * pow_[static_cast<std::size_t>(j)] * delta;
  }
  Eval e;
  e.value = std::clamp(s.value(), 0.0, 1.0);
  e.abs_error = 4.0 * kEps * (s.magnitude() + 1.0) * std::sqrt(static_cast<double>(n) + 1.0);
  e.condition = e.value > 0.0 ? s.magnitude() / e.value : std::numeric_limits<double>::infinity();
  return e;
}

TailKernel::Eval TailKernel::tail_point(State x, State n) const {
  require_state(x, "tail_R");
  require_state(n, "tail_R");
  ensure(n);
  if (t_ == 0.0) return {n <= x ? 1.0 : 0.0, 1.0, 0.0};
  CompensatedSum s;
  s += eq_[static_cast<std::size_t>(n)];
  for (State r = 0; r < n; ++r) {
    const State j = n - r;
    const double delta = (j <= x ? 1.0 : 0.0) - eq_[static_cast<std::size_t>(j)];
    s += coef_[static_cast<std::size_t>(r)] * pow_[static_cast<std::size_t>(j)] * delta;
  }
  Eval e;
  e.value = std::clamp(s.value(), 0.0, 1.0);
  e.abs_error = 4.0 * kEps * (s.magnitude() + 1.0) * std::sqrt(static_cast<double>(n) + 1.0);
  e.condition = e.value > 0.0 ? s.magnitude() / e.value : std::numeric_limits<double>::infinity();
  return e;
}

double TailKernel::transition(State x, State y) const {
  require_state(x, "transition");
  require_state(y, "transition");
  if (t_ == 0.0) return x == y ? 1.0 : 0.0;
  ensure(y + 1);
  // R(y) - R(y+1) gathered into one compensated sum: the equilibrium part is
  // pi*(y) and each Delta(j) picks up two coefficients.
  CompensatedSum s;
  s += eq_[static_cast<std::size_t>(y)] - eq_[static_cast<std::size_t>(y) + 1];
  for (State j = 1; j <= y + 1; ++j) {
    const double delta = (j <= x ? 1.0 : 0.0) - eq_[static_cast<std::size_t>(j)];
    const auto ju = static_cast<std::size_t>(j);
    const double c_lo = j <= y ? coef_[static_cast<std::size_t>(y - j)] : 0.0;
    const double c_hi = coef_[static_cast<std::size_t>(y + 1 - j)];
    s += (c_lo - c_hi) * pow_[ju] * delta;
  }
  return std::max(0.0, s.value());
}

std::vector<double> TailKernel::tail_row(State x, State n_max) const {
  std::vector<double> row(static_cast<std::size_t>(n_max) + 1);
  for (State n = 0; n <= n_max; ++n) row[static_cast<std::size_t>(n)] = tail_point(x, n).value;
  return row;
}

// ---------------------------------------------------------------- free functions

double tail_R(const ChainParams& params, const StateDistribution& start, State n, double t,
              const TailOptions& opts) {
  const TailKernel kernel(params, t);
  const auto e = kernel.tail(start, n);
  if (e.abs_error > opts.max_rel_error * e.value) {
    throw ConditioningError(
        "tail_R: cancellation leaves too few correct digits at n = " + std::to_string(n) +
            ", t = " + std::to_string(t) + "; use the equilibrium limit I(n) or a smaller n",
        e.condition);
  }
  return e.value;
}

double transition(const ChainParams& params, State x, State y, double t) {
  return TailKernel(params, t).transition(x, y);
}

StateDistribution propagate(const ChainParams& params, const StateDistribution& start, double t,
                            double tol) {
  const TailKernel kernel(params, t);
  std::vector<double> tails;
  tails.push_back(1.0);
  State n = 0;
  while (true) {
    ++n;
    tails.push_back(kernel.tail(start, n).value);
    if (n > start.support_max() && tails.back() < tol) break;
    if (n > 100000) throw NonConvergenceError("propagate: truncation did not settle");
  }
  std::vector<double> w(static_cast<std::size_t>(n));
  for (State y = 0; y < n; ++y) {
    w[static_cast<std::size_t>(y)] =
        std::max(0.0, tails[static_cast<std::size_t>(y)] - tails[static_cast<std::size_t>(y) + 1]);
  }
  return StateDistribution::with_tail(std::move(w), tails.back());
}

StateDistribution transition_row(const ChainParams& params, State x, double t, double tol) {
  require_state(x, "transition_row");
  const TailKernel kernel(params, t);
  State n = x + 1;
  while (kernel.tail_point(x, n).value >= tol) ++n;
  // n is the first state whose tail is below tol; keep 0..n-1 explicit.
  std::vector<double> w(static_cast<std::size_t>(n));
  CompensatedSum total;
  for (State y = 0; y < n; ++y) {
    w[static_cast<std::size_t>(y)] = kernel.transition(x, y);
    total += w[static_cast<std::size_t>(y)];
  }
  const double tail = kernel.tail_point(x, n).value;
  // Rounding in the weights is absorbed by renormalising the explicit part.
  const double scale = (1.0 - tail) / total.value();
  for (double& v : w) v *= scale;
  return StateDistribution::with_tail(std::move(w), tail);
}

ReturnTimeReport return_time_mean(const ChainParams& params, State x) {
  require_state(x, "return_time_mean");
  const double theta = params.theta();
  const double mu = params.mu();
  const double pi_x = equilibrium(params).pmf(x);
  ReturnTimeReport r;
  r.derived = 1.0 / (params.exit_rate(x) * pi_x);
  r.printed = std::exp(log_pochhammer(theta + 1.0, static_cast<unsigned>(x)) -
                       x * std::log(theta)) /
              (mu * (theta + x) * (1.0 + x));
  r.discrepancy_factor = r.derived / r.printed;
  return r;
}

}  // namespace massdeath
