#include "massdeath/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "massdeath/numeric.hpp"
#include "massdeath/specfun.hpp"

namespace massdeath {

namespace {

constexpr double kCutoff = 1e-16;     // exact side: weighted tail bound where terms stop
constexpr double kBoundCutoff = 1e-18;  // bound side: I(n) below this is dropped
constexpr double kRemainderFloor = 1e-30;

// Up-jumps arrive at rate lambda whatever the state, so X(t) <= X(0) + N(t)
// with N(t) ~ Poisson(lambda t). Hence R_t(tau, n) <= P(N(t) >= n - S).
double upjump_tail(double lambda_t, int k) {
  if (k <= 0) return 1.0;
  if (lambda_t == 0.0) return 0.0;
  return reg_lower_gamma(static_cast<double>(k), lambda_t);
}

// R_t(tau, n) - I(n) for n = 1..N with rounding budgets, plus a rigorous
// bound on what lies beyond N.
struct ExactProfile {
  std::vector<double> diff;   // diff[n] for n in 0..N (diff[0] = 0)
  std::vector<double> err;    // rounding bound per entry
  int support = 0;
  double lambda_t = 0.0;
  double theta = 0.0;

  int last() const { return static_cast<int>(diff.size()) - 1; }

  // Bound on sum_{n > N} w(n) |R(n) - I(n)|.
  double remainder(const std::function<double(int)>& w) const {
    double total = 0.0;
    for (int n = last() + 1;; ++n) {
      const double term = w(n) * (upjump_tail(lambda_t, n - support) + equilibrium_tail(theta, n));
      total += term;
      if (term < kRemainderFloor && n > support + lambda_t + 10) break;
      if (n > last() + 100000) break;
    }
    return total;
  }
};

// Explicit terms continue until n^m times the tail dominator drops below kCutoff.
ExactProfile exact_profile(const ChainParams& params, const StateDistribution& tau, double t,
                           int m = 1) {
  ExactProfile p;
  p.support = tau.support_max();
  p.lambda_t = params.lambda() * t;
  p.theta = params.theta();
  const TailKernel kernel(params, t);
  p.diff.push_back(0.0);
  p.err.push_back(0.0);
  for (int n = 1;; ++n) {
    const auto e = kernel.tail(tau, n);
    const double eq = equilibrium_tail(p.theta, n);
    p.diff.push_back(e.value - eq);
    p.err.push_back(e.abs_error + 4.0 * std::numeric_limits<double>::epsilon() * eq);
    const double dominator =
        upjump_tail(p.lambda_t, n + 1 - p.support) + equilibrium_tail(p.theta, n + 1);
    if (n > p.support && dominator * std::pow(n + 1.0, m) < kCutoff) {
      break;
    }
  }
  return p;
}

// Delta(n) = tau([n, inf)) - I(n) for n = 1..N.
std::vector<double> start_deltas(const ChainParams& params, const StateDistribution& tau) {
  std::vector<double> d{0.0};
  const int support = tau.support_max();
  for (int n = 1;; ++n) {
    const double eq = equilibrium_tail(params.theta(), n);
    d.push_back(tau.survival(n) - eq);
    if (n > support && eq < kBoundCutoff) break;
  }
  return d;
}

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::kolmogorov:
      return "kolmogorov";
    case BoundKind::moment:
      return "moment";
    case BoundKind::gini:
      return "gini";
  }
  return "unknown";
}

double decay_factor(const ChainParams& params, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("decay_factor: t must be non-negative");
  const double mt = params.mu() * t;
  return std::exp(-mt - params.theta() * (std::expm1(-mt) + mt));
}

BoundReport kolmogorov_bound(const ChainParams& params, const StateDistribution& initial,
                             double t) {
  const ExactProfile prof = exact_profile(params, initial, t);
  BoundReport r;
  r.kind = BoundKind::kolmogorov;
  r.t = t;
  double max_err = 0.0;
  for (int n = 1; n <= prof.last(); ++n) {
    r.exact = std::max(r.exact, std::abs(prof.diff[n]));
    max_err = std::max(max_err, prof.err[n]);
  }
  // Beyond N every |R - I| is below the first remainder term.
  r.rounding = max_err;
  r.truncation = prof.remainder([&](int n) { return n == prof.last() + 1 ? 1.0 : 0.0; });
  double sup_delta = 0.0;
  for (double d : start_deltas(params, initial)) sup_delta = std::max(sup_delta, std::abs(d));
  r.bound = sup_delta * decay_factor(params, t);
  return r;
}

double h_weight(const ChainParams& params, int m, double x) {
  if (m < 1) throw std::invalid_argument("h_weight: m must be >= 1");
  if (!(x >= 0.0)) throw std::invalid_argument("h_weight: x must be non-negative");
  const double theta = params.theta();
  double total = 0.0;
  for (int j = 0; j <= m - 1; ++j) {
    // Poisson(theta) moment E[rho^j] = sum_k S(j, k) theta^k.
    double moment = 0.0;
    for (int k = 0; k <= j; ++k) {
      moment += static_cast<double>(stirling2(static_cast<unsigned>(j), static_cast<unsigned>(k))) *
                std::pow(theta, k);
    }
    total += binomial(m - 1, j) * std::pow(x, m - 1 - j) * moment;
  }
  return total;
}

double kr_functional(const ChainParams& params, const StateDistribution& initial, int m) {
  if (m < 1) throw std::invalid_argument("kr_functional: m must be >= 1");
  // On [n-1, n) the cdf gap is |Delta(n)|; the integral of h_m over that
  // interval is (h_{m+1}(n) - h_{m+1}(n-1)) / m.
  const auto delta = start_deltas(params, initial);
  CompensatedSum sum;
  double h_prev = h_weight(params, m + 1, 0.0);
  for (std::size_t n = 1; n < delta.size(); ++n) {
    const double h_next = h_weight(params, m + 1, static_cast<double>(n));
    sum += std::abs(delta[n]) * (h_next - h_prev) / m;
    h_prev = h_next;
  }
  return sum.value();
}

BoundReport moment_bound(const ChainParams& params, const StateDistribution& initial, int m,
                         double t) {
  if (m < 1) throw std::invalid_argument("moment_bound: m must be >= 1");
  const ExactProfile prof = exact_profile(params, initial, t, m);
  auto w = [m](int n) { return std::pow(n, m) - std::pow(n - 1.0, m); };
  BoundReport r;
  r.kind = BoundKind::moment;
  r.m = m;
  r.t = t;
  CompensatedSum sum;
  double err = 0.0;
  for (int n = 1; n <= prof.last(); ++n) {
    sum += w(n) * prof.diff[n];
    err += w(n) * prof.err[n];
  }
  r.exact = std::abs(sum.value());
  r.rounding = err;
  r.truncation = prof.remainder(w);
  r.bound = m * kr_functional(params, initial, m) * decay_factor(params, t);
  return r;
}

BoundReport gini_bound(const ChainParams& params, const StateDistribution& initial, double t) {
  const ExactProfile prof = exact_profile(params, initial, t);
  BoundReport r;
  r.kind = BoundKind::gini;
  r.t = t;
  CompensatedSum sum;
  double err = 0.0;
  for (int n = 1; n <= prof.last(); ++n) {
    sum += std::abs(prof.diff[n]);
    err += prof.err[n];
  }
  r.exact = sum.value();
  r.rounding = err;
  r.truncation = prof.remainder([](int) { return 1.0; });
  CompensatedSum start;
  for (double d : start_deltas(params, initial)) start += std::abs(d);
  r.bound = decay_factor(params, t) * start.value();
  return r;
}

std::string bound_csv_header() { return "kind,m,t,theta,mu,tau,exact,bound,ratio"; }

std::string bound_csv_row(const BoundReport& r, const ChainParams& params,
                          const std::string& tau_id) {
  char buf[256];
  const double ratio = r.bound > 0.0 ? r.exact / r.bound : 0.0;
  std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g",
                to_string(r.kind).c_str(), r.m, r.t, params.theta(), params.mu(), tau_id.c_str(),
                r.exact, r.bound, ratio);
  return buf;
}

}  // namespace massdeath
