#include "massdeath/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "massdeath/errors.hpp"
#include "massdeath/numeric.hpp"

namespace massdeath {

namespace {

constexpr unsigned kDirectProductLimit = 30;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// D(theta) and its first two derivatives, summed term by term.
//
// With P_n = (theta+1)_{n+1}, S1 = sum_{k<=n+1} 1/(theta+k) and S2 the same
// with squares, the n-th term theta^n / P_n has derivatives
//   (n theta^{n-1} - S1 theta^n) / P_n
//   (n(n-1) theta^{n-2} - 2 n S1 theta^{n-1} + (S1^2 + S2) theta^n) / P_n,
// written without negative powers of theta so theta = 0 is not special.
struct DSeries {
  double d0 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  std::size_t terms = 0;
};

DSeries d_series(double theta) {
  constexpr std::size_t kMaxTerms = 2000000;
  constexpr double kStopTol = 1e-18;

  CompensatedSum s0, s1, s2;
  double p0 = 1.0 / (theta + 1.0);  // theta^n / P_n
  double u = 0.0;                   // theta^{n-1} / P_n, n >= 1
  double w = 0.0;                   // theta^{n-2} / P_n, n >= 2
  double h1 = 1.0 / (theta + 1.0);
  double h2 = h1 * h1;
  double prev_m2 = std::numeric_limits<double>::infinity();

  for (std::size_t n = 0; n < kMaxTerms; ++n) {
    if (n > 0) {
      const double step = 1.0 / (theta + static_cast<double>(n) + 1.0);
      h1 += step;
      h2 += step * step;
      if (n == 1) {
        u = p0 * step;  // 1 / P_1
      } else {
        u *= theta * step;
      }
      if (n == 2) {
        w = 1.0 / ((theta + 1.0) * (theta + 2.0) * (theta + 3.0));
      } else if (n > 2) {
        w *= theta * step;
      }
      p0 *= theta * step;
    }
    const double nn = static_cast<double>(n);
    const double a1 = n >= 1 ? nn * u : 0.0;
    const double a2 = n >= 2 ? nn * (nn - 1.0) * w : 0.0;
    const double t0 = p0;
    const double t1 = a1 - h1 * p0;
    const double t2 = a2 - 2.0 * h1 * a1 + (h1 * h1 + h2) * p0;
    s0 += t0;
    s1 += t1;
    s2 += t2;

    const double m1 = a1 + h1 * p0;
    const double m2 = a2 + 2.0 * h1 * a1 + (h1 * h1 + h2) * p0;
    if (n >= 2 && m2 <= prev_m2 && t0 <= kStopTol * s0.value() &&
        m1 <= kStopTol * s1.magnitude() && m2 <= kStopTol * s2.magnitude()) {
      return {s0.value(), s1.value(), s2.value(), n + 1};
    }
    prev_m2 = m2;
  }
  throw NonConvergenceError("link series did not converge at theta = " +
                            std::to_string(theta));
}

}  // namespace

double log_pochhammer(double a, unsigned n) {
  if (n == 0) return 0.0;
  if (!(a > 0.0)) {
    throw std::invalid_argument("log_pochhammer: a must be positive");
  }
  if (n <= 4096) {
    CompensatedSum s;
    for (unsigned i = 0; i < n; ++i) s += std::log(a + i);
    return s.value();
  }
  return std::lgamma(a + n) - std::lgamma(a);
}

double pochhammer(double a, unsigned n) {
  if (n == 0) return 1.0;
  if (!(a > 0.0)) {
    throw std::invalid_argument("pochhammer: a must be positive when n >= 1");
  }
  if (n <= kDirectProductLimit) {
    double p = 1.0;
    for (unsigned i = 0; i < n; ++i) p *= a + i;
    return p;
  }
  return std::exp(log_pochhammer(a, n));
}

double kummer_1b(double b, double z, const SeriesOptions& opts) {
  return kummer(1.0, b, z, opts);
}

double kummer(double a, double b, double z, const SeriesOptions& opts) {
  if (!(a > 0.0) || !(b > 0.0) || !(z >= 0.0)) {
    throw std::invalid_argument("kummer: requires a > 0, b > 0, z >= 0");
  }
  CompensatedSum sum;
  double term = 1.0;
  sum += term;
  for (std::size_t n = 1; n < opts.max_terms; ++n) {
    const double nn = static_cast<double>(n);
    term *= (a + nn - 1.0) * z / ((b + nn - 1.0) * nn);
    sum += term;
    const bool decreasing = (a + nn) * z < (b + nn) * (nn + 1.0);
    if (decreasing && term <= opts.rel_tol * sum.value()) return sum.value();
  }
  throw NonConvergenceError("kummer: term cap reached");
}

double link_denominator(double theta) {
  if (!(theta >= 0.0)) {
    throw std::invalid_argument("link_denominator: theta must be non-negative");
  }
  return d_series(theta).d0;
}

double link_denominator_alternating(double theta) {
  if (!(theta >= 0.0)) {
    throw std::invalid_argument("link_denominator_alternating: theta must be non-negative");
  }
  CompensatedSum sum;
  double a = 1.0;  // (-theta)^k / k!
  for (std::size_t k = 0; k < 100000; ++k) {
    const double kk = static_cast<double>(k);
    if (k > 0) a *= -theta / kk;
    const double term = a / (theta + 1.0 + kk);
    sum += term;
    if (kk > theta && std::abs(term) <= 1e-18 * std::abs(sum.value())) {
      return std::exp(theta) * sum.value();
    }
  }
  throw NonConvergenceError("link_denominator_alternating: term cap reached");
}

double link_denominator_gamma(double theta) {
  if (!(theta >= 0.0)) {
    throw std::invalid_argument("link_denominator_gamma: theta must be non-negative");
  }
  if (theta == 0.0) return 1.0;
  const double log_pref =
      theta + std::lgamma(theta + 1.0) - (theta + 1.0) * std::log(theta);
  return std::exp(log_pref) * reg_lower_gamma(theta + 1.0, theta);
}

KummerLinkSeries kummer_link_series(double theta) {
  if (!(theta >= 0.0)) {
    throw std::invalid_argument("kummer_link_series: theta must be non-negative");
  }
  const DSeries d = d_series(theta);
  return {1.0 + theta * d.d0, d.d0 + theta * d.d1, 2.0 * d.d1 + theta * d.d2};
}

LinkEval eval_L_series(double theta) {
  if (!(theta >= 0.0)) {
    throw std::invalid_argument("eval_L: theta must be non-negative");
  }
  const DSeries d = d_series(theta);
  LinkEval out;
  out.theta = theta;
  out.value = 1.0 / d.d0;
  out.d1 = -d.d1 / (d.d0 * d.d0);
  out.d2 = (2.0 * d.d1 * d.d1 - d.d0 * d.d2) / (d.d0 * d.d0 * d.d0);
  out.regime = LinkRegime::series;
  out.est_rel_err = static_cast<double>(d.terms) * kEps;
  return out;
}

LinkEval eval_L_asymptotic(double theta, int order) {
  if (!(theta > 0.0)) {
    throw std::invalid_argument("eval_L_asymptotic: theta must be positive");
  }
  const AsymCoeffs& c = order == 5 ? default_asym_coeffs() : asym_coeffs(order);
  const double root = std::sqrt(theta);
  double value = 0.0, d1 = 0.0, d2 = 0.0, last = 0.0;
  // L ~ sum_s k_s theta^{(1-s)/2}; differentiate term by term.
  for (int s = order; s >= 0; --s) {
    const double e = 0.5 * (1.0 - s);
    const double term = c.k[s] * std::pow(root, 1.0 - s);
    value += term;
    d1 += term * e / theta;
    d2 += term * e * (e - 1.0) / (theta * theta);
    if (s == order) last = term;
  }
  LinkEval out;
  out.theta = theta;
  out.value = value;
  out.d1 = d1;
  out.d2 = d2;
  out.regime = LinkRegime::asymptotic;
  out.est_rel_err = std::abs(last / value);
  return out;
}

LinkEval eval_L(double theta) {
  if (!(theta >= 0.0)) {
    throw std::invalid_argument("eval_L: theta must be non-negative");
  }
  if (theta < link_switchover) return eval_L_series(theta);
  return eval_L_asymptotic(theta, 5);
}

AsymCoeffs asym_coeffs(int max_order) {
  if (max_order < 0 || max_order > 5) {
    throw std::invalid_argument("asym_coeffs: max_order must lie in [0, 5]");
  }
  // Incomplete-gamma expansion coefficients A_s(0), B_s(0).
  static constexpr double A[6] = {1.0, 0.0, 1.0 / 12.0, 0.0, 1.0 / 288.0, 0.0};
  static constexpr double B[6] = {0.0, 1.0 / 3.0, 0.0, 4.0 / 135.0, 0.0, -8.0 / 2835.0};
  const double root_half_pi = std::sqrt(std::numbers::pi / 2.0);

  AsymCoeffs c;
  c.max_order = max_order;
  const auto n = static_cast<std::size_t>(max_order) + 1;
  c.f.resize(n);
  for (std::size_t s = 0; s < n; ++s) c.f[s] = root_half_pi * A[s] + B[s];
  // theta D(theta) carries a trailing -1, which lands in the theta^{-1/2} slot.
  if (n > 1) c.f[1] -= 1.0;

  c.k.resize(n);
  c.k[0] = 1.0 / c.f[0];
  for (std::size_t s = 1; s < n; ++s) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= s; ++i) acc += c.f[i] * c.k[s - i];
    c.k[s] = -c.k[0] * acc;
  }

  c.alpha.resize(n);
  c.alpha[0] = 1.0 - c.k[0] * c.k[0];
  for (std::size_t m = 1; m < n; ++m) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= m; ++j) acc += c.k[j] * c.k[m - j];
    c.alpha[m] = c.k[m - 1] - acc;
  }

  // l_j = (1 - j/2) k_{j-1} is the theta^{-j/2} coefficient of L'.
  std::vector<double> l(n + 1, 0.0);
  for (std::size_t j = 1; j <= n; ++j) {
    l[j] = (1.0 - 0.5 * static_cast<double>(j)) * c.k[j - 1];
  }
  c.b.assign(n + 2, 0.0);
  for (std::size_t m = 2; m < n + 2; ++m) {
    double acc = 0.0;
    for (std::size_t j = 1; j < m; ++j) acc += l[j] * l[m - j];
    c.b[m] = acc;
  }
  return c;
}

const AsymCoeffs& default_asym_coeffs() {
  static const AsymCoeffs table = asym_coeffs(5);
  return table;
}

double trunc_exp(unsigned nu, double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("trunc_exp: x must be non-negative");
  CompensatedSum sum;
  double term = 1.0;
  sum += term;
  for (unsigned k = 1; k <= nu; ++k) {
    term *= x / k;
    sum += term;
  }
  return sum.value();
}

std::uint64_t stirling2(unsigned n, unsigned k) {
  if (k > n) throw std::invalid_argument("stirling2: k must not exceed n");
  // row[j] holds S(i, j) for the current i.
  std::vector<std::uint64_t> row(n + 1, 0);
  row[0] = 1;
  for (unsigned i = 1; i <= n; ++i) {
    for (unsigned j = std::min(i, k); j >= 1; --j) {
      std::uint64_t scaled = 0, next = 0;
      if (__builtin_mul_overflow(static_cast<std::uint64_t>(j), row[j], &scaled) ||
          __builtin_add_overflow(scaled, row[j - 1], &next)) {
        throw std::overflow_error("stirling2: result exceeds 64 bits");
      }
      row[j] = next;
    }
    row[0] = 0;
  }
  return row[k];
}

double reg_lower_gamma(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw std::invalid_argument("reg_lower_gamma: requires a > 0, x >= 0");
  }
  if (x == 0.0) return 0.0;
  return boost::math::gamma_p(a, x);
}

double inverse_square_tail(std::uint64_t m) {
  return boost::math::trigamma(static_cast<double>(m) + 1.0);
}

}  // namespace massdeath
