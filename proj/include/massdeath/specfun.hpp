#pragma once

// Special functions behind the chain: Pochhammer symbols, the Kummer
// function M(1, b, z), the link function L(theta) = theta / (M(1, theta+1,
// theta) - 1) with its first two derivatives, and the large-theta expansion
// coefficients used to evaluate L far from the origin.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace massdeath {

/// Rising factorial (a)_n = a (a+1) ... (a+n-1), with (a)_0 = 1.
/// Requires a > 0 unless n == 0. Products longer than 30 factors are
/// evaluated through log-gamma.
double pochhammer(double a, unsigned n);

/// log (a)_n for a > 0.
double log_pochhammer(double a, unsigned n);

struct SeriesOptions {
  double rel_tol = 1e-15;
  std::size_t max_terms = 100000;
};

/// Kummer's M(1, b, z) = sum_n z^n / (b)_n for b > 0, z >= 0.
double kummer_1b(double b, double z, const SeriesOptions& opts = {});

/// General M(a, b, z) = sum_n (a)_n z^n / ((b)_n n!) for a > 0, b > 0, z >= 0.
/// Only the shifted cases M(1+k, theta+1+k, theta) are needed here.
double kummer(double a, double b, double z, const SeriesOptions& opts = {});

/// D(theta) = sum_n theta^n / (theta+1)_{n+1} = (M(1, theta+1, theta) - 1) / theta,
/// with D(0) = 1. L(theta) = 1 / D(theta).
double link_denominator(double theta);

/// D(theta) from the alternating expansion of the lower incomplete gamma
/// function, e^theta * sum_k (-theta)^k / (k! (theta+1+k)). Loses roughly
/// 2*theta/ln(10) digits to cancellation, so it is only a cross-check for
/// small theta.
double link_denominator_alternating(double theta);

/// D(theta) = e^theta Gamma(theta+1) theta^-(theta+1) P(theta+1, theta),
/// through the regularized incomplete gamma function.
double link_denominator_gamma(double theta);

/// Values and derivatives of l(theta) = M(1, theta+1, theta) by term-wise
/// differentiation of its series.
struct KummerLinkSeries {
  double l = 0.0;
  double dl = 0.0;
  double d2l = 0.0;
};
KummerLinkSeries kummer_link_series(double theta);

enum class LinkRegime { series, asymptotic };

struct LinkEval {
  double theta = 0.0;
  double value = 1.0;  // L(theta)
  double d1 = 0.5;     // L'(theta)
  double d2 = 0.0;     // L''(theta)
  LinkRegime regime = LinkRegime::series;
  double est_rel_err = 0.0;
};

/// Switchover between the series and asymptotic evaluations of L.
inline constexpr double link_switchover = 60.0;

/// L, L', L'' at theta >= 0, using the series below link_switchover and the
/// asymptotic expansion (order 5) above it.
LinkEval eval_L(double theta);

/// Series route, valid for all theta >= 0 but slow and increasingly
/// cancellation-prone in L'' for large theta.
LinkEval eval_L_series(double theta);

/// Asymptotic route L ~ sum_s k_s theta^{(1-s)/2}, truncated after k_order.
LinkEval eval_L_asymptotic(double theta, int order = 5);

/// Coefficients of the large-theta expansions.
///   sqrt(theta) D(theta)       ~ sum_s f[s] theta^{-s/2}
///   L(theta) / sqrt(theta)     ~ sum_s k[s] theta^{-s/2}
///   theta + L (1 - L)          ~ alpha[0] theta + sum_{n>=1} alpha[n] theta^{1 - n/2}
///   L'(theta)^2                ~ sum_{n>=2} b[n] theta^{-n/2}
/// alpha[0] = 1 - k0^2 = (pi - 2) / pi; b[0] = b[1] = 0.
struct AsymCoeffs {
  std::vector<double> f;
  std::vector<double> k;
  std::vector<double> alpha;
  std::vector<double> b;
  int max_order = 0;
};

/// Throws std::invalid_argument for max_order outside [0, 5]; the tabulated
/// incomplete-gamma coefficients stop at order 5.
AsymCoeffs asym_coeffs(int max_order);

/// Shared immutable order-5 table.
const AsymCoeffs& default_asym_coeffs();

/// e_nu(x) = sum_{k=0}^{nu} x^k / k!.
double trunc_exp(unsigned nu, double x);

/// Stirling numbers of the second kind, S(n, k). Throws for k > n and on
/// 64-bit overflow.
std::uint64_t stirling2(unsigned n, unsigned k);

/// Regularized lower incomplete gamma P(a, x).
double reg_lower_gamma(double a, double x);

/// sum_{k >= m+1} 1/k^2.
double inverse_square_tail(std::uint64_t m);

}  // namespace massdeath
