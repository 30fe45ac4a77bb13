#include "massdeath/predict.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "massdeath/errors.hpp"
#include "massdeath/numeric.hpp"

namespace massdeath {

namespace {

void check_record(const NegJumpRecord& record, const char* who) {
  record.validate();
  if (record.empty()) throw std::invalid_argument(std::string(who) + ": empty record");
}

void check_options(const PredictOptions& opts) {
  if (!(opts.truncation_tol > 0.0 && opts.truncation_tol < 1.0)) {
    throw std::invalid_argument("predict: truncation_tol must lie in (0, 1)");
  }
  if (!(opts.max_rel_error > 0.0)) {
    throw std::invalid_argument("predict: max_rel_error must be positive");
  }
}

std::vector<TailKernel> level_kernels(const ChainParams& params, const NegJumpRecord& record) {
  std::vector<TailKernel> kernels;
  kernels.reserve(record.size());
  double prev = 0.0;
  for (double t : record.times) {
    kernels.emplace_back(params, t - prev);
    prev = t;
  }
  return kernels;
}

// tau as a plain vector; the tail atom sits at N+1.
std::vector<double> initial_vector(const StateDistribution& tau) {
  std::vector<double> v(tau.weights().begin(), tau.weights().end());
  if (tau.tail_mass() > 0.0) v.push_back(tau.tail_mass());
  return v;
}

// A weight vector rescaled to unit mass, with the log of the removed scale
// and the accumulated relative truncation.
struct Forward {
  std::vector<double> v;
  double log_scale = 0.0;
  double rel_trunc = 0.0;
};

void normalize(Forward& f, double total) {
  if (!(total > 0.0)) {
    throw UnderflowError("predict: a level of the forward recursion has zero mass");
  }
  for (double& w : f.v) w /= total;
  f.log_scale += std::log(total);
}

// R(delta_s, d) for every source s, with the rounding of the level total
// checked against the requested accuracy.
std::vector<double> level_tails(const TailKernel& kernel, const std::vector<double>& v, int d,
                                const PredictOptions& opts) {
  std::vector<double> tails(v.size(), 0.0);
  double total = 0.0, err = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) {
    if (v[s] == 0.0) continue;
    const auto e = kernel.tail_point(static_cast<State>(s), d);
    tails[s] = e.value;
    total += v[s] * e.value;
    err += v[s] * e.abs_error;
  }
  if (!(err <= opts.max_rel_error * total)) {
    throw ConditioningError("predict: the observed magnitude " + std::to_string(d) +
                                " over an interval of length " + std::to_string(kernel.t()) +
                                " is too improbable to resolve in double precision",
                            total > 0.0 ? err / total : INFINITY);
  }
  return tails;
}

// v'(x) = sum_s v(s) p(s, x + d). Row s stops once R(s, y+1) is below
// tol * R(s, d) or at rounding level; the dropped rest counts as truncation.
void step_magnitude(Forward& f, const TailKernel& kernel, int d, const PredictOptions& opts) {
  const auto tails = level_tails(kernel, f.v, d, opts);
  std::vector<double> next;
  double level = 0.0, dropped = 0.0;
  for (std::size_t si = 0; si < f.v.size(); ++si) {
    if (f.v[si] == 0.0) continue;
    const State s = static_cast<State>(si);
    level += f.v[si] * tails[si];
    for (State y = d;; ++y) {
      const auto x = static_cast<std::size_t>(y - d);
      if (next.size() <= x) next.resize(x + 1, 0.0);
      next[x] += f.v[si] * kernel.transition(s, y);
      const auto rest = kernel.tail_point(s, y + 1);
      if (y >= s && rest.value <= std::max(opts.truncation_tol * tails[si], 4.0 * rest.abs_error)) {
        dropped += f.v[si] * rest.value;
        break;
      }
    }
  }
  f.v = std::move(next);
  f.rel_trunc += dropped / level;
  normalize(f, std::accumulate(f.v.begin(), f.v.end(), 0.0));
}

// E_s[X(dt)] = sum_{x>=0} R(s, x+1), truncated like a row.
struct RowMean {
  std::vector<double> tails;  // R(s, x+1) for the kept x
  double dropped = 0.0;
};

RowMean row_mean(const TailKernel& kernel, State s, double tol) {
  RowMean r;
  CompensatedSum kept;
  for (State n = 1;; ++n) {
    const auto e = kernel.tail_point(s, n);
    const bool negligible = n > s && e.value <= std::max(tol * kept.value(), 4.0 * e.abs_error);
    if (!negligible) {
      r.tails.push_back(e.value);
      kept += e.value;
      continue;
    }
    // The rest is summed out to rounding level and reported as truncation.
    for (State m = n;; ++m) {
      const auto f = kernel.tail_point(s, m);
      r.dropped += f.value;
      if (f.value <= 4.0 * f.abs_error) break;
    }
    return r;
  }
}

// u'(x) = sum_s u(s) R(s, x+1): the forward step with the magnitude summed out.
void step_any(Forward& f, const TailKernel& kernel, const PredictOptions& opts) {
  std::vector<double> next;
  double dropped = 0.0;
  for (std::size_t si = 0; si < f.v.size(); ++si) {
    if (f.v[si] == 0.0) continue;
    const auto row = row_mean(kernel, static_cast<State>(si), opts.truncation_tol);
    if (next.size() < row.tails.size()) next.resize(row.tails.size(), 0.0);
    for (std::size_t x = 0; x < row.tails.size(); ++x) next[x] += f.v[si] * row.tails[x];
    dropped += f.v[si] * row.dropped;
  }
  f.v = std::move(next);
  const double level = std::accumulate(f.v.begin(), f.v.end(), 0.0);
  f.rel_trunc += dropped / (level + dropped);
  normalize(f, level);
}

// v_{n-1} for the given record.
Forward forward(const std::vector<TailKernel>& kernels, const StateDistribution& initial,
                const NegJumpRecord& record, const PredictOptions& opts) {
  Forward f;
  f.v = initial_vector(initial);
  for (std::size_t k = 0; k + 1 < record.size(); ++k) {
    step_magnitude(f, kernels[k], record.magnitudes[k], opts);
  }
  return f;
}

// log of sum_{d_1..d_n} D_n(t, d).
LogValue log_total(const std::vector<TailKernel>& kernels, const StateDistribution& initial,
                   const PredictOptions& opts) {
  Forward f;
  f.v = initial_vector(initial);
  for (const auto& kernel : kernels) step_any(f, kernel, opts);
  // After the last step the mass is sum_s u(s) E_s[X(dt_n)], already folded
  // into log_scale by normalize().
  return {f.log_scale, f.rel_trunc};
}

// sum_x tau(x) p(x, x_1+d_1) prod_k p(x_{k-1}, x_k+d_k).
double path_mass(const std::vector<TailKernel>& kernels, const StateDistribution& initial,
                 const NegJumpRecord& record, const std::vector<State>& states) {
  if (states.size() != record.size()) {
    throw std::invalid_argument("predict: need one post-jump state per observation");
  }
  for (State x : states) {
    if (x < 0) throw std::invalid_argument("predict: states must be non-negative");
  }
  const auto tau = initial_vector(initial);
  CompensatedSum first;
  for (std::size_t x = 0; x < tau.size(); ++x) {
    if (tau[x] == 0.0) continue;
    first += tau[x] * kernels[0].transition(static_cast<State>(x), states[0] + record.magnitudes[0]);
  }
  double mass = first.value();
  for (std::size_t k = 1; k < record.size(); ++k) {
    mass *= kernels[k].transition(states[k - 1], states[k] + record.magnitudes[k]);
  }
  return mass;
}

struct Weighted {
  std::vector<TailKernel> kernels;
  std::vector<double> m;     // normalized to one
  std::vector<double> tails;  // R(s, d_n)
  double log_d = 0.0;
  double rel_trunc = 0.0;
};

Weighted weighted(const ChainParams& params, const StateDistribution& initial,
                  const NegJumpRecord& record, const PredictOptions& opts) {
  check_options(opts);
  check_record(record, "predict");
  Weighted w;
  w.kernels = level_kernels(params, record);
  Forward f = forward(w.kernels, initial, record, opts);
  const int dn = record.magnitudes.back();
  w.tails = level_tails(w.kernels.back(), f.v, dn, opts);
  w.m.resize(f.v.size());
  double total = 0.0;
  for (std::size_t s = 0; s < f.v.size(); ++s) {
    w.m[s] = f.v[s] * w.tails[s];
    total += w.m[s];
  }
  if (!(total > 0.0)) throw UnderflowError("predict: the record has probability zero in double precision");
  for (double& x : w.m) x /= total;
  w.log_d = f.log_scale + std::log(total);
  w.rel_trunc = f.rel_trunc;
  return w;
}

}  // namespace

LogValue log_normalizer(const ChainParams& params, const StateDistribution& initial,
                        const NegJumpRecord& record, const PredictOptions& opts) {
  const auto w = weighted(params, initial, record, opts);
  return {w.log_d, w.rel_trunc};
}

double normalizer(const ChainParams& params, const StateDistribution& initial,
                  const NegJumpRecord& record, const PredictOptions& opts) {
  const auto lv = log_normalizer(params, initial, record, opts);
  if (lv.log_value < std::log(DBL_MIN)) {
    throw UnderflowError("normalizer: D_n = exp(" + std::to_string(lv.log_value) +
                         ") underflows; use log_normalizer");
  }
  return std::exp(lv.log_value);
}

PredictValue magnitude_law(const ChainParams& params, const StateDistribution& initial,
                           const NegJumpRecord& record, const PredictOptions& opts) {
  const auto w = weighted(params, initial, record, opts);
  const auto z = log_total(w.kernels, initial, opts);
  const double value = std::exp(w.log_d - z.log_value);
  return {value, value * (w.rel_trunc + z.rel_truncation_error)};
}

PredictValue state_law(const ChainParams& params, const StateDistribution& initial,
                       const NegJumpRecord& record, const std::vector<State>& states,
                       const PredictOptions& opts) {
  const auto w = weighted(params, initial, record, opts);
  const double mass = path_mass(w.kernels, initial, record, states);
  const double value = mass > 0.0 ? std::exp(std::log(mass) - w.log_d) : 0.0;
  return {value, value * w.rel_trunc};
}

PredictValue joint_law(const ChainParams& params, const StateDistribution& initial,
                       const NegJumpRecord& record, const std::vector<State>& states,
                       const PredictOptions& opts) {
  check_options(opts);
  check_record(record, "joint_law");
  const auto kernels = level_kernels(params, record);
  const auto z = log_total(kernels, initial, opts);
  const double mass = path_mass(kernels, initial, record, states);
  const double value = mass > 0.0 ? std::exp(std::log(mass) - z.log_value) : 0.0;
  return {value, value * z.rel_truncation_error};
}

WeightVector weights(const ChainParams& params, const StateDistribution& initial,
                     const NegJumpRecord& record, const PredictOptions& opts) {
  const auto w = weighted(params, initial, record, opts);
  WeightVector out;
  out.tail = std::min(w.rel_trunc, 1.0);
  out.weights = w.m;
  for (double& x : out.weights) x *= 1.0 - out.tail;
  return out;
}

PredictValue tail_unseen(const PredictionQuery& query, const PredictOptions& opts) {
  if (query.xi < 0) throw std::invalid_argument("tail_unseen: xi must be non-negative");
  const auto w = weighted(query.params, query.initial, query.record, opts);
  const int dn = query.record.magnitudes.back();
  const auto& kernel = w.kernels.back();
  CompensatedSum sum;
  for (std::size_t s = 0; s < w.m.size(); ++s) {
    if (w.m[s] == 0.0) continue;
    const double ratio =
        query.xi == 0 ? 1.0 : kernel.tail_point(static_cast<State>(s), dn + query.xi).value / w.tails[s];
    sum += w.m[s] * ratio;
  }
  const double value = std::clamp(sum.value(), 0.0, 1.0);
  return {value, w.rel_trunc};
}

PredictValue expected_unseen(const PredictionQuery& query, const PredictOptions& opts) {
  const auto w = weighted(query.params, query.initial, query.record, opts);
  const int dn = query.record.magnitudes.back();
  const auto& kernel = w.kernels.back();
  CompensatedSum sum;
  double dropped = 0.0;
  for (std::size_t si = 0; si < w.m.size(); ++si) {
    if (w.m[si] == 0.0) continue;
    const State s = static_cast<State>(si);
    // sum_{k>=1} R(s, max(k, d_n)) / R(s, d_n): the first d_n terms are 1 each.
    CompensatedSum inner;
    for (State k = 1;; ++k) {
      const auto e = kernel.tail_point(s, std::max(k, dn));
      const double ratio = e.value / w.tails[si];
      inner += ratio;
      if (k > dn && k > s && ratio <= std::max(opts.truncation_tol * 1e-4, 4.0 * e.abs_error / w.tails[si])) {
        dropped += w.m[si] * ratio;
        break;
      }
    }
    sum += w.m[si] * inner.value();
  }
  const double value = std::max(0.0, sum.value() - dn);
  return {value, dropped + value * w.rel_trunc};
}

}  // namespace massdeath
