#include "massdeath/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "massdeath/specfun.hpp"

namespace massdeath {

State SamplePath::state_at(double t) const {
  if (t < 0.0 || t > horizon) throw std::out_of_range("state_at: t outside [0, horizon]");
  // Number of jumps at or before t.
  const auto k = std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
  return states[static_cast<std::size_t>(k)];
}

void NegJumpRecord::validate() const {
  if (times.size() != magnitudes.size()) {
    throw std::invalid_argument("NegJumpRecord: times and magnitudes differ in length");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw std::invalid_argument("NegJumpRecord: times must be positive and strictly increasing");
    }
    if (magnitudes[k] < 1) throw std::invalid_argument("NegJumpRecord: magnitudes must be >= 1");
  }
  if (post_states) {
    if (post_states->size() != times.size()) {
      throw std::invalid_argument("NegJumpRecord: post_states length mismatch");
    }
    for (State s : *post_states) {
      if (s < 0) throw std::invalid_argument("NegJumpRecord: negative post state");
    }
  }
}

JumpDraw draw_jump(const ChainParams& params, State state, CounterRng& rng) {
  const double c = params.exit_rate(state);
  JumpDraw j;
  j.holding = rng.exponential(c);
  // Up with probability lambda / c, else uniform on 0..state-1.
  if (state == 0 || rng.uniform() * c < params.lambda()) {
    j.next = state + 1;
  } else {
    j.next = static_cast<State>(rng.below(static_cast<std::uint64_t>(state)));
  }
  return j;
}

State draw_state(const StateDistribution& dist, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const auto w = dist.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<State>(i);
  }
  // Rounding in acc or genuine tail mass.
  return dist.tail_mass() > 0.0 ? dist.max_state() + 1 : dist.max_state();
}

SamplePath sample_path(const ChainParams& params, const StateDistribution& initial,
                       double horizon, CounterRng& rng) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("sample_path: horizon must be positive and finite");
  }
  SamplePath path;
  path.horizon = horizon;
  State x = draw_state(initial, rng);
  path.states.push_back(x);
  double t = 0.0;
  for (;;) {
    const JumpDraw j = draw_jump(params, x, rng);
    t += j.holding;
    if (t > horizon) break;
    x = j.next;
    path.jump_times.push_back(t);
    path.states.push_back(x);
  }
  return path;
}

SamplePath sample_path(const ChainParams& params, const StateDistribution& initial,
                       double horizon, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  SamplePath path = sample_path(params, initial, horizon, rng);
  path.seed = seed;
  path.stream = stream;
  return path;
}

NegJumpRecord extract_negjumps(const SamplePath& path) {
  NegJumpRecord rec;
  rec.post_states.emplace();
  for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
    const State before = path.states[k];
    const State after = path.states[k + 1];
    if (after < before) {
      rec.times.push_back(path.jump_times[k]);
      rec.magnitudes.push_back(before - after);
      rec.post_states->push_back(after);
    }
  }
  return rec;
}

double sample_return_time(const ChainParams& params, State x, CounterRng& rng) {
  State s = x;
  double t = 0.0;
  do {
    const JumpDraw j = draw_jump(params, s, rng);
    t += j.holding;
    s = j.next;
  } while (s != x);
  return t;
}

FirstNegJump sample_first_negjump(const ChainParams& params, State x, CounterRng& rng) {
  State s = x;
  double t = 0.0;
  for (;;) {
    const JumpDraw j = draw_jump(params, s, rng);
    t += j.holding;
    if (j.next < s) return {t, j.next, s - j.next};
    s = j.next;
  }
}

double first_negjump_density(const ChainParams& params, State x, double t, State x1, int d) {
  if (x < 0 || x1 < 0 || d < 1) throw std::invalid_argument("first_negjump_density: bad state");
  if (!(t > 0.0)) return 0.0;
  const int nu = x1 + d - x;
  if (nu < 0) return 0.0;
  const double theta = params.theta(), mu = params.mu();
  const double log_f = std::log(mu) + nu * std::log(theta) - std::lgamma(nu + 1.0) -
                       (theta + x) * mu * t + nu * std::log(-std::expm1(-mu * t));
  return std::exp(log_f);
}

double first_negjump_upcount_mass(const ChainParams& params, State x, int nu) {
  if (x < 0 || nu < 0) throw std::invalid_argument("first_negjump_upcount_mass: bad argument");
  const double theta = params.theta();
  if (x + nu == 0) return 0.0;
  return std::exp(std::log(static_cast<double>(x + nu)) + nu * std::log(theta) -
                  log_pochhammer(theta + x, static_cast<unsigned>(nu) + 1));
}

double negjump_joint_density(const ChainParams& params, State x0, const NegJumpRecord& record) {
  record.validate();
  if (record.empty()) throw std::invalid_argument("negjump_joint_density: empty record");
  if (!record.post_states) {
    throw std::invalid_argument("negjump_joint_density: post states required");
  }
  double density = 1.0;
  State prev_state = x0;
  double prev_time = 0.0;
  for (std::size_t k = 0; k < record.size(); ++k) {
    const State xk = (*record.post_states)[k];
    density *= first_negjump_density(params, prev_state, record.times[k] - prev_time, xk,
                                     record.magnitudes[k]);
    if (density == 0.0) return 0.0;
    prev_state = xk;
    prev_time = record.times[k];
  }
  return density;
}

}  // namespace massdeath
