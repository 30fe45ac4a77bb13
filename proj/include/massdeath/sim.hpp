#pragma once

// Event-driven simulation through the jump chain and holding times, the
// observable negative-jump record, and exact densities of negative-jump
// observables.

#include <cstdint>
#include <optional>
#include <vector>

#include "massdeath/chain.hpp"
#include "massdeath/rng.hpp"

namespace massdeath {

/// Jump skeleton of a trajectory on [0, horizon]: X(t) = states[k] for
/// jump_times[k-1] <= t < jump_times[k], with states[0] the initial state.
struct SamplePath {
  std::vector<double> jump_times;
  std::vector<State> states;  // states.size() == jump_times.size() + 1
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  State state_at(double t) const;
  /// (1/horizon) * integral of f(X(s)) ds over [0, horizon].
  template <class F>
  double time_average(F&& f) const {
    double acc = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < jump_times.size(); ++k) {
      acc += f(states[k]) * (jump_times[k] - prev);
      prev = jump_times[k];
    }
    acc += f(states.back()) * (horizon - prev);
    return acc / horizon;
  }
};

/// Times, magnitudes and (optionally) post-jump states of the negative jumps.
struct NegJumpRecord {
  std::vector<double> times;
  std::vector<int> magnitudes;
  std::optional<std::vector<State>> post_states;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  /// Throws std::invalid_argument unless times are positive and strictly
  /// increasing, magnitudes >= 1, and post_states (if present) match in length.
  void validate() const;
};

/// One transition of the jump chain from `state`.
struct JumpDraw {
  double holding = 0.0;
  State next = 0;
};
JumpDraw draw_jump(const ChainParams& params, State state, CounterRng& rng);

/// Draws a state from `dist`; tail mass lands on max_state() + 1.
State draw_state(const StateDistribution& dist, CounterRng& rng);

/// Path on [0, horizon] from a random initial state; stream selects an
/// independent substream of seed. Throws std::invalid_argument for horizon <= 0.
SamplePath sample_path(const ChainParams& params, const StateDistribution& initial,
                       double horizon, std::uint64_t seed, std::uint64_t stream = 0);

/// Same, driven by a caller-owned generator.
SamplePath sample_path(const ChainParams& params, const StateDistribution& initial,
                       double horizon, CounterRng& rng);

NegJumpRecord extract_negjumps(const SamplePath& path);

/// Time to return to x after first leaving it, started at x.
double sample_return_time(const ChainParams& params, State x, CounterRng& rng);

/// First negative jump from x: its time, post-jump state and magnitude.
struct FirstNegJump {
  double time = 0.0;
  State post_state = 0;
  int magnitude = 0;
};
FirstNegJump sample_first_negjump(const ChainParams& params, State x, CounterRng& rng);

/// Joint density of (first negative-jump time, post state, magnitude) from x:
///   mu theta^nu / nu! e^{-(theta+x) mu t} (1 - e^{-mu t})^nu,  nu = x1 + d - x,
/// and zero when nu < 0.
double first_negjump_density(const ChainParams& params, State x, double t, State x1, int d);

/// Probability that exactly nu up-jumps precede the first negative jump from x:
/// (x+nu) theta^nu / (theta+x)_{nu+1}.
double first_negjump_upcount_mass(const ChainParams& params, State x, int nu);

/// Product of first_negjump_density factors along a record with post states.
double negjump_joint_density(const ChainParams& params, State x0, const NegJumpRecord& record);

}  // namespace massdeath
