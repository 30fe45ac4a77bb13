#pragma once

// Conditional laws given the observed negative jumps: the normalizer D_n,
// the magnitude law, the law of the post-jump states, and predictions of
// the unseen count X(t_n) right after the last observation.
//
// Nested state sums are evaluated by forward propagation of a weight vector,
// rescaled at each level with the log scale carried separately:
//   v_0 = tau,   v_k(x) = sum_s v_{k-1}(s) p_{dt_k}(s, x + d_k),
//   D_n = sum_s v_{n-1}(s) R_{dt_n}(delta_s, d_n).

#include <vector>

#include "massdeath/chain.hpp"
#include "massdeath/sim.hpp"

namespace massdeath {

struct PredictOptions {
  /// Per-source truncation: a row stops once its remaining tail is below this.
  double truncation_tol = kDefaultTruncationTol;
  /// Largest tolerated relative rounding error of any level.
  double max_rel_error = 1e-6;
};

struct PredictionQuery {
  ChainParams params;
  StateDistribution initial;
  NegJumpRecord record;  // times and magnitudes; post_states ignored
  int xi = 0;
};

/// A probability or expectation with an estimate of the error due to
/// state truncation.
struct PredictValue {
  double value = 0.0;
  double truncation_error = 0.0;
};

struct LogValue {
  double log_value = 0.0;
  double rel_truncation_error = 0.0;
};

/// m_{n-1}(s) over s = 0..N; weights sum to 1 - tail.
struct WeightVector {
  std::vector<double> weights;
  double tail = 0.0;
};

/// D_n(t, d). Throws UnderflowError when D_n is below the smallest normal
/// double (use log_normalizer), ConditioningError when cancellation in the
/// transition function leaves too few digits.
double normalizer(const ChainParams& params, const StateDistribution& initial,
                  const NegJumpRecord& record, const PredictOptions& opts = {});

LogValue log_normalizer(const ChainParams& params, const StateDistribution& initial,
                        const NegJumpRecord& record, const PredictOptions& opts = {});

/// P(magnitudes = d | negative jumps at t): D_n(t, d) / sum_{d'} D_n(t, d').
PredictValue magnitude_law(const ChainParams& params, const StateDistribution& initial,
                           const NegJumpRecord& record, const PredictOptions& opts = {});

/// P(X(t_1) = x_1, ..., X(t_n) = x_n | jumps of magnitude d at t).
PredictValue state_law(const ChainParams& params, const StateDistribution& initial,
                       const NegJumpRecord& record, const std::vector<State>& states,
                       const PredictOptions& opts = {});

/// P(magnitudes = d, X(t_k) = x_k for all k | negative jumps at t).
PredictValue joint_law(const ChainParams& params, const StateDistribution& initial,
                       const NegJumpRecord& record, const std::vector<State>& states,
                       const PredictOptions& opts = {});

/// m_{n-1}(s) = v_{n-1}(s) R_{dt_n}(delta_s, d_n) / D_n.
WeightVector weights(const ChainParams& params, const StateDistribution& initial,
                     const NegJumpRecord& record, const PredictOptions& opts = {});

/// P(X(t_n) >= xi | H) = sum_s m(s) R(delta_s, d_n + xi) / R(delta_s, d_n).
PredictValue tail_unseen(const PredictionQuery& query, const PredictOptions& opts = {});

/// E[X(t_n) | H] = sum_s m(s) sum_{k>=1} R(delta_s, max(k, d_n)) / R(delta_s, d_n) - d_n.
PredictValue expected_unseen(const PredictionQuery& query, const PredictOptions& opts = {});

}  // namespace massdeath
