#pragma once

// Text formats. Every output file starts with '#' metadata lines
// (key=value) that are enough to regenerate it; readers skip them.
//
//   path file:      time,state         (first row is t = 0 and the initial state)
//   negjump file:   time,magnitude,post_state
//   magnitude file: one integer per line, or any CSV whose second column holds
//                   magnitudes (a negjump file qualifies)
//
// JSON goes through strings so the public interface has no JSON dependency.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "massdeath/infer.hpp"
#include "massdeath/predict.hpp"
#include "massdeath/sim.hpp"

namespace massdeath {

/// Ordered key=value pairs written as '# key=value' lines.
struct Metadata {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);  // %.17g
  void write(std::ostream& out) const;
  /// Value for `key`, or empty.
  std::string get(const std::string& key) const;
  static Metadata read(std::istream& in);  // consumes leading '#' lines only
};

/// Round-trip formatting of a double.
std::string format_double(double x);

void write_path(std::ostream& out, const SamplePath& path, const Metadata& meta = {});
SamplePath read_path(std::istream& in);

void write_negjumps(std::ostream& out, const NegJumpRecord& record, const Metadata& meta = {});
NegJumpRecord read_negjumps(std::istream& in);

/// Throws std::invalid_argument on a malformed line or a value below 1.
std::vector<int> read_magnitudes(std::istream& in);

/// Start law from a compact spec: "point:X", "geometric:P:NMAX" or "equilibrium".
StateDistribution parse_tau_spec(const std::string& spec, const ChainParams& params);

/// Parsed prediction query. tau is
///   {"weights": [...]}, {"family": "point", "x": k},
///   {"family": "geometric", "p": p, "n_max": N} or {"family": "equilibrium"};
/// rates are given by lambda and mu, or theta and mu.
PredictionQuery parse_prediction_query(const std::string& json);

/// {"probability", "expectation", "truncation_error", "weights_summary"}.
std::string prediction_response_json(const PredictionQuery& query,
                                     const PredictOptions& opts = {});

std::string estimate_report_json(const EstimateReport& report);

}  // namespace massdeath
