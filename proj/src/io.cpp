#include "massdeath/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace massdeath {

namespace {

using nlohmann::json;

bool skip_line(const std::string& line) {
  return line.empty() || line[0] == '#' || line == "\r";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    out.push_back(cell);
  }
  // getline drops a trailing empty field.
  if (!line.empty() && (line.back() == ',' || (line.size() > 1 && line.ends_with(",\r")))) {
    out.emplace_back();
  }
  return out;
}

double to_double(const std::string& s, int line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw std::invalid_argument("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
  return v;
}

long to_long(const std::string& s, int line_no) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw std::invalid_argument("line " + std::to_string(line_no) + ": not an integer: '" + s + "'");
  }
  return v;
}

// Data rows of a CSV file with the given header, as split cells.
std::vector<std::vector<std::string>> read_table(std::istream& in, const std::string& header,
                                                 std::size_t columns) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    if (!seen_header) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line != header) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": expected header '" +
                                    header + "'");
      }
      seen_header = true;
      continue;
    }
    auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(cells));
  }
  if (!seen_header) throw std::invalid_argument("missing header '" + header + "'");
  return rows;
}

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw std::invalid_argument(std::string("query: '") + key + "' must be a number");
  }
  return j[key].get<double>();
}

ChainParams parse_params(const json& j) {
  const double mu = number(j, "mu");
  if (j.contains("lambda") && j.contains("theta")) {
    throw std::invalid_argument("query: give lambda or theta, not both");
  }
  if (j.contains("lambda")) return ChainParams::from_rates(number(j, "lambda"), mu);
  if (j.contains("theta")) return ChainParams::from_ratio(number(j, "theta"), mu);
  throw std::invalid_argument("query: 'lambda' or 'theta' is required");
}

StateDistribution parse_tau(const json& j, const ChainParams& params) {
  if (!j.is_object()) throw std::invalid_argument("query: 'tau' must be an object");
  if (j.contains("weights")) {
    return StateDistribution::from_weights(j["weights"].get<std::vector<double>>());
  }
  const std::string family = j.value("family", "");
  if (family == "point") return StateDistribution::point_mass(static_cast<State>(number(j, "x")));
  if (family == "geometric") {
    return StateDistribution::truncated_geometric(number(j, "p"), static_cast<State>(number(j, "n_max")));
  }
  if (family == "equilibrium") return equilibrium(params).to_distribution(1e-16);
  throw std::invalid_argument("query: unknown tau family '" + family + "'");
}

}  // namespace

void Metadata::add(const std::string& key, const std::string& value) {
  entries.emplace_back(key, value);
}

void Metadata::add(const std::string& key, double value) { add(key, format_double(value)); }

void Metadata::write(std::ostream& out) const {
  for (const auto& [k, v] : entries) out << "# " << k << '=' << v << '\n';
}

std::string Metadata::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return {};
}

Metadata Metadata::read(std::istream& in) {
  Metadata m;
  while (in.peek() == '#') {
    std::string line;
    std::getline(in, line);
    const auto start = line.find_first_not_of("# ");
    if (start == std::string::npos) continue;
    const auto body = line.substr(start);
    const auto eq = body.find('=');
    if (eq != std::string::npos) m.add(body.substr(0, eq), body.substr(eq + 1));
  }
  return m;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_path(std::ostream& out, const SamplePath& path, const Metadata& meta) {
  meta.write(out);
  out << "time,state\n";
  out << "0," << path.states.front() << '\n';
  for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
    out << format_double(path.jump_times[k]) << ',' << path.states[k + 1] << '\n';
  }
}

SamplePath read_path(std::istream& in) {
  const auto meta = Metadata::read(in);
  const auto rows = read_table(in, "time,state", 2);
  if (rows.empty()) throw std::invalid_argument("path file: no rows");
  SamplePath path;
  int line = 0;
  for (const auto& r : rows) {
    ++line;
    const double t = to_double(r[0], line);
    const auto s = static_cast<State>(to_long(r[1], line));
    if (line > 1) path.jump_times.push_back(t);
    path.states.push_back(s);
  }
  const auto horizon = meta.get("horizon");
  path.horizon = horizon.empty() ? (path.jump_times.empty() ? 0.0 : path.jump_times.back())
                                 : std::stod(horizon);
  const auto seed = meta.get("seed");
  if (!seed.empty()) path.seed = std::stoull(seed);
  return path;
}

void write_negjumps(std::ostream& out, const NegJumpRecord& record, const Metadata& meta) {
  meta.write(out);
  out << "time,magnitude,post_state\n";
  for (std::size_t k = 0; k < record.size(); ++k) {
    out << format_double(record.times[k]) << ',' << record.magnitudes[k] << ',';
    if (record.post_states) out << (*record.post_states)[k];
    out << '\n';
  }
}

NegJumpRecord read_negjumps(std::istream& in) {
  Metadata::read(in);
  const auto rows = read_table(in, "time,magnitude,post_state", 3);
  NegJumpRecord rec;
  std::vector<State> post;
  bool have_post = true;
  int line = 0;
  for (const auto& r : rows) {
    ++line;
    rec.times.push_back(to_double(r[0], line));
    rec.magnitudes.push_back(static_cast<int>(to_long(r[1], line)));
    if (r[2].empty()) {
      have_post = false;
    } else {
      post.push_back(static_cast<State>(to_long(r[2], line)));
    }
  }
  if (have_post && !rows.empty()) rec.post_states = std::move(post);
  rec.validate();
  return rec;
}

std::vector<int> read_magnitudes(std::istream& in) {
  std::vector<int> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto cells = split_csv(line);
    const std::string& cell = cells.size() > 1 ? cells[1] : cells.front();
    // A non-numeric first data row is a CSV header.
    if (out.empty() && !cell.empty() && !std::isdigit(static_cast<unsigned char>(cell[0])) &&
        cell[0] != '-') {
      continue;
    }
    const long d = to_long(cell, line_no);
    if (d < 1) throw std::invalid_argument("line " + std::to_string(line_no) + ": magnitude below 1");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

StateDistribution parse_tau_spec(const std::string& spec, const ChainParams& params) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  const auto bad = [&] {
    return std::invalid_argument("tau spec '" + spec +
                                 "': expected point:X, geometric:P:NMAX or equilibrium");
  };
  if (parts.empty()) throw bad();
  if (parts[0] == "point" && parts.size() == 2) {
    return StateDistribution::point_mass(static_cast<State>(to_long(parts[1], 1)));
  }
  if (parts[0] == "geometric" && parts.size() == 3) {
    return StateDistribution::truncated_geometric(to_double(parts[1], 1),
                                                  static_cast<State>(to_long(parts[2], 1)));
  }
  if (parts[0] == "equilibrium" && parts.size() == 1) {
    return equilibrium(params).to_distribution(1e-16);
  }
  throw bad();
}

PredictionQuery parse_prediction_query(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("query: invalid JSON: ") + e.what());
  }
  try {
    PredictionQuery q{parse_params(j), StateDistribution::point_mass(0), {}, 0};
    if (!j.contains("tau")) throw std::invalid_argument("query: 'tau' is required");
    q.initial = parse_tau(j["tau"], q.params);
    if (!j.contains("record")) throw std::invalid_argument("query: 'record' is required");
    q.record.times = j["record"].at("times").get<std::vector<double>>();
    q.record.magnitudes = j["record"].at("magnitudes").get<std::vector<int>>();
    q.record.validate();
    if (q.record.empty()) throw std::invalid_argument("query: the record is empty");
    q.xi = j.value("xi", 0);
    if (q.xi < 0) throw std::invalid_argument("query: xi must be non-negative");
    return q;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("query: ") + e.what());
  }
}

std::string prediction_response_json(const PredictionQuery& query, const PredictOptions& opts) {
  const auto prob = tail_unseen(query, opts);
  const auto expect = expected_unseen(query, opts);
  const auto w = weights(query.params, query.initial, query.record, opts);
  const auto log_d = log_normalizer(query.params, query.initial, query.record, opts);
  double mean = 0.0, mass = 0.0;
  std::size_t mode = 0;
  for (std::size_t s = 0; s < w.weights.size(); ++s) {
    mean += s * w.weights[s];
    mass += w.weights[s];
    if (w.weights[s] > w.weights[mode]) mode = s;
  }
  json j;
  j["xi"] = query.xi;
  j["probability"] = prob.value;
  j["expectation"] = expect.value;
  j["truncation_error"] = std::max(prob.truncation_error, expect.truncation_error);
  j["log_normalizer"] = log_d.log_value;
  j["weights_summary"] = {{"states", w.weights.size()},
                          {"mean", mass > 0.0 ? mean / mass : 0.0},
                          {"mode", mode},
                          {"tail", w.tail}};
  return j.dump(2);
}

std::string estimate_report_json(const EstimateReport& r) {
  json j;
  j["theta_hat"] = r.theta_hat;
  j["n"] = r.n;
  j["dbar"] = r.dbar;
  j["se_asymptotic"] = r.se_asymptotic ? json(*r.se_asymptotic) : json(nullptr);
  j["mu_hat"] = r.mu_hat ? json(*r.mu_hat) : json(nullptr);
  j["residual"] = r.residual;
  j["iterations"] = r.iterations;
  return j.dump(2);
}

}  // namespace massdeath
