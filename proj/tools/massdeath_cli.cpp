// Command-line front end. Each subcommand validates its options, calls the
// library and formats the result; no numerics live here.

#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "massdeath/bounds.hpp"
#include "massdeath/errors.hpp"
#include "massdeath/infer.hpp"
#include "massdeath/io.hpp"
#include "massdeath/predict.hpp"
#include "massdeath/sim.hpp"
#include "massdeath/specfun.hpp"
#include "massdeath/version.hpp"

namespace md = massdeath;
using json = nlohmann::ordered_json;

namespace {

struct Global {
  std::optional<double> lambda, mu, theta;
  std::uint64_t seed = 1;
  double tol = md::kDefaultTruncationTol;
  std::string out;
  std::string format = "csv";
  bool no_timestamp = false;
};

md::ChainParams require_params(const Global& g) {
  if (!g.mu) throw std::invalid_argument("--mu is required");
  if (g.lambda && g.theta) throw std::invalid_argument("give --lambda or --theta, not both");
  if (g.lambda) return md::ChainParams::from_rates(*g.lambda, *g.mu);
  if (g.theta) return md::ChainParams::from_ratio(*g.theta, *g.mu);
  throw std::invalid_argument("--lambda or --theta is required");
}

// theta alone suffices for commands that only involve the magnitude law.
double require_theta(const Global& g) {
  if (g.theta) return *g.theta;
  if (g.lambda && g.mu) return *g.lambda / *g.mu;
  throw std::invalid_argument("--theta (or --lambda with --mu) is required");
}

void validate(const Global& g) {
  if (!(g.tol > 0.0 && g.tol <= 1e-6)) throw std::invalid_argument("--tol must lie in (0, 1e-6]");
  if (g.format != "csv" && g.format != "json") {
    throw std::invalid_argument("--format must be csv or json");
  }
}

md::Metadata base_meta(const Global& g, const std::string& command) {
  md::Metadata m;
  m.add("massdeath_version", md::kVersion);
  m.add("command", command);
  if (g.lambda) m.add("lambda", *g.lambda);
  if (g.mu) m.add("mu", *g.mu);
  if (g.theta) m.add("theta", *g.theta);
  m.add("seed", std::to_string(g.seed));
  m.add("tol", g.tol);
  if (!g.no_timestamp) {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m.add("created", buf);
  }
  return m;
}

json meta_json(const md::Metadata& m) {
  json j = json::object();
  for (const auto& [k, v] : m.entries) j[k] = v;
  return j;
}

// Writes to --out or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::invalid_argument("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double x) { return md::format_double(x); }

void emit_json(const Global& g, const md::Metadata& meta, json body) {
  body["meta"] = meta_json(meta);
  Sink sink(g.out);
  sink.stream() << body.dump(2) << '\n';
}

// Writes a '#' header, a CSV header line and rows.
void emit_csv(const Global& g, const md::Metadata& meta, const std::string& header,
              const std::vector<std::string>& rows) {
  Sink sink(g.out);
  auto& os = sink.stream();
  meta.write(os);
  os << header << '\n';
  for (const auto& r : rows) os << r << '\n';
}

// ------------------------------------------------------------------ commands

struct SimulateOpts {
  std::string tau = "point:0";
  double horizon = 0.0;
  std::string what = "path";
  std::size_t iid = 0;
};

void run_simulate(const Global& g, const SimulateOpts& o) {
  auto meta = base_meta(g, "simulate");
  if (o.iid > 0) {
    const double theta = require_theta(g);
    meta.add("iid_magnitudes", std::to_string(o.iid));
    const auto draws = md::sample_magnitudes(theta, o.iid, g.seed);
    if (g.format == "json") {
      emit_json(g, meta, {{"magnitudes", draws}});
      return;
    }
    Sink sink(g.out);
    meta.write(sink.stream());
    for (int d : draws) sink.stream() << d << '\n';
    return;
  }
  const auto params = require_params(g);
  if (!(o.horizon > 0.0)) throw std::invalid_argument("--horizon must be positive");
  if (o.what != "path" && o.what != "negjumps") {
    throw std::invalid_argument("--what must be path or negjumps");
  }
  const auto tau = md::parse_tau_spec(o.tau, params);
  meta.add("tau", o.tau);
  meta.add("horizon", o.horizon);
  const auto path = md::sample_path(params, tau, o.horizon, g.seed);
  if (o.what == "path") {
    if (g.format == "json") {
      emit_json(g, meta, {{"jump_times", path.jump_times}, {"states", path.states}});
    } else {
      Sink sink(g.out);
      md::write_path(sink.stream(), path, meta);
    }
    return;
  }
  const auto rec = md::extract_negjumps(path);
  if (g.format == "json") {
    emit_json(g, meta,
              {{"times", rec.times}, {"magnitudes", rec.magnitudes}, {"post_states", *rec.post_states}});
  } else {
    Sink sink(g.out);
    md::write_negjumps(sink.stream(), rec, meta);
  }
}

void run_transition(const Global& g, int x, double t) {
  const auto params = require_params(g);
  auto meta = base_meta(g, "transition");
  meta.add("x", std::to_string(x));
  meta.add("t", t);
  const auto row = md::transition_row(params, x, t, g.tol);
  const md::TailKernel kernel(params, t);
  std::vector<double> p(row.weights().begin(), row.weights().end()), tail;
  for (int y = 0; y <= row.max_state(); ++y) tail.push_back(kernel.tail_point(x, y).value);
  if (g.format == "json") {
    emit_json(g, meta, {{"x", x}, {"t", t}, {"p", p}, {"tail", tail}, {"tail_mass", row.tail_mass()}});
    return;
  }
  std::vector<std::string> rows;
  for (std::size_t y = 0; y < p.size(); ++y) {
    rows.push_back(std::to_string(y) + "," + fmt(p[y]) + "," + fmt(tail[y]));
  }
  meta.add("tail_mass", row.tail_mass());
  emit_csv(g, meta, "y,p,tail", rows);
}

void run_equilibrium(const Global& g) {
  const auto params = require_params(g);
  auto meta = base_meta(g, "equilibrium");
  const auto law = md::equilibrium(params);
  const int n_max = law.truncation_point(g.tol);
  std::vector<double> pmf, surv;
  for (int n = 0; n <= n_max; ++n) {
    pmf.push_back(law.pmf(n));
    surv.push_back(law.survival(n));
  }
  const double mean = md::equilibrium_moment(params, 1.0, g.tol);
  if (g.format == "json") {
    emit_json(g, meta, {{"pmf", pmf}, {"survival", surv}, {"mean", mean}});
    return;
  }
  meta.add("mean", mean);
  std::vector<std::string> rows;
  for (int n = 0; n <= n_max; ++n) rows.push_back(std::to_string(n) + "," + fmt(pmf[n]) + "," + fmt(surv[n]));
  emit_csv(g, meta, "n,pmf,survival", rows);
}

struct BoundsOpts {
  std::string tau = "point:5";
  std::vector<double> times{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
  int m_max = 3;
};

void run_bounds(const Global& g, const BoundsOpts& o) {
  const auto params = require_params(g);
  if (o.m_max < 1) throw std::invalid_argument("--m-max must be >= 1");
  const auto tau = md::parse_tau_spec(o.tau, params);
  auto meta = base_meta(g, "bounds");
  meta.add("tau", o.tau);
  std::vector<md::BoundReport> reports;
  for (double t : o.times) {
    if (!(t >= 0.0)) throw std::invalid_argument("--t values must be non-negative");
    reports.push_back(md::kolmogorov_bound(params, tau, t));
    for (int m = 1; m <= o.m_max; ++m) reports.push_back(md::moment_bound(params, tau, m, t));
    reports.push_back(md::gini_bound(params, tau, t));
  }
  if (g.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) {
      arr.push_back({{"kind", md::to_string(r.kind)}, {"m", r.m}, {"t", r.t}, {"exact", r.exact},
                     {"bound", r.bound}, {"truncation", r.truncation}, {"rounding", r.rounding},
                     {"holds", r.holds()}});
    }
    emit_json(g, meta, {{"reports", arr}});
    return;
  }
  std::vector<std::string> rows;
  for (const auto& r : reports) rows.push_back(md::bound_csv_row(r, params, o.tau));
  emit_csv(g, meta, md::bound_csv_header(), rows);
}

struct EstimateOpts {
  std::string input;
  std::optional<double> horizon;
  std::optional<double> eps;
  std::uint64_t m = 10000;
};

void run_estimate(const Global& g, const EstimateOpts& o) {
  auto meta = base_meta(g, "estimate");
  meta.add("input", o.input);
  std::ifstream in(o.input);
  if (!in) throw std::invalid_argument("cannot open input file '" + o.input + "'");
  md::EstimateReport r;
  if (o.horizon) {
    const auto rec = md::read_negjumps(in);
    r = md::estimate_theta(rec, *o.horizon);
    meta.add("horizon", *o.horizon);
  } else {
    r = md::estimate_theta(md::read_magnitudes(in));
  }
  json j = json::parse(md::estimate_report_json(r));
  if (o.eps) {
    j["consistency_bound"] = {{"m", o.m}, {"eps", *o.eps}, {"value", r.consistency(o.m, *o.eps)}};
  }
  if (g.format == "json") {
    emit_json(g, meta, j);
    return;
  }
  std::vector<std::string> rows;
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      for (const auto& [k2, v2] : v.items()) rows.push_back(k + "." + k2 + "," + v2.dump());
    } else {
      rows.push_back(k + "," + (v.is_null() ? std::string() : v.dump()));
    }
  }
  emit_csv(g, meta, "field,value", rows);
}

void run_predict(const Global& g, const std::string& query_path) {
  const auto query = md::parse_prediction_query(read_file(query_path));
  auto meta = base_meta(g, "predict");
  meta.add("query", query_path);
  md::PredictOptions opts;
  opts.truncation_tol = g.tol;
  json j = json::parse(md::prediction_response_json(query, opts));
  if (g.format == "json") {
    emit_json(g, meta, j);
    return;
  }
  std::vector<std::string> rows;
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      for (const auto& [k2, v2] : v.items()) rows.push_back(k + "." + k2 + "," + v2.dump());
    } else {
      rows.push_back(k + "," + v.dump());
    }
  }
  emit_csv(g, meta, "field,value", rows);
}

struct LinkOpts {
  double theta_min = 0.0, theta_max = 20.0, step = 0.1;
  bool asymptotic = false;
  int order = 5;
};

void run_linkfun(const Global& g, const LinkOpts& o) {
  if (!(o.theta_min >= 0.0 && o.theta_max >= o.theta_min && o.step > 0.0)) {
    throw std::invalid_argument("need 0 <= --theta-min <= --theta-max and --step > 0");
  }
  if (o.asymptotic) md::asym_coeffs(o.order);  // validates the order
  auto meta = base_meta(g, "linkfun");
  meta.add("theta_min", o.theta_min);
  meta.add("theta_max", o.theta_max);
  meta.add("step", o.step);
  if (o.asymptotic) meta.add("order", std::to_string(o.order));
  const auto count = static_cast<long>(std::floor((o.theta_max - o.theta_min) / o.step + 1e-9)) + 1;
  std::vector<std::string> rows;
  json arr = json::array();
  for (long i = 0; i < count; ++i) {
    const double theta = o.theta_min + i * o.step;
    const auto e = md::eval_L(theta);
    std::string row = fmt(theta) + "," + fmt(e.value) + "," + fmt(e.d1) + "," + fmt(e.d2);
    json item = {{"theta", theta}, {"L", e.value}, {"L1", e.d1}, {"L2", e.d2}};
    if (o.asymptotic) {
      // The expansion is in powers of theta^{-1/2} and has no value at 0.
      if (theta > 0.0) {
        const auto a = md::eval_L_asymptotic(theta, o.order);
        row += "," + fmt(a.value) + "," + fmt(a.d1) + "," + fmt(a.d2);
        item["L_asym"] = a.value;
        item["L1_asym"] = a.d1;
        item["L2_asym"] = a.d2;
      } else {
        row += ",,,";
      }
    }
    rows.push_back(row);
    arr.push_back(item);
  }
  if (g.format == "json") {
    emit_json(g, meta, {{"rows", arr}});
    return;
  }
  emit_csv(g, meta, o.asymptotic ? "theta,L,L1,L2,L_asym,L1_asym,L2_asym" : "theta,L,L1,L2", rows);
}

struct ReplicateOpts {
  double theta0 = 0.0;
  std::size_t n = 10000;
  std::size_t reps = 500;
  unsigned threads = 0;
  std::optional<double> eps;
  std::uint64_t m = 10000;
  std::uint64_t horizon_factor = 10;
};

void run_replicate(const Global& g, const ReplicateOpts& o) {
  if (!(o.theta0 > 0.0)) throw std::invalid_argument("--theta0 must be positive");
  if (o.n == 0 || o.reps < 2) throw std::invalid_argument("need --n >= 1 and --reps >= 2");
  auto meta = base_meta(g, "replicate");
  meta.add("theta0", o.theta0);
  meta.add("n", std::to_string(o.n));
  meta.add("reps", std::to_string(o.reps));
  const auto est = md::replicate_estimates(o.theta0, o.n, o.reps, g.seed, o.threads);
  const double se = md::asymptotic_se(o.theta0, o.n);
  std::vector<double> z;
  double mean = 0.0;
  for (double e : est) {
    z.push_back((e - o.theta0) / se);
    mean += e;
  }
  mean /= static_cast<double>(est.size());
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean);
  const double sd = std::sqrt(var / static_cast<double>(est.size() - 1));
  const double ks = md::ks_statistic_normal(z);
  const double pvalue = md::kolmogorov_pvalue(ks, z.size());
  json summary = {{"mean", mean}, {"sd", sd}, {"se_asymptotic", se}, {"ks_statistic", ks},
                  {"ks_pvalue", pvalue}};
  if (o.eps) {
    summary["consistency"] = {
        {"m", o.m},
        {"eps", *o.eps},
        {"horizon_factor", o.horizon_factor},
        {"bound", md::consistency_bound(o.theta0, o.m, *o.eps)},
        {"frequency", md::consistency_frequency(o.theta0, *o.eps, o.m, o.reps, g.seed,
                                                o.horizon_factor, o.threads)}};
  }
  if (g.format == "json") {
    emit_json(g, meta, {{"estimates", est}, {"summary", summary}});
    return;
  }
  for (const auto& [k, v] : summary.items()) {
    if (v.is_object()) {
      for (const auto& [k2, v2] : v.items()) meta.add(k + "." + k2, v2.dump());
    } else {
      meta.add(k, v.dump());
    }
  }
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < est.size(); ++i) {
    rows.push_back(std::to_string(i) + "," + fmt(est[i]) + "," + fmt(z[i]));
  }
  emit_csv(g, meta, "rep,theta_hat,z", rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birth/mass-death chain: transitions, bounds, simulation, prediction, estimation"};
  app.set_version_flag("--version", md::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--lambda", g.lambda, "Up-jump rate")->check(CLI::PositiveNumber);
  app.add_option("--mu", g.mu, "Down-jump rate per target state")->check(CLI::PositiveNumber);
  app.add_option("--theta", g.theta, "Rate ratio lambda / mu (with --mu)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--tol", g.tol, "Truncation tolerance in (0, 1e-6]")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default stdout)");
  app.add_option("--format", g.format, "csv or json")->capture_default_str();
  app.add_flag("--no-timestamp", g.no_timestamp, "Omit the creation time from metadata");

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Sample a path, its negative jumps, or iid magnitudes");
  simulate->add_option("--tau", sim.tau, "Start law: point:X, geometric:P:NMAX, equilibrium")
      ->capture_default_str();
  simulate->add_option("--horizon", sim.horizon, "Path length in time");
  simulate->add_option("--what", sim.what, "path or negjumps")->capture_default_str();
  simulate->add_option("--iid-magnitudes", sim.iid, "Draw this many magnitudes from phi_theta instead");

  int tx = 0;
  double tt = 0.0;
  auto* transition = app.add_subcommand("transition", "Row p_t(x, .) with tails R_t(x, .)");
  transition->add_option("--x", tx, "Start state")->required()->check(CLI::NonNegativeNumber);
  transition->add_option("--t", tt, "Time")->required()->check(CLI::NonNegativeNumber);

  auto* equil = app.add_subcommand("equilibrium", "Equilibrium pmf and survival function");

  BoundsOpts bo;
  auto* bounds = app.add_subcommand("bounds", "Exact distances to equilibrium against their bounds");
  bounds->add_option("--tau", bo.tau, "Start law")->capture_default_str();
  bounds->add_option("--t", bo.times, "Times (comma separated)")->delimiter(',');
  bounds->add_option("--m-max", bo.m_max, "Largest moment order")->capture_default_str();

  EstimateOpts eo;
  auto* estimate = app.add_subcommand("estimate", "Moment estimate of theta from magnitudes");
  estimate->add_option("--input", eo.input, "Magnitude file or negjump CSV")->required();
  estimate->add_option("--horizon", eo.horizon, "Observation horizon; input is then a negjump CSV");
  estimate->add_option("--eps", eo.eps, "Report the consistency bound at this eps");
  estimate->add_option("--m", eo.m, "Sample size index of the consistency bound")->capture_default_str();

  std::string query_path;
  auto* predict = app.add_subcommand("predict", "Answer a JSON prediction query");
  predict->add_option("--query", query_path, "Query file")->required();

  LinkOpts lo;
  auto* linkfun = app.add_subcommand("linkfun", "Tabulate L, L', L'' (and their expansions)");
  linkfun->add_option("--theta-min", lo.theta_min)->capture_default_str();
  linkfun->add_option("--theta-max", lo.theta_max)->capture_default_str();
  linkfun->add_option("--step", lo.step)->capture_default_str();
  linkfun->add_flag("--asymptotic", lo.asymptotic, "Add the large-theta expansion columns");
  linkfun->add_option("--order", lo.order, "Expansion order (0..5)")->capture_default_str();

  ReplicateOpts ro;
  auto* replicate = app.add_subcommand("replicate", "Replicated estimation study");
  replicate->add_option("--theta0", ro.theta0, "True theta")->required();
  replicate->add_option("--n", ro.n, "Sample size")->capture_default_str();
  replicate->add_option("--reps", ro.reps, "Replicates")->capture_default_str();
  replicate->add_option("--threads", ro.threads, "Worker threads (0 = all cores)");
  replicate->add_option("--eps", ro.eps, "Also estimate the consistency-event frequency");
  replicate->add_option("--m", ro.m, "Start index of the consistency event")->capture_default_str();
  replicate->add_option("--horizon-factor", ro.horizon_factor, "Event checked up to this times m")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    validate(g);
    if (*simulate) run_simulate(g, sim);
    if (*transition) run_transition(g, tx, tt);
    if (*equil) run_equilibrium(g);
    if (*bounds) run_bounds(g, bo);
    if (*estimate) run_estimate(g, eo);
    if (*predict) run_predict(g, query_path);
    if (*linkfun) run_linkfun(g, lo);
    if (*replicate) run_replicate(g, ro);
  } catch (const md::NumericalGuardError& e) {
    std::cerr << "numerical guard: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
