#include <gtest/gtest.h>

#include <sstream>

#include "massdeath/io.hpp"
#include "massdeath/version.hpp"

using namespace massdeath;

TEST(Io, PathRoundTrip) {
  const auto p = ChainParams::from_ratio(1.5, 1.0);
  const auto path = sample_path(p, StateDistribution::point_mass(2), 30.0, 8);
  Metadata meta;
  meta.add("horizon", 30.0);
  meta.add("seed", "8");
  std::stringstream ss;
  write_path(ss, path, meta);
  const auto back = read_path(ss);
  EXPECT_EQ(back.states, path.states);
  EXPECT_EQ(back.jump_times, path.jump_times);  // %.17g is exact
  EXPECT_EQ(back.horizon, 30.0);
  EXPECT_EQ(back.seed, 8u);
}

TEST(Io, NegJumpRoundTrip) {
  const auto p = ChainParams::from_ratio(2.0, 1.0);
  const auto rec = extract_negjumps(sample_path(p, StateDistribution::point_mass(0), 50.0, 3));
  ASSERT_FALSE(rec.empty());
  std::stringstream ss;
  write_negjumps(ss, rec);
  const auto back = read_negjumps(ss);
  EXPECT_EQ(back.times, rec.times);
  EXPECT_EQ(back.magnitudes, rec.magnitudes);
  ASSERT_TRUE(back.post_states.has_value());
  EXPECT_EQ(*back.post_states, *rec.post_states);

  NegJumpRecord bare;
  bare.times = {0.5, 1.0};
  bare.magnitudes = {2, 1};
  std::stringstream s2;
  write_negjumps(s2, bare);
  EXPECT_FALSE(read_negjumps(s2).post_states.has_value());
}

TEST(Io, MagnitudeFormats) {
  std::stringstream plain("# seed=1\n3\n1\n\n2\n");
  EXPECT_EQ(read_magnitudes(plain), (std::vector<int>{3, 1, 2}));
  std::stringstream csv("# x=1\ntime,magnitude,post_state\n0.5,2,0\n0.7,4,1\n");
  EXPECT_EQ(read_magnitudes(csv), (std::vector<int>{2, 4}));
  std::stringstream bad("1\n0\n");
  EXPECT_THROW(read_magnitudes(bad), std::invalid_argument);
  std::stringstream junk("1\nabc\n");
  EXPECT_THROW(read_magnitudes(junk), std::invalid_argument);
}

TEST(Io, MetadataLines) {
  Metadata m;
  m.add("version", kVersion);
  m.add("tol", 1e-12);
  std::stringstream ss;
  m.write(ss);
  ss << "a,b\n";
  const auto back = Metadata::read(ss);
  EXPECT_EQ(back.get("version"), kVersion);
  EXPECT_EQ(std::stod(back.get("tol")), 1e-12);
  EXPECT_EQ(back.get("missing"), "");
  std::string rest;
  std::getline(ss, rest);
  EXPECT_EQ(rest, "a,b");
}

TEST(Io, PredictionQuery) {
  const auto q = parse_prediction_query(R"({"lambda": 1, "mu": 1,
    "tau": {"family": "point", "x": 0},
    "record": {"times": [1.0], "magnitudes": [1]}, "xi": 2})");
  EXPECT_EQ(q.params.theta(), 1.0);
  EXPECT_EQ(q.xi, 2);
  EXPECT_EQ(q.initial.weight(0), 1.0);
  const auto resp = prediction_response_json(q);
  EXPECT_NE(resp.find("\"probability\""), std::string::npos);
  EXPECT_NE(resp.find("\"weights_summary\""), std::string::npos);

  const auto g = parse_prediction_query(R"({"theta": 2, "mu": 0.5,
    "tau": {"weights": [0.5, 0.5]}, "record": {"times": [1, 2], "magnitudes": [1, 3]}})");
  EXPECT_EQ(g.params.lambda(), 1.0);
  EXPECT_EQ(g.xi, 0);
  EXPECT_NO_THROW(parse_prediction_query(R"({"theta": 2, "mu": 1, "tau": {"family": "equilibrium"},
    "record": {"times": [1], "magnitudes": [1]}})"));

  EXPECT_THROW(parse_prediction_query("{"), std::invalid_argument);
  EXPECT_THROW(parse_prediction_query(R"({"mu": 1, "tau": {"family": "point", "x": 0},
    "record": {"times": [1], "magnitudes": [1]}})"), std::invalid_argument);
  EXPECT_THROW(parse_prediction_query(R"({"lambda": 1, "mu": 1, "tau": {"family": "zipf"},
    "record": {"times": [1], "magnitudes": [1]}})"), std::invalid_argument);
  EXPECT_THROW(parse_prediction_query(R"({"lambda": 1, "mu": 1, "tau": {"family": "point", "x": 0},
    "record": {"times": [2, 1], "magnitudes": [1, 1]}})"), std::invalid_argument);
}

TEST(Io, EstimateJson) {
  EstimateReport r;
  r.theta_hat = 0.0;
  r.n = 5;
  const auto j = estimate_report_json(r);
  EXPECT_NE(j.find("\"se_asymptotic\": null"), std::string::npos);
  EXPECT_NE(j.find("\"mu_hat\": null"), std::string::npos);
}
