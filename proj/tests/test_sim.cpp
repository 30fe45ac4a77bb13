#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "massdeath/chain.hpp"
#include "massdeath/parallel.hpp"
#include "massdeath/sim.hpp"

using namespace massdeath;

namespace {

double integrate_0_inf(const std::function<double(double)>& f) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  return gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(),
                                              15, 1e-13, &err);
}

}  // namespace

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  CounterRng a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  CounterRng d(42, 7);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += d() == c();
  EXPECT_EQ(same, 0);
}

TEST(Rng, BoundedDrawsAreUniform) {
  CounterRng rng(1);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi2, 16.81);  // chi-square, 6 df, 1%
}

TEST(Simulation, FirstJumpFromZeroIsUp) {
  const auto p = ChainParams::from_ratio(0.3, 2.0);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto path = sample_path(p, StateDistribution::point_mass(0), 50.0, 9, s);
    if (!path.jump_times.empty()) EXPECT_EQ(path.states[1], 1);
  }
}

TEST(Simulation, PathInvariants) {
  const auto p = ChainParams::from_ratio(3.0, 1.0);
  const auto path = sample_path(p, StateDistribution::point_mass(2), 200.0, 5);
  ASSERT_EQ(path.states.size(), path.jump_times.size() + 1);
  for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
    EXPECT_LE(path.jump_times[k], path.horizon);
    if (k > 0) EXPECT_GT(path.jump_times[k], path.jump_times[k - 1]);
    const int step = path.states[k + 1] - path.states[k];
    EXPECT_NE(step, 0);
    EXPECT_TRUE(step == 1 || (step < 0 && path.states[k + 1] >= 0));
  }
  EXPECT_THROW(sample_path(p, StateDistribution::point_mass(0), 0.0, 1), std::invalid_argument);
}

TEST(Simulation, SeedDeterminism) {
  const auto p = ChainParams::from_ratio(2.0, 1.0);
  const auto tau = StateDistribution::truncated_geometric(0.4, 10);
  const auto a = sample_path(p, tau, 100.0, 123, 4);
  const auto b = sample_path(p, tau, 100.0, 123, 4);
  EXPECT_EQ(a.jump_times, b.jump_times);
  EXPECT_EQ(a.states, b.states);
  const auto c = sample_path(p, tau, 100.0, 123, 5);
  EXPECT_NE(a.jump_times, c.jump_times);
}

TEST(Simulation, StateLookup) {
  SamplePath path;
  path.horizon = 5.0;
  path.jump_times = {1.0, 2.5};
  path.states = {0, 1, 0};
  EXPECT_EQ(path.state_at(0.0), 0);
  EXPECT_EQ(path.state_at(1.0), 1);
  EXPECT_EQ(path.state_at(2.4), 1);
  EXPECT_EQ(path.state_at(5.0), 0);
  EXPECT_DOUBLE_EQ(path.time_average([](State s) { return s == 1 ? 1.0 : 0.0; }), 1.5 / 5.0);
}

TEST(Simulation, HoldingTimesAreExponential) {
  const auto p = ChainParams::from_rates(1.5, 0.5);
  const State i = 3;
  CounterRng rng(77);
  const int n = 100000;
  std::vector<double> h(n);
  for (auto& v : h) v = draw_jump(p, i, rng).holding;
  std::sort(h.begin(), h.end());
  const double c = p.exit_rate(i);
  double ks = 0.0;
  for (int k = 0; k < n; ++k) {
    const double F = -std::expm1(-c * h[k]);
    ks = std::max({ks, std::abs(F - double(k) / n), std::abs(F - double(k + 1) / n)});
  }
  EXPECT_LT(ks, 1.628 / std::sqrt(double(n)));
}

TEST(Simulation, DownTargetsAreUniform) {
  const auto p = ChainParams::from_rates(1.0, 1.0);
  CounterRng rng(3);
  std::vector<int> counts(5, 0);
  int downs = 0;
  while (downs < 100000) {
    const auto j = draw_jump(p, 5, rng);
    if (j.next < 5) {
      ++counts[j.next];
      ++downs;
    }
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - downs / 5.0) * (c - downs / 5.0) / (downs / 5.0);
  EXPECT_LT(chi2, 13.277);  // chi-square, 4 df, 1%
}

TEST(Simulation, EmpiricalLawMatchesTransitionRow) {
  const auto p = ChainParams::from_ratio(2.0, 1.0);
  const int n = 40000;
  auto finals = run_replicates(n, [&](std::size_t r) {
    return sample_path(p, StateDistribution::point_mass(0), 1.0, 2024, r).states.back();
  });
  std::vector<double> freq(64, 0.0);
  for (State s : finals) freq[std::min<State>(s, 63)] += 1.0 / n;
  const TailKernel k(p, 1.0);
  double tv = 0.0;
  for (State y = 0; y < 63; ++y) tv += std::abs(freq[y] - k.transition(0, y));
  tv += std::abs(freq[63] - k.tail_point(0, 63).value);
  EXPECT_LT(tv / 2.0, 0.02);
}

TEST(Simulation, NegativeJumpRate) {
  // Long-run negative-jump rate sum_x pi*(x) x mu, which is mu E[X].
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const double T = 5000.0;
  const int reps = 8;
  std::vector<double> rates;
  for (int r = 0; r < reps; ++r) {
    const auto path = sample_path(p, equilibrium(p).to_distribution(), T, 11, r);
    rates.push_back(extract_negjumps(path).size() / T);
  }
  double mean = 0.0, var = 0.0;
  for (double v : rates) mean += v / reps;
  for (double v : rates) var += (v - mean) * (v - mean) / (reps - 1);
  const double expected = p.mu() * equilibrium_moment(p, 1.0);
  EXPECT_NEAR(mean, expected, 3.0 * std::sqrt(var / reps) + 1e-3);
}

TEST(Simulation, ErgodicAverage) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const auto path = sample_path(p, StateDistribution::point_mass(0), 2000.0, 31);
  const double avg = path.time_average([](State s) { return s <= 2 ? 1.0 : 0.0; });
  const auto law = equilibrium(p);
  EXPECT_NEAR(avg, law.cdf(2.0), 0.02);
}

TEST(NegJumps, Extraction) {
  SamplePath a;
  a.horizon = 10;
  a.jump_times = {1, 2, 3};
  a.states = {0, 1, 2, 1};
  auto ra = extract_negjumps(a);
  ASSERT_EQ(ra.size(), 1u);
  EXPECT_EQ(ra.magnitudes[0], 1);
  EXPECT_EQ((*ra.post_states)[0], 1);
  a.states = {0, 1, 2, 0};
  ra = extract_negjumps(a);
  ASSERT_EQ(ra.size(), 1u);
  EXPECT_EQ(ra.magnitudes[0], 2);
  EXPECT_EQ(ra.times[0], 3.0);
}

TEST(NegJumps, ReconstructionRoundTrip) {
  const auto p = ChainParams::from_ratio(2.5, 1.0);
  const auto path = sample_path(p, StateDistribution::point_mass(4), 300.0, 8);
  const auto rec = extract_negjumps(path);
  rec.validate();
  // Replay: every jump not in the record is an up-jump of size one.
  std::vector<State> replay{path.states[0]};
  std::size_t r = 0;
  for (double t : path.jump_times) {
    if (r < rec.size() && rec.times[r] == t) {
      replay.push_back(replay.back() - rec.magnitudes[r]);
      EXPECT_EQ(replay.back(), (*rec.post_states)[r]);
      ++r;
    } else {
      replay.push_back(replay.back() + 1);
    }
  }
  EXPECT_EQ(replay, path.states);
}

TEST(NegJumps, FirstDensityNormalises) {
  for (double theta : {0.5, 2.0}) {
    const auto p = ChainParams::from_ratio(theta, 1.3);
    for (State x : {0, 3}) {
      double total = 0.0;
      for (int nu = 0; nu < 80; ++nu) {
        // Every (x1, d) with x1 + d = x + nu shares the same density in t.
        const State x1 = x + nu - 1;
        if (x1 < 0) continue;
        const double per_pair =
            integrate_0_inf([&](double t) { return first_negjump_density(p, x, t, x1, 1); });
        const double mass = per_pair * (x + nu);
        EXPECT_NEAR(mass, first_negjump_upcount_mass(p, x, nu), 1e-12) << nu;
        total += mass;
      }
      EXPECT_NEAR(total, 1.0, 1e-8);
    }
  }
}

TEST(NegJumps, UpcountMassMatchesJumpChainProduct) {
  const auto p = ChainParams::from_ratio(1.7, 1.0);
  for (State x : {0, 2}) {
    for (int nu = 0; nu < 10; ++nu) {
      double prod = 1.0;
      for (int i = 0; i < nu; ++i) prod *= jump_prob(p, x + i, x + i + 1);
      prod *= 1.0 - jump_prob(p, x + nu, x + nu + 1);
      EXPECT_NEAR(first_negjump_upcount_mass(p, x, nu), prod, 1e-14);
    }
  }
}

TEST(NegJumps, FirstDensityMatchesSimulation) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const State x = 1;
  const int n = 100000;
  const double a = 0.5, b = 1.5;
  CounterRng rng(99);
  std::vector<std::vector<int>> hits(6, std::vector<int>(6, 0));
  for (int i = 0; i < n; ++i) {
    const auto f = sample_first_negjump(p, x, rng);
    if (f.time >= a && f.time < b && f.post_state < 6 && f.magnitude < 6) {
      ++hits[f.post_state][f.magnitude];
    }
  }
  for (State x1 = 0; x1 < 3; ++x1) {
    for (int d = 1; d < 4; ++d) {
      using boost::math::quadrature::gauss_kronrod;
      const double prob = gauss_kronrod<double, 31>::integrate(
          [&](double t) { return first_negjump_density(p, x, t, x1, d); }, a, b);
      const double freq = double(hits[x1][d]) / n;
      const double se = std::sqrt(prob * (1 - prob) / n);
      EXPECT_NEAR(freq, prob, 3.0 * se + 1e-4) << x1 << " " << d;
    }
  }
}

TEST(NegJumps, JointDensity) {
  const auto p = ChainParams::from_ratio(1.2, 0.8);
  NegJumpRecord one{{0.7}, {2}, std::vector<State>{1}};
  EXPECT_DOUBLE_EQ(negjump_joint_density(p, 0, one), first_negjump_density(p, 0, 0.7, 1, 2));
  NegJumpRecord bad{{0.5, 1.0}, {1, 1}, std::vector<State>{3, 0}};
  EXPECT_EQ(negjump_joint_density(p, 0, bad), 0.0);
  NegJumpRecord two{{0.5, 1.25}, {1, 2}, std::vector<State>{1, 0}};
  EXPECT_DOUBLE_EQ(negjump_joint_density(p, 0, two),
                   first_negjump_density(p, 0, 0.5, 1, 1) * first_negjump_density(p, 1, 0.75, 0, 2));
  NegJumpRecord hidden{{0.5}, {1}, std::nullopt};
  EXPECT_THROW(negjump_joint_density(p, 0, hidden), std::invalid_argument);
}

TEST(NegJumps, TwoJumpFactorisationBySimulation) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const int n = 200000;
  const double w = 0.25;
  const double t1 = 1.0, t2 = 2.0;
  CounterRng rng(5150);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const auto f1 = sample_first_negjump(p, 0, rng);
    if (!(std::abs(f1.time - t1) < w / 2 && f1.post_state == 0 && f1.magnitude == 1)) continue;
    const auto f2 = sample_first_negjump(p, f1.post_state, rng);
    const double T2 = f1.time + f2.time;
    if (std::abs(T2 - t2) < w / 2 && f2.post_state == 0 && f2.magnitude == 1) ++hits;
  }
  // Integrate the product density over both windows.
  using boost::math::quadrature::gauss_kronrod;
  const double prob = gauss_kronrod<double, 31>::integrate(
      [&](double s1) {
        return gauss_kronrod<double, 31>::integrate(
            [&](double s2) {
              NegJumpRecord r{{s1, s2}, {1, 1}, std::vector<State>{0, 0}};
              return negjump_joint_density(p, 0, r);
            },
            t2 - w / 2, t2 + w / 2);
      },
      t1 - w / 2, t1 + w / 2);
  const double freq = double(hits) / n;
  EXPECT_NEAR(freq, prob, 3.0 * std::sqrt(prob * (1 - prob) / n));
}

TEST(ReturnTime, MonteCarloMatchesStationaryCycle) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  CounterRng rng(2718);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = sample_return_time(p, 1, rng);
    sum += t;
    sum2 += t * t;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  const auto r = return_time_mean(p, 1);
  EXPECT_NEAR(mean, r.derived, 3.0 * se);
  EXPECT_GT(std::abs(mean - r.printed), 10.0 * se);
}
