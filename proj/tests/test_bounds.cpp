#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "massdeath/bounds.hpp"
#include "oracles.hpp"

using namespace massdeath;

namespace {

double h_direct(double theta, int m, double x) {
  long double sum = 0.0L, p = std::exp(-static_cast<long double>(theta));
  for (int rho = 0; rho < 400; ++rho) {
    sum += p * std::pow(static_cast<long double>(x) + rho, m - 1);
    p *= theta / (rho + 1.0L);
  }
  return static_cast<double>(sum);
}

// |F_X(t) - Pi*| summed over unit intervals, with F_X(t) from uniformization.
double gini_oracle(const ChainParams& p, State x, double t) {
  const auto row = oracle::transition_row(p.lambda(), p.mu(), x, t, 120);
  const auto law = equilibrium(p);
  long double cdf = 0.0L, total = 0.0L;
  for (int n = 0; n < 100; ++n) {
    cdf += row[n];
    total += std::fabs(cdf - law.cdf(n));
  }
  return static_cast<double>(total);
}

}  // namespace

TEST(DecayFactor, ProofForm) {
  const auto p = ChainParams::from_ratio(2.0, 1.5);
  EXPECT_EQ(decay_factor(p, 0.0), 1.0);
  double prev = 1.0;
  for (double t = 0.1; t < 20; t += 0.1) {
    const double f = decay_factor(p, t);
    EXPECT_LT(f, prev);
    EXPECT_NEAR(f, std::exp(-1.5 * t - 2.0 * (std::exp(-1.5 * t) + 1.5 * t - 1.0)), 1e-14);
    prev = f;
  }
  EXPECT_LT(decay_factor(p, 20.0), 1e-30);
}

TEST(HWeight, MatchesPoissonSums) {
  const auto p = ChainParams::from_ratio(2.0, 1.0);
  for (double x : {0.0, 1.0, 3.5, 20.0, 50.0}) {
    EXPECT_EQ(h_weight(p, 1, x), 1.0);
    EXPECT_NEAR(h_weight(p, 2, x), x + 2.0, 1e-13);
    for (int m = 1; m <= 4; ++m) {
      const double direct = h_direct(2.0, m, x);
      EXPECT_NEAR(h_weight(p, m, x), direct, 1e-10 * std::max(1.0, direct)) << m << " " << x;
    }
  }
  EXPECT_NEAR(h_weight(p, 3, 1.0), h_direct(2.0, 3, 1.0), 1e-12);
}

TEST(KrFunctional, Identities) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const auto law = equilibrium(p);
  EXPECT_NEAR(kr_functional(p, law.to_distribution(1e-16), 2), 0.0, 1e-14);
  EXPECT_NEAR(kr_functional(p, StateDistribution::point_mass(0), 1), equilibrium_moment(p, 1.0),
              1e-12);
}

TEST(KrFunctional, MatchesQuadrature) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const auto tau = StateDistribution::point_mass(3);
  const auto law = equilibrium(p);
  double quad = 0.0;
  for (int n = 0; n < 60; ++n) {
    const double gap = std::abs(tau.cdf(n) - law.cdf(n));
    quad += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [&](double x) { return h_direct(1.0, 2, x); }, n, n + 1.0) *
            gap;
  }
  EXPECT_NEAR(kr_functional(p, tau, 2), quad, 1e-11);
}

TEST(Kolmogorov, Examples) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const auto tau = StateDistribution::point_mass(5);
  const auto r0 = kolmogorov_bound(p, tau, 0.0);
  EXPECT_NEAR(r0.exact, r0.bound, 1e-15);
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    const auto r = kolmogorov_bound(p, tau, t);
    EXPECT_TRUE(r.holds()) << t << " " << r.exact << " " << r.bound;
    EXPECT_GT(r.exact, 0.0);
  }
  const auto eq = kolmogorov_bound(p, equilibrium(p).to_distribution(1e-17), 1.0);
  EXPECT_NEAR(eq.exact, 0.0, 1e-14);
  EXPECT_NEAR(eq.bound, 0.0, 1e-14);
}

TEST(Kolmogorov, ExactSideMatchesUniformization) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const auto row = oracle::transition_row(1.0, 1.0, 5, 1.0, 100);
  const auto law = equilibrium(p);
  long double cdf = 0.0L;
  double sup = 0.0;
  for (int n = 0; n < 80; ++n) {
    cdf += row[n];
    sup = std::max(sup, static_cast<double>(std::fabs(cdf - law.cdf(n))));
  }
  EXPECT_NEAR(kolmogorov_bound(p, StateDistribution::point_mass(5), 1.0).exact, sup, 1e-12);
}

TEST(MomentBound, Examples) {
  const auto p2 = ChainParams::from_ratio(2.0, 1.0);
  for (double t : {0.25, 1.0, 3.0}) {
    const auto r = moment_bound(p2, StateDistribution::point_mass(4), 1, t);
    EXPECT_TRUE(r.holds()) << t;
    // m = 1: the exact side is |E X(t) - E_pi* X|.
    const auto dist = propagate(p2, StateDistribution::point_mass(4), t, 1e-15);
    EXPECT_NEAR(r.exact, std::abs(dist.mean() - equilibrium_moment(p2, 1.0)), 1e-10);
  }
  const auto p = ChainParams::from_ratio(1.0, 0.5);
  const auto r = moment_bound(p, StateDistribution::truncated_geometric(0.5, 40), 2, 1.0);
  EXPECT_TRUE(r.holds());
  const auto eq = moment_bound(p, equilibrium(p).to_distribution(1e-17), 2, 1.0);
  EXPECT_NEAR(eq.exact, 0.0, 1e-12);
  EXPECT_NEAR(eq.bound, 0.0, 1e-12);
}

TEST(GiniBound, Examples) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const auto tau = StateDistribution::point_mass(2);
  const auto r0 = gini_bound(p, tau, 0.0);
  EXPECT_NEAR(r0.exact, r0.bound, r0.truncation + 1e-14);
  for (double t : {0.5, 2.0}) {
    const auto r = gini_bound(p, tau, t);
    EXPECT_TRUE(r.holds());
    EXPECT_NEAR(r.exact, gini_oracle(p, 2, t), 1e-12);
  }
}

TEST(BoundSweep, AllKindsHoldOnGrid) {
  int violations = 0, checked = 0;
  for (double theta : {0.3, 1.0, 3.0}) {
    for (double mu : {0.5, 1.0, 2.0}) {
      const auto p = ChainParams::from_ratio(theta, mu);
      const std::vector<StateDistribution> taus{StateDistribution::point_mass(0),
                                                StateDistribution::point_mass(5),
                                                StateDistribution::truncated_geometric(0.5, 40)};
      for (const auto& tau : taus) {
        for (double t : {0.0, 0.25, 1.0, 4.0}) {
          std::vector<BoundReport> reports{kolmogorov_bound(p, tau, t), gini_bound(p, tau, t)};
          for (int m = 1; m <= 3; ++m) reports.push_back(moment_bound(p, tau, m, t));
          for (const auto& r : reports) {
            ++checked;
            if (!r.holds()) ++violations;
          }
        }
      }
    }
  }
  EXPECT_EQ(violations, 0);
  EXPECT_EQ(checked, 3 * 3 * 3 * 4 * 5);
}

TEST(BoundSweep, ExactDistanceDecays) {
  const auto p = ChainParams::from_ratio(1.0, 1.0);
  const auto tau = StateDistribution::point_mass(5);
  EXPECT_LT(gini_bound(p, tau, 12.0).exact, 1e-6);
  EXPECT_LT(gini_bound(p, tau, 12.0).bound, 1e-6);
}

TEST(BoundCsv, Row) {
  const auto p = ChainParams::from_ratio(1.0, 2.0);
  BoundReport r;
  r.kind = BoundKind::gini;
  r.t = 1.0;
  r.exact = 0.25;
  r.bound = 0.5;
  EXPECT_EQ(bound_csv_header(), "kind,m,t,theta,mu,tau,exact,bound,ratio");
  EXPECT_EQ(bound_csv_row(r, p, "delta5"), "gini,0,1,1,2,delta5,0.25,0.5,0.5");
}
