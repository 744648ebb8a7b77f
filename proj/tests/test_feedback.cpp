#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "swarmstab/feedback.hpp"
#include "swarmstab/simulate.hpp"

namespace swarmstab {
namespace {

using testing::chain;
using testing::reference_chain;
using testing::vec;

FeedbackLaw<double> reference_law(double gain = 10) {
  return FeedbackLaw<double>(reference_chain(), Distribution<>(testing::reference_target()), gain);
}

// Aggregate form: G(x) has g_i + g_j (times gain) on every edge and zero
// row sums; the closed loop is G(x)^T D x with D = diag(1 / xd).
Vector<double> aggregate_field(const DirectedGraph& g, const Vector<double>& xd, double gain,
                               const Vector<double>& x) {
  const auto m = x.size();
  Matrix<double> big_g = Matrix<double>::Zero(m, m);
  for (const auto& e : g.edges()) {
    const auto i = static_cast<Eigen::Index>(e.source);
    const auto j = static_cast<Eigen::Index>(e.target);
    const double w = gain * ((x[i] - xd[i]) * (x[i] - xd[i]) + (x[j] - xd[j]) * (x[j] - xd[j]));
    big_g(i, j) += w;
    big_g(i, i) -= w;
  }
  const Vector<double> dx = (x.array() / xd.array()).matrix();
  return big_g.transpose() * dx;
}

// V straight from its definition, 1/2 (x^T D x - xd^T D xd).
double lyapunov_by_definition(const Vector<double>& xd, const Vector<double>& x) {
  return 0.5 * ((x.array().square() / xd.array()).sum() - xd.sum());
}

// Central difference of V along the straight line through x in the field
// direction; exact up to round-off because V is quadratic.
double directional_difference(const FeedbackLaw<double>& law, const Vector<double>& x) {
  const Vector<double> f = closed_loop_field(law, x);
  const double h = 1e-3 / std::max(1.0, f.lpNorm<Eigen::Infinity>());
  return (lyapunov_value(law, (x + h * f).eval()) - lyapunov_value(law, (x - h * f).eval())) /
         (2 * h);
}

TEST(FeedbackLaw, Validation) {
  const auto g = reference_chain();
  EXPECT_THROW(FeedbackLaw<double>(g, Distribution<>(vec({0.5, 0, 0.5, 0, 0}))), InvalidArgument);
  EXPECT_THROW(FeedbackLaw<double>(g, Distribution<>(testing::reference_target()), 0.0),
               InvalidArgument);
  EXPECT_THROW(FeedbackLaw<double>(g, Distribution<>(testing::reference_target()), -1.0),
               InvalidArgument);
  const DirectedGraph cycle(3, {{0, 1}, {1, 2}, {2, 0}});
  EXPECT_THROW(FeedbackLaw<double>(cycle, Distribution<>::uniform(3)), InvalidArgument);
  const DirectedGraph split(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}});
  EXPECT_THROW(FeedbackLaw<double>(split, Distribution<>::uniform(4)), InvalidArgument);
  EXPECT_THROW(FeedbackLaw<double>(g, Distribution<>::uniform(4)), InvalidArgument);
}

TEST(FeedbackRates, TwoVertexByHand) {
  const FeedbackLaw<double> law(chain(2), Distribution<>(vec({0.5, 0.5})), 1.0);
  const auto u = feedback_rates(law, vec({1, 0}));
  EXPECT_DOUBLE_EQ(u[0], 1.0);
  EXPECT_DOUBLE_EQ(u[1], 1.0);
  EXPECT_EQ(closed_loop_field(law, vec({1, 0})), vec({-1, 1}));
}

TEST(FeedbackRates, ExactlyZeroAtTarget) {
  const auto law = reference_law();
  const auto u = feedback_rates(law, law.target().values());
  for (EdgeId e = 0; e < u.size(); ++e) EXPECT_EQ(u[e], 0.0);
  EXPECT_EQ(closed_loop_field(law, law.target().values()), Vector<double>::Zero(5));
}

TEST(FeedbackRates, NumeratorsSymmetricAndRatesBounded) {
  Rng rng(40);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + rng.below(7);
    const auto g = testing::random_bidirected(rng, m, 0.3);
    const FeedbackLaw<double> law(g, Distribution<>(testing::random_positive(rng, m)),
                                  0.5 + 10 * rng.uniform());
    const auto& xd = law.target().values();
    for (int k = 0; k < 20; ++k) {
      const Vector<double> x = sample_simplex<double>(rng, m);
      const auto u = feedback_rates(law, x);
      for (EdgeId e = 0; e < g.edge_count(); ++e) {
        const auto [i, j] = g.edge(e);
        const EdgeId back = *g.find_edge(j, i);
        EXPECT_NEAR(u[e] * xd[static_cast<Eigen::Index>(i)],
                    u[back] * xd[static_cast<Eigen::Index>(j)], 1e-12 * law.rate_bound());
        EXPECT_GE(u[e], 0.0);
        EXPECT_LE(u[e], law.rate_bound());
      }
    }
  }
}

TEST(FeedbackRates, Decentralised) {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 3 + rng.below(6);
    const auto g = testing::random_bidirected(rng, m, 0.3);
    const FeedbackLaw<double> law(g, Distribution<>(testing::random_positive(rng, m)));
    const Vector<double> x = sample_simplex<double>(rng, m);
    const auto base = feedback_rates(law, x);
    for (Eigen::Index v = 0; v < static_cast<Eigen::Index>(m); ++v) {
      Vector<double> y = x;
      y[v] += 0.3 * rng.uniform() + 0.01;
      const auto moved = feedback_rates(law, y);
      for (EdgeId e = 0; e < g.edge_count(); ++e) {
        const bool touches = g.source(e) == static_cast<Vertex>(v) ||
                             g.target(e) == static_cast<Vertex>(v);
        EXPECT_EQ(moved[e] != base[e], touches) << "edge " << e << " vertex " << v;
      }
    }
  }
}

TEST(ClosedLoopField, MatchesAggregateFormAndConservesMass) {
  const auto law = reference_law(3.0);
  Rng rng(42);
  for (int k = 0; k < 1000; ++k) {
    const Vector<double> x = sample_simplex<double>(rng, 5);
    const Vector<double> f = closed_loop_field(law, x);
    EXPECT_LE(std::abs(f.sum()), 1e-12);
    const Vector<double> oracle = aggregate_field(law.graph(), law.target().values(), 3.0, x);
    EXPECT_LE((f - oracle).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(LyapunovValue, Examples) {
  const FeedbackLaw<double> law(chain(2), Distribution<>(vec({0.5, 0.5})));
  EXPECT_DOUBLE_EQ(lyapunov_value(law, vec({1, 0})), 0.5);
  EXPECT_EQ(lyapunov_value(law, vec({0.5, 0.5})), 0.0);
  const auto ref = reference_law();
  EXPECT_EQ(lyapunov_value(ref, ref.target().values()), 0.0);
}

TEST(LyapunovValue, PositiveAwayFromTargetAndMatchesDefinition) {
  const auto law = reference_law();
  const auto& xd = law.target().values();
  Rng rng(43);
  for (int k = 0; k < 10000; ++k) {
    const Vector<double> x = sample_simplex<double>(rng, 5);
    const double v = lyapunov_value(law, x);
    EXPECT_GT(v, 0.0);
    EXPECT_NEAR(v, lyapunov_by_definition(xd, x), 1e-12);
  }
}

TEST(LyapunovDerivative, TwoVertexByHand) {
  // grad V . f = r . f = [2, 0] . [-1, 1] = -2.
  const FeedbackLaw<double> law(chain(2), Distribution<>(vec({0.5, 0.5})), 1.0);
  EXPECT_DOUBLE_EQ(lyapunov_derivative(law, vec({1, 0})), -2.0);
  EXPECT_EQ(lyapunov_derivative(law, vec({0.5, 0.5})), 0.0);
}

TEST(LyapunovDerivative, HalfOfOrderedPairSumMatchesDifferences) {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.below(7);
    const auto g = testing::random_bidirected(rng, m, 0.4);
    const double gain = 0.5 + 10 * rng.uniform();
    const FeedbackLaw<double> law(g, Distribution<>(testing::random_positive(rng, m)), gain);
    const auto& xd = law.target().values();
    for (int k = 0; k < 5; ++k) {
      const Vector<double> x = sample_simplex<double>(rng, m);
      double ordered_sum = 0;
      for (const auto& e : g.edges()) {
        const auto i = static_cast<Eigen::Index>(e.source);
        const auto j = static_cast<Eigen::Index>(e.target);
        const double gi = (x[i] - xd[i]) * (x[i] - xd[i]);
        const double gj = (x[j] - xd[j]) * (x[j] - xd[j]);
        ordered_sum -= std::pow(x[i] / xd[i] - x[j] / xd[j], 2) * (gi + gj);
      }
      const double fd = directional_difference(law, x);
      EXPECT_NEAR(fd / (gain * ordered_sum), 0.5, 1e-8);
      EXPECT_NEAR(lyapunov_derivative(law, x), fd, 1e-8 * std::abs(fd));
      EXPECT_LT(lyapunov_derivative(law, x), 0.0);
    }
  }
}

TEST(LyapunovDerivative, MatchesGradientDotField) {
  const auto law = reference_law();
  Rng rng(45);
  for (int k = 0; k < 1000; ++k) {
    const Vector<double> x = sample_simplex<double>(rng, 5);
    const double expected = lyapunov_gradient(law, x).dot(closed_loop_field(law, x));
    EXPECT_NEAR(lyapunov_derivative(law, x), expected, 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST(ClosedLoop, LyapunovDecreasesAlongTrajectories) {
  const auto law = reference_law();
  const auto& xd = law.target().values();
  Rng rng(46);
  for (int trial = 0; trial < 10; ++trial) {
    OdeOptions<double> opts;
    opts.horizon = 5;
    const auto traj = integrate_ode<double>(
        [&](const Vector<double>& x) { return closed_loop_field(law, x); },
        testing::random_positive(rng, 5, 0.01), opts);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      if (l1_distance(traj.states[k], xd) <= 1e-8) continue;
      ASSERT_LT(lyapunov_by_definition(xd, traj.states[k + 1]) -
                    lyapunov_by_definition(xd, traj.states[k]),
                0.0)
          << "trial " << trial << " step " << k;
    }
  }
}

TEST(ClosedLoop, GainRescalesTime) {
  const auto fast = reference_law(10);
  const auto slow = fast.with_gain(1);
  const Vector<double> x0 = testing::reference_initial();
  OdeOptions<double> a;
  a.horizon = 2;
  a.step = 1e-3;
  OdeOptions<double> b;
  b.horizon = 20;
  b.step = 1e-2;
  const auto ta = integrate_ode<double>(
      [&](const Vector<double>& x) { return closed_loop_field(fast, x); }, x0, a);
  const auto tb = integrate_ode<double>(
      [&](const Vector<double>& x) { return closed_loop_field(slow, x); }, x0, b);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t k = 0; k < ta.size(); k += 50) {
    EXPECT_LE((ta.states[k] - tb.states[k]).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(ClosedLoop, GloballyAttractiveFromRandomStarts) {
  const auto law = reference_law();
  const auto& xd = law.target().values();
  Rng rng(47);
  GradedOdeOptions<double> opts;
  opts.horizon = 1e9;
  opts.max_step = 1e5;
  for (int trial = 0; trial < 50; ++trial) {
    const Vector<double> x0 = sample_simplex<double>(rng, 5);
    const auto traj = integrate_ode_graded<double>(
        [&](const Vector<double>& x) { return closed_loop_field(law, x); }, x0, opts,
        [&](double, const Vector<double>& x) { return l1_distance(x, xd) < 1e-4; });
    EXPECT_LT(l1_distance(traj.final_state(), xd), 1e-4) << "trial " << trial;
  }
}

}  // namespace
}  // namespace swarmstab
