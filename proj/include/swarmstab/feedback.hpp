#pragma once

#include <cmath>
#include <memory>

#include <Eigen/Core>

#include "swarmstab/ctmc.hpp"
#include "swarmstab/graph.hpp"
#include "swarmstab/types.hpp"

namespace swarmstab {

/// Decentralised density feedback with zero control at the target.
///
/// On edge e = (i, j) the per-capita rate is
///
///     u_e(x) = gain * (g_i + g_j) / xd_i,   g_k = (x_k - xd_k)^2,
///
/// i.e. the symmetric aggregate rate matrix G(x) with entries g_i + g_j on
/// the edges, premultiplied by D = diag(1 / xd). The closed loop
/// xdot = G(x)^T D x is then agent-implementable: every rate depends only on
/// the densities at the two endpoints of its edge and vanishes identically
/// at x = xd.
template <typename Scalar = double>
class FeedbackLaw {
 public:
  /// Factor between the pairwise sum-of-squares form and dV/dt. Each
  /// unordered pair {i, j} of a bidirected graph shows up twice in the
  /// ordered sum, so
  ///     dV/dt = gain * gamma * sum_{i != j} -(r_i - r_j)^2 w_ij (g_i + g_j)
  /// with gamma = 1/2; the finite-difference tests pin this down.
  static constexpr double kPairSumFactor = 0.5;

  FeedbackLaw(std::shared_ptr<const DirectedGraph> graph, Distribution<Scalar> target,
              Scalar gain = Scalar(1))
      : graph_(std::move(graph)), target_(std::move(target)), gain_(gain) {
    if (!graph_) throw InvalidArgument("feedback law needs a graph");
    if (target_.size() != graph_->vertex_count()) {
      throw InvalidArgument("target distribution does not match the graph");
    }
    if (!target_.strictly_positive()) {
      throw InvalidArgument("feedback target must be strictly positive on every vertex");
    }
    if (!is_bidirected(*graph_)) throw InvalidArgument("feedback law needs a bidirected graph");
    if (!is_strongly_connected(*graph_)) {
      throw InvalidArgument("feedback law needs a strongly connected graph");
    }
    if (!(gain_ > Scalar(0)) || !std::isfinite(static_cast<double>(gain_))) {
      throw InvalidArgument("feedback gain must be positive");
    }
  }

  FeedbackLaw(const DirectedGraph& graph, Distribution<Scalar> target, Scalar gain = Scalar(1))
      : FeedbackLaw(std::make_shared<const DirectedGraph>(graph), std::move(target), gain) {}

  const DirectedGraph& graph() const { return *graph_; }
  const Distribution<Scalar>& target() const { return target_; }
  Scalar gain() const { return gain_; }

  FeedbackLaw with_gain(Scalar gain) const { return FeedbackLaw(graph_, target_, gain); }

  /// Uniform bound on every rate over the simplex: g_k <= 1 there.
  Scalar rate_bound() const { return Scalar(2) * gain_ / target_.values().minCoeff(); }

 private:
  std::shared_ptr<const DirectedGraph> graph_;
  Distribution<Scalar> target_;
  Scalar gain_;
};

template <typename Scalar, typename Derived>
RateAssignment<Scalar> feedback_rates(const FeedbackLaw<Scalar>& law,
                                      const Eigen::MatrixBase<Derived>& x) {
  const auto& g = law.graph();
  const auto& xd = law.target().values();
  const Vector<Scalar> dev = (x - xd).array().square().matrix();
  Vector<Scalar> u(static_cast<Eigen::Index>(g.edge_count()));
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto i = static_cast<Eigen::Index>(g.source(e));
    const auto j = static_cast<Eigen::Index>(g.target(e));
    u[static_cast<Eigen::Index>(e)] = law.gain() * (dev[i] + dev[j]) / xd[i];
  }
  return RateAssignment<Scalar>(g, std::move(u));
}

template <typename Scalar, typename Derived>
Vector<Scalar> closed_loop_field(const FeedbackLaw<Scalar>& law,
                                 const Eigen::MatrixBase<Derived>& x) {
  return control_form_field(law.graph(), feedback_rates(law, x), x);
}

/// V(x) = 1/2 (x^T D x - xd^T D xd), D = diag(1/xd).
///
/// Evaluated as 1/2 y^T D y + 1^T y with y = x - xd, which is the same
/// polynomial but avoids cancelling two O(1) terms near the target.
template <typename Scalar, typename Derived>
Scalar quadratic_lyapunov(const Vector<Scalar>& xd, const Eigen::MatrixBase<Derived>& x) {
  const Vector<Scalar> y = x - xd;
  return Scalar(0.5) * (y.array().square() / xd.array()).sum() + y.sum();
}

template <typename Scalar, typename Derived>
Scalar lyapunov_value(const FeedbackLaw<Scalar>& law, const Eigen::MatrixBase<Derived>& x) {
  return quadratic_lyapunov(law.target().values(), x);
}

/// Gradient of V: D x = x / xd.
template <typename Scalar, typename Derived>
Vector<Scalar> lyapunov_gradient(const FeedbackLaw<Scalar>& law,
                                 const Eigen::MatrixBase<Derived>& x) {
  return (x.array() / law.target().values().array()).matrix();
}

/// Analytic dV/dt along the closed loop, as a negative sum of squares in
/// r = x / xd.
template <typename Scalar, typename Derived>
Scalar lyapunov_derivative(const FeedbackLaw<Scalar>& law, const Eigen::MatrixBase<Derived>& x) {
  const auto& g = law.graph();
  const auto& xd = law.target().values();
  const Vector<Scalar> r = (x.array() / xd.array()).matrix();
  Scalar sum(0);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto i = static_cast<Eigen::Index>(g.source(e));
    const auto j = static_cast<Eigen::Index>(g.target(e));
    const Scalar gi = (x[i] - xd[i]) * (x[i] - xd[i]);
    const Scalar gj = (x[j] - xd[j]) * (x[j] - xd[j]);
    sum -= (r[i] - r[j]) * (r[i] - r[j]) * (gi + gj);
  }
  return law.gain() * Scalar(FeedbackLaw<Scalar>::kPairSumFactor) * sum;
}

}  // namespace swarmstab
