#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "swarmstab/ctmc.hpp"
#include "swarmstab/feedback.hpp"
#include "swarmstab/openloop.hpp"
#include "swarmstab/simulate.hpp"
#include "swarmstab/types.hpp"

namespace swarmstab {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0;
  double tolerance = 0;
  std::string detail;
};

struct CertifySummary {
  std::vector<CheckResult> checks;

  void add(CheckResult c) { checks.push_back(std::move(c)); }
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

/// ||G^T xd||_inf <= tol, and a simple zero eigenvalue with the rest of the
/// spectrum in the open left half-plane.
template <typename Scalar>
CheckResult verify_stationary(const Generator<Scalar>& gen, const Distribution<Scalar>& xd,
                              Scalar tol) {
  CheckResult r{"stationary", false, 0, static_cast<double>(tol), ""};
  const Vector<Scalar> residual = forward_field(gen, xd.values());
  r.measured = static_cast<double>(residual.template lpNorm<Eigen::Infinity>());
  const auto spectrum = spectral_check(gen);
  r.passed = r.measured <= r.tolerance && spectrum.simple_zero_and_stable();
  r.detail = "zero_multiplicity=" + std::to_string(spectrum.zero_multiplicity);
  if (spectrum.max_nonzero_real_part) {
    r.detail += " max_nonzero_real_part=" +
                std::to_string(static_cast<double>(*spectrum.max_nonzero_real_part));
  }
  return r;
}

/// V strictly decreasing between consecutive samples that start outside the
/// exclusion radius (L1) around the target. measured is the largest
/// increase V(x_{k+1}) - V(x_k) over the checked pairs.
template <typename Scalar>
CheckResult lyapunov_monotone(const Trajectory<Scalar>& traj, const FeedbackLaw<Scalar>& law,
                              Scalar exclusion = Scalar(1e-8)) {
  CheckResult r{"lyapunov_monotone", true, -std::numeric_limits<double>::infinity(),
                static_cast<double>(exclusion), ""};
  const auto& xd = law.target().values();
  std::size_t checked = 0;
  std::size_t violations = 0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    if (l1_distance(traj.states[k], xd) <= exclusion) continue;
    ++checked;
    const Scalar rise =
        lyapunov_value(law, traj.states[k + 1]) - lyapunov_value(law, traj.states[k]);
    r.measured = std::max(r.measured, static_cast<double>(rise));
    if (!(rise < Scalar(0))) ++violations;
  }
  r.passed = violations == 0;
  r.detail = std::to_string(checked) + " pairs checked, " + std::to_string(violations) +
             " non-decreasing";
  return r;
}

/// sup over event times of ||x_hat(t) - x_ode(t)||_1, the ODE state linearly
/// interpolated. The initial state counts as an event at t = 0.
template <typename Scalar>
Scalar deviation_metric(const Trajectory<Scalar>& ode, const AgentTrajectory& agents) {
  if (ode.size() == 0) throw InvalidArgument("empty ODE trajectory");
  const double t_end = static_cast<double>(ode.final_time());
  if (static_cast<double>(ode.times.front()) > 0 || t_end < 0) {
    throw InvalidArgument("ODE trajectory does not overlap the agent run");
  }
  const int n = agents.agent_count;
  Scalar worst = l1_distance(empirical_density(agents.initial_counts, n).template cast<Scalar>(),
                             ode.state_at(Scalar(0)));
  for (std::size_t k = 0; k < agents.event_count(); ++k) {
    const double t = agents.event_times[k];
    if (t > t_end) break;
    const Vector<Scalar> xhat = empirical_density(agents.counts[k], n).template cast<Scalar>();
    worst = std::max(worst, l1_distance(xhat, ode.state_at(static_cast<Scalar>(t))));
  }
  return worst;
}

/// Largest per-step change in the mass of any block; a flow that keeps
/// every block closed gives round-off only.
template <typename Scalar>
Scalar max_block_mass_change(const Trajectory<Scalar>& traj, const TransientPartition& partition) {
  Scalar worst(0);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    for (std::size_t n = 0; n < partition.block_count(); ++n) {
      Scalar before(0), after(0);
      for (Vertex v : partition.block_members(n)) {
        before += traj.states[k][static_cast<Eigen::Index>(v)];
        after += traj.states[k + 1][static_cast<Eigen::Index>(v)];
      }
      worst = std::max(worst, std::abs(after - before));
    }
  }
  return worst;
}

}  // namespace swarmstab
