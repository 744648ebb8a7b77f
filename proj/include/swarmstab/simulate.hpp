#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Core>

#include "swarmstab/ctmc.hpp"
#include "swarmstab/graph.hpp"
#include "swarmstab/rng.hpp"
#include "swarmstab/types.hpp"

namespace swarmstab {

/// Time-stamped mean-field states.
template <typename Scalar = double>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<Vector<Scalar>> states;
  // Largest |1^T x - 1| seen after any step, before renormalisation.
  Scalar max_mass_drift = Scalar(0);

  std::size_t size() const { return times.size(); }
  const Vector<Scalar>& final_state() const { return states.back(); }
  Scalar final_time() const { return times.back(); }

  void push(Scalar t, Vector<Scalar> x) {
    times.push_back(t);
    states.push_back(std::move(x));
  }

  /// Linear interpolation; clamps outside [times.front(), times.back()].
  Vector<Scalar> state_at(Scalar t) const {
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(times.begin(), times.end(), t) - times.begin());
    const std::size_t lo = hi - 1;
    const Scalar w = (t - times[lo]) / (times[hi] - times[lo]);
    return (Scalar(1) - w) * states[lo] + w * states[hi];
  }
};

template <typename Scalar>
using VectorField = std::function<Vector<Scalar>(const Vector<Scalar>&)>;

template <typename Scalar>
using StopCondition = std::function<bool(Scalar, const Vector<Scalar>&)>;

template <typename Scalar = double>
struct OdeOptions {
  Scalar horizon = Scalar(10);
  Scalar step = Scalar(1e-3);
  // Record every n-th step; the initial and final states are always recorded.
  std::size_t record_stride = 1;
  // Entries below -negativity_tolerance after a step abort the integration.
  Scalar negativity_tolerance = Scalar(1e-12);
};

template <typename Scalar>
Vector<Scalar> rk4_step(const VectorField<Scalar>& field, const Vector<Scalar>& x, Scalar dt) {
  const Vector<Scalar> k1 = field(x);
  const Vector<Scalar> k2 = field(x + (dt / 2) * k1);
  const Vector<Scalar> k3 = field(x + (dt / 2) * k2);
  const Vector<Scalar> k4 = field(x + dt * k3);
  return x + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

namespace detail {

// Clamp tiny negatives, renormalise, and track the pre-normalisation drift.
// A mass error at round-off level is left alone, so a state the field does
// not move stays bit-identical.
template <typename Scalar>
void project_to_simplex(Vector<Scalar>& x, Scalar t, Scalar tol, Scalar& max_drift) {
  bool clamped = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < Scalar(0)) {
      clamped = true;
      if (x[i] < -tol || !std::isfinite(static_cast<double>(x[i]))) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "integration left the simplex at t=" << t << ": x" << (i + 1) << " = " << x[i];
        throw NumericalFailure(msg.str());
      }
      x[i] = Scalar(0);
    }
  }
  const Scalar mass = x.sum();
  const Scalar drift = std::abs(mass - Scalar(1));
  max_drift = std::max(max_drift, drift);
  const Scalar roundoff = Scalar(16) * std::numeric_limits<Scalar>::epsilon() * Scalar(x.size());
  if (clamped || drift > roundoff) x /= mass;
}

template <typename Scalar>
void check_start(const Vector<Scalar>& x0) {
  Distribution<Scalar> validated(x0, Scalar(1e-9));
  (void)validated;
}

}  // namespace detail

/// Classical fixed-step RK4 on the simplex. Stops early when `stop` returns
/// true for a post-step state; the last step is shortened to hit the horizon.
template <typename Scalar>
Trajectory<Scalar> integrate_ode(const VectorField<Scalar>& field, const Vector<Scalar>& x0,
                                 const OdeOptions<Scalar>& opts,
                                 const StopCondition<Scalar>& stop = {}) {
  if (!(opts.step > Scalar(0))) throw InvalidArgument("integration step must be positive");
  if (!(opts.horizon >= opts.step)) throw InvalidArgument("horizon must be at least one step");
  if (opts.record_stride == 0) throw InvalidArgument("record stride must be positive");
  detail::check_start(x0);

  Trajectory<Scalar> traj;
  Vector<Scalar> x = x0;
  Scalar t(0);
  traj.push(t, x);
  const auto steps = static_cast<std::uint64_t>(std::ceil(opts.horizon / opts.step - Scalar(1e-9)));
  for (std::uint64_t k = 1; k <= steps; ++k) {
    const Scalar t_next = (k == steps) ? opts.horizon : Scalar(k) * opts.step;
    x = rk4_step(field, x, t_next - t);
    t = t_next;
    detail::project_to_simplex(x, t, opts.negativity_tolerance, traj.max_mass_drift);
    const bool done = stop && stop(t, x);
    if (k % opts.record_stride == 0 || k == steps || done) traj.push(t, x);
    if (done) break;
  }
  return traj;
}

template <typename Scalar = double>
struct GradedOdeOptions {
  Scalar horizon = Scalar(1e6);
  Scalar initial_step = Scalar(1e-3);
  Scalar max_step = Scalar(1e3);
  // Each stage runs this many fixed steps, then the step grows by `growth`.
  std::size_t steps_per_stage = 1000;
  Scalar growth = Scalar(2);
  Scalar negativity_tolerance = Scalar(1e-12);
};

/// RK4 in stages of fixed steps whose size grows geometrically between
/// stages. Suited to fields whose time scale lengthens as the state settles
/// (the density-feedback loop decays like t^{-1/2}). Records each stage end.
template <typename Scalar>
Trajectory<Scalar> integrate_ode_graded(const VectorField<Scalar>& field, const Vector<Scalar>& x0,
                                        const GradedOdeOptions<Scalar>& opts,
                                        const StopCondition<Scalar>& stop = {}) {
  if (!(opts.initial_step > Scalar(0)) || !(opts.growth >= Scalar(1)) ||
      opts.steps_per_stage == 0) {
    throw InvalidArgument("invalid graded integration options");
  }
  detail::check_start(x0);
  Trajectory<Scalar> traj;
  Vector<Scalar> x = x0;
  Scalar t(0);
  Scalar dt = opts.initial_step;
  traj.push(t, x);
  while (t < opts.horizon) {
    for (std::size_t k = 0; k < opts.steps_per_stage && t < opts.horizon; ++k) {
      const Scalar h = std::min(dt, opts.horizon - t);
      x = rk4_step(field, x, h);
      t += h;
      detail::project_to_simplex(x, t, opts.negativity_tolerance, traj.max_mass_drift);
      if (stop && stop(t, x)) {
        traj.push(t, x);
        return traj;
      }
    }
    traj.push(t, x);
    dt = std::min(dt * opts.growth, opts.max_step);
  }
  return traj;
}

struct AgentEvent {
  std::size_t agent;
  Vertex from;
  Vertex to;
};

/// Event record of an N-agent run. counts[k] is the count vector after
/// event k; initial_counts precedes the first event.
struct AgentTrajectory {
  std::vector<double> event_times;
  std::vector<Eigen::VectorXi> counts;
  std::vector<AgentEvent> events;
  Eigen::VectorXi initial_counts;
  std::vector<Vertex> initial_vertex;  // per agent
  std::uint64_t seed = 0;
  int agent_count = 0;
  double horizon = 0;
  bool absorbed = false;  // total rate reached zero before the horizon

  std::size_t event_count() const { return events.size(); }
};

template <typename Derived>
Vector<double> empirical_density(const Eigen::MatrixBase<Derived>& counts, int n) {
  if (n <= 0) throw InvalidArgument("agent count must be positive");
  if (counts.sum() != n) throw InvalidArgument("counts do not sum to the agent count");
  return counts.template cast<double>() / static_cast<double>(n);
}

template <typename Scalar>
using RateSource = std::function<RateAssignment<Scalar>(const Vector<Scalar>&)>;

/// Exact event-driven simulation of N agents whose per-capita rates depend
/// on the empirical density. Agents at a vertex are exchangeable, so each
/// event moves a uniformly chosen agent of the firing edge's source.
template <typename Scalar>
AgentTrajectory simulate_agents(const DirectedGraph& g, const RateSource<Scalar>& rate_source,
                                const Eigen::VectorXi& x0_counts, double horizon,
                                std::uint64_t seed) {
  const auto m = static_cast<Eigen::Index>(g.vertex_count());
  if (x0_counts.size() != m) throw InvalidArgument("initial counts do not match the graph");
  if ((x0_counts.array() < 0).any()) throw InvalidArgument("initial counts must be nonnegative");
  const int n = x0_counts.sum();
  if (n <= 0) throw InvalidArgument("agent count must be positive");
  if (!(horizon > 0)) throw InvalidArgument("horizon must be positive");

  AgentTrajectory traj;
  traj.seed = seed;
  traj.agent_count = n;
  traj.horizon = horizon;
  traj.initial_counts = x0_counts;

  std::vector<std::vector<std::size_t>> residents(g.vertex_count());
  std::vector<Vertex> where(static_cast<std::size_t>(n));
  std::size_t next_id = 0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    for (int k = 0; k < x0_counts[static_cast<Eigen::Index>(v)]; ++k) {
      where[next_id] = v;
      residents[v].push_back(next_id++);
    }
  }
  traj.initial_vertex = where;

  Rng rng(seed);
  Eigen::VectorXi counts = x0_counts;
  std::vector<double> propensity(g.edge_count());
  double t = 0;
  for (;;) {
    const Vector<Scalar> density = (counts.cast<Scalar>() / Scalar(n)).eval();
    const RateAssignment<Scalar> u = rate_source(density);
    double total = 0;
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      propensity[e] =
          static_cast<double>(counts[static_cast<Eigen::Index>(g.source(e))]) *
          static_cast<double>(u[e]);
      total += propensity[e];
    }
    if (total <= 0) {
      traj.absorbed = true;
      break;
    }
    t += rng.exponential(total);
    if (t > horizon) break;

    double pick = rng.uniform() * total;
    EdgeId fired = g.edge_count();
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      if (propensity[e] <= 0) continue;
      fired = e;
      if (pick < propensity[e]) break;
      pick -= propensity[e];
    }
    const Vertex from = g.source(fired);
    const Vertex to = g.target(fired);
    auto& src = residents[from];
    const std::size_t slot = rng.below(src.size());
    const std::size_t agent = src[slot];
    src[slot] = src.back();
    src.pop_back();
    residents[to].push_back(agent);
    where[agent] = to;

    counts[static_cast<Eigen::Index>(from)] -= 1;
    counts[static_cast<Eigen::Index>(to)] += 1;
    traj.event_times.push_back(t);
    traj.counts.push_back(counts);
    traj.events.push_back({agent, from, to});
  }
  return traj;
}

inline std::optional<double> last_transition_time(const AgentTrajectory& traj) {
  if (traj.event_times.empty()) return std::nullopt;
  return traj.event_times.back();
}

/// Vertex of `agent` at time t (state after all events with time <= t).
inline Vertex agent_vertex_at(const AgentTrajectory& traj, std::size_t agent, double t) {
  Vertex v = traj.initial_vertex.at(agent);
  for (std::size_t k = 0; k < traj.events.size() && traj.event_times[k] <= t; ++k) {
    if (traj.events[k].agent == agent) v = traj.events[k].to;
  }
  return v;
}

}  // namespace swarmstab
