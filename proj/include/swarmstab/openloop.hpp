#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <vector>

#include "swarmstab/ctmc.hpp"
#include "swarmstab/graph.hpp"
#include "swarmstab/simulate.hpp"
#include "swarmstab/types.hpp"

namespace swarmstab {

/// Time-invariant rates under which xd is the unique, globally attracting
/// stationary distribution.
///
/// Edges leaving the support are switched off, the unit-rate chain on what
/// remains has a unique stationary vector z (concentrated on the support),
/// and each vertex's outgoing rates are scaled by z_i / xd_i so that
/// G^T xd = 0. Off the support the scale is 1.
template <typename Scalar>
RateAssignment<Scalar> synthesize_invariant_rates(const DirectedGraph& g,
                                                  const Distribution<Scalar>& xd) {
  if (xd.size() != g.vertex_count()) throw InvalidArgument("target does not match the graph");
  if (!is_strongly_connected(g)) throw InvalidArgument("graph is not strongly connected");
  const VertexSet support = support_of(xd.values());
  if (!has_strongly_connected_support(g, support)) {
    std::ostringstream msg;
    msg << "target support {";
    const auto members = support.members();
    for (std::size_t k = 0; k < members.size(); ++k) {
      msg << (k ? "," : "") << members[k] + 1;
    }
    msg << "} does not induce a strongly connected subgraph";
    throw InfeasibleTarget(msg.str());
  }

  const DirectedGraph kept = restricted_graph(g, support);
  const auto unit = generator_from_rates(kept, RateAssignment<Scalar>::constant(kept, Scalar(1)));
  const Distribution<Scalar> z = stationary_distribution(unit);

  Vector<Scalar> scale = Vector<Scalar>::Ones(static_cast<Eigen::Index>(g.vertex_count()));
  for (Vertex v : support.members()) scale[static_cast<Eigen::Index>(v)] = z[v] / xd[v];

  Vector<Scalar> rates = Vector<Scalar>::Zero(static_cast<Eigen::Index>(g.edge_count()));
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edge(e);
    if (kept.find_edge(edge.source, edge.target)) {
      rates[static_cast<Eigen::Index>(e)] = scale[static_cast<Eigen::Index>(edge.source)];
    }
  }
  return RateAssignment<Scalar>(g, std::move(rates));
}

/// Interior point whose mass on each block equals the target mass of the
/// block's root, spread uniformly over the block.
template <typename Scalar>
Distribution<Scalar> intermediate_distribution(const TransientPartition& partition,
                                               const Distribution<Scalar>& xd) {
  Vector<Scalar> x(static_cast<Eigen::Index>(xd.size()));
  for (std::size_t n = 0; n < partition.block_count(); ++n) {
    const auto& block = partition.blocks()[n];
    const auto members = partition.block_members(n);
    const Scalar mass = xd[block.root];
    if (!(mass > Scalar(0))) {
      throw InvalidArgument("block rooted at vertex " + std::to_string(block.root + 1) +
                            " has zero target mass, so no strictly positive intermediate "
                            "distribution exists");
    }
    for (Vertex v : block.transients) {
      if (xd[v] != Scalar(0)) {
        throw InvalidArgument("transient vertex " + std::to_string(v + 1) +
                              " has positive target density");
      }
    }
    for (Vertex v : members) {
      x[static_cast<Eigen::Index>(v)] = mass / Scalar(members.size());
    }
  }
  return Distribution<Scalar>(std::move(x), Scalar(1e-12));
}

/// Rate 0 on edges leaving their block or starting at a root, 1 otherwise.
template <typename Scalar = double>
RateAssignment<Scalar> terminal_rates(const DirectedGraph& g, const TransientPartition& partition) {
  Vector<Scalar> rates(static_cast<Eigen::Index>(g.edge_count()));
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto [s, t] = g.edge(e);
    const bool leaves_block = partition.block_of(s) != partition.block_of(t);
    rates[static_cast<Eigen::Index>(e)] =
        (leaves_block || partition.is_root(s)) ? Scalar(0) : Scalar(1);
  }
  return RateAssignment<Scalar>(g, std::move(rates));
}

/// Limit of the terminal phase from state x: every block's mass collected at
/// its root.
template <typename Scalar, typename Derived>
Vector<Scalar> terminal_limit(const TransientPartition& partition,
                              const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> out = Vector<Scalar>::Zero(x.size());
  for (std::size_t n = 0; n < partition.block_count(); ++n) {
    Scalar mass(0);
    for (Vertex v : partition.block_members(n)) mass += x[static_cast<Eigen::Index>(v)];
    out[static_cast<Eigen::Index>(partition.blocks()[n].root)] = mass;
  }
  return out;
}

template <typename Scalar = double>
struct SchedulePhase {
  std::optional<Scalar> duration;  // empty: unbounded
  RateAssignment<Scalar> rates;
};

/// Piecewise-constant rates; only the last phase may be unbounded.
template <typename Scalar = double>
class PiecewiseSchedule {
 public:
  PiecewiseSchedule() = default;
  explicit PiecewiseSchedule(std::vector<SchedulePhase<Scalar>> phases)
      : phases_(std::move(phases)) {
    for (std::size_t k = 0; k < phases_.size(); ++k) {
      const auto& d = phases_[k].duration;
      if (!d && k + 1 != phases_.size()) {
        throw InvalidArgument("only the last schedule phase may be unbounded");
      }
      if (d && !(*d > Scalar(0))) throw InvalidArgument("phase durations must be positive");
    }
  }

  const std::vector<SchedulePhase<Scalar>>& phases() const { return phases_; }
  std::size_t size() const { return phases_.size(); }

 private:
  std::vector<SchedulePhase<Scalar>> phases_;
};

template <typename Scalar = double>
struct ScheduleOptions {
  Scalar step = Scalar(1e-3);
  Scalar steering_cap = Scalar(1e4);
};

template <typename Scalar = double>
struct ScheduleResult {
  PiecewiseSchedule<Scalar> schedule;
  TransientPartition partition;
  Distribution<Scalar> intermediate;
  Trajectory<Scalar> steering;  // phase-1 ODE run
};

namespace detail {

template <typename Scalar>
VectorField<Scalar> linear_field(const Generator<Scalar>& gen) {
  Matrix<Scalar> gt = gen.matrix().transpose();
  return [gt = std::move(gt)](const Vector<Scalar>& x) -> Vector<Scalar> { return gt * x; };
}

// RK4 is stable for |lambda dt| < 2.78; keep well inside that.
template <typename Scalar>
Scalar stable_step(const Generator<Scalar>& gen, Scalar requested) {
  const Scalar fastest = gen.matrix().diagonal().cwiseAbs().maxCoeff();
  if (fastest <= Scalar(0)) return requested;
  return std::min(requested, Scalar(0.25) / fastest);
}

}  // namespace detail

/// Two-phase schedule reaching any xd asymptotically.
///
/// Phase 1 steers towards the intermediate distribution with invariant rates
/// until the L1 distance drops to eps. Phase 2 (unbounded) runs the terminal
/// rates, which conserve block masses and drain every transient into its
/// root, so the limit lies within eps of xd in L1.
template <typename Scalar>
ScheduleResult<Scalar> asymptotic_schedule(const DirectedGraph& g, const Distribution<Scalar>& x0,
                                           const Distribution<Scalar>& xd, Scalar eps,
                                           const ScheduleOptions<Scalar>& opts = {}) {
  if (!(eps > Scalar(0))) throw InvalidArgument("eps must be positive");
  if (x0.size() != g.vertex_count() || xd.size() != g.vertex_count()) {
    throw InvalidArgument("distributions do not match the graph");
  }
  if (!is_strongly_connected(g)) throw InvalidArgument("graph is not strongly connected");

  TransientPartition partition = transient_partition(g, xd);
  Distribution<Scalar> x_in = intermediate_distribution(partition, xd);
  const RateAssignment<Scalar> steer = synthesize_invariant_rates(g, x_in);
  const Generator<Scalar> gen = generator_from_rates(g, steer);

  std::vector<SchedulePhase<Scalar>> phases;
  Trajectory<Scalar> steering;
  if (l1_distance(x0.values(), x_in.values()) <= eps) {
    steering.push(Scalar(0), x0.values());
  } else {
    OdeOptions<Scalar> ode;
    ode.horizon = opts.steering_cap;
    ode.step = detail::stable_step(gen, opts.step);
    ode.record_stride = 100;
    const Vector<Scalar> goal = x_in.values();
    steering = integrate_ode<Scalar>(
        detail::linear_field(gen), x0.values(), ode,
        [&](Scalar, const Vector<Scalar>& x) { return l1_distance(x, goal) <= eps; });
    const Scalar reached = l1_distance(steering.final_state(), goal);
    if (reached > eps) {
      std::ostringstream msg;
      msg << "steering phase hit the " << opts.steering_cap
          << " time cap at L1 distance " << reached << " from the intermediate distribution";
      throw NumericalFailure(msg.str());
    }
    phases.push_back({steering.final_time(), steer});
  }
  phases.push_back({std::nullopt, terminal_rates<Scalar>(g, partition)});
  return {PiecewiseSchedule<Scalar>(std::move(phases)), std::move(partition), std::move(x_in),
          std::move(steering)};
}

template <typename Scalar = double>
struct ScheduleRunOptions {
  Scalar step = Scalar(1e-3);
  // Time budget for the unbounded phase.
  Scalar final_phase_horizon = Scalar(200);
  std::size_t record_stride = 100;
};

/// Integrates the forward equation through every phase of a schedule. The
/// unbounded phase runs for final_phase_horizon, or until `settle` holds.
template <typename Scalar>
Trajectory<Scalar> run_schedule(const DirectedGraph& g, const PiecewiseSchedule<Scalar>& schedule,
                                const Distribution<Scalar>& x0,
                                const ScheduleRunOptions<Scalar>& opts = {},
                                const StopCondition<Scalar>& settle = {}) {
  Trajectory<Scalar> all;
  all.push(Scalar(0), x0.values());
  Vector<Scalar> x = x0.values();
  Scalar t0(0);
  for (const auto& phase : schedule.phases()) {
    const Generator<Scalar> gen = generator_from_rates(g, phase.rates);
    OdeOptions<Scalar> ode;
    ode.horizon = phase.duration.value_or(opts.final_phase_horizon);
    ode.step = std::min(detail::stable_step(gen, opts.step), ode.horizon);
    ode.record_stride = opts.record_stride;
    const StopCondition<Scalar> stop =
        phase.duration ? StopCondition<Scalar>{}
                       : (settle ? StopCondition<Scalar>([&](Scalar t, const Vector<Scalar>& s) {
                            return settle(t0 + t, s);
                          })
                                 : StopCondition<Scalar>{});
    const Trajectory<Scalar> piece = integrate_ode<Scalar>(detail::linear_field(gen), x, ode, stop);
    for (std::size_t k = 1; k < piece.size(); ++k) all.push(t0 + piece.times[k], piece.states[k]);
    all.max_mass_drift = std::max(all.max_mass_drift, piece.max_mass_drift);
    x = piece.final_state();
    t0 += piece.final_time();
  }
  return all;
}

}  // namespace swarmstab
