#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "swarmstab/certify.hpp"
#include "swarmstab/ctmc.hpp"
#include "swarmstab/feedback.hpp"
#include "swarmstab/graph.hpp"
#include "swarmstab/openloop.hpp"
#include "swarmstab/simulate.hpp"
#include "swarmstab/synth.hpp"

// File formats. Vertices are 1-based everywhere on disk; agent ids are
// 0-based. Floats in CSV use 17 significant digits.
namespace swarmstab::io {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// {"vertices": M, "edges": [[i, j], ...]}
DirectedGraph graph_from_json(const json& j);
json graph_to_json(const DirectedGraph& g);

Vector<double> vector_from_json(const json& j, const std::string& what);
json vector_to_json(const Vector<double>& v);

// {"edges": [[i, j, rate], ...]}
json rates_to_json(const DirectedGraph& g, const RateAssignment<double>& u);
RateAssignment<double> rates_from_json(const DirectedGraph& g, const json& j);

// {"phases": [{"duration": t | null, "rates": {...}}, ...]}
json schedule_to_json(const DirectedGraph& g, const PiecewiseSchedule<double>& s);
PiecewiseSchedule<double> schedule_from_json(const DirectedGraph& g, const json& j);

// {"target": [...], "gain": k}
json law_to_json(const FeedbackLaw<double>& law);
FeedbackLaw<double> law_from_json(const DirectedGraph& g, const json& j);

// {"gain": k, "edges": [[i, j, a, b], ...]}
json candidate_to_json(const DirectedGraph& g, const PolyCandidate<double>& c);
PolyCandidate<double> candidate_from_json(const DirectedGraph& g, const json& j);

json certificate_to_json(const CertificateReport<double>& r);
json summary_to_json(const CertifySummary& s);

std::string format_double(double v);

// t,x1,...,xM
void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj);
// t,agent,from,to
void write_events_csv(std::ostream& os, const AgentTrajectory& traj);
// t,x1,...,xM: empirical density at t = 0 and after every event
void write_agent_density_csv(std::ostream& os, const AgentTrajectory& traj);

}  // namespace swarmstab::io
