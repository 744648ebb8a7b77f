#include "swarmstab/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace swarmstab::io {

namespace {

Vertex vertex_from_json(const json& j, std::size_t m) {
  if (!j.is_number_integer()) throw InvalidArgument("vertex index must be an integer");
  const auto v = j.get<long long>();
  if (v < 1 || static_cast<std::size_t>(v) > m) {
    throw InvalidArgument("vertex index " + std::to_string(v) + " outside 1.." + std::to_string(m));
  }
  return static_cast<Vertex>(v - 1);
}

EdgeId edge_from_json(const DirectedGraph& g, const json& i, const json& j) {
  const Vertex s = vertex_from_json(i, g.vertex_count());
  const Vertex t = vertex_from_json(j, g.vertex_count());
  const auto e = g.find_edge(s, t);
  if (!e) {
    throw InvalidArgument("(" + std::to_string(s + 1) + "," + std::to_string(t + 1) +
                          ") is not an edge of the graph");
  }
  return *e;
}

double number_from_json(const json& j, const std::string& what) {
  if (!j.is_number()) throw InvalidArgument(what + " must be a number");
  return j.get<double>();
}

void write_row(std::ostream& os, double t, const Vector<double>& x) {
  os << format_double(t);
  for (double v : x) os << ',' << format_double(v);
  os << '\n';
}

void write_density_header(std::ostream& os, Eigen::Index m) {
  os << 't';
  for (Eigen::Index i = 1; i <= m; ++i) os << ",x" << i;
  os << '\n';
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

DirectedGraph graph_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.contains("edges")) {
    throw InvalidArgument("graph JSON needs \"vertices\" and \"edges\"");
  }
  if (!j["vertices"].is_number_integer() || j["vertices"].get<long long>() < 1) {
    throw InvalidArgument("\"vertices\" must be a positive integer");
  }
  const auto m = static_cast<std::size_t>(j["vertices"].get<long long>());
  if (!j["edges"].is_array()) throw InvalidArgument("\"edges\" must be an array");
  std::vector<Edge> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2) throw InvalidArgument("each edge must be [i, j]");
    edges.push_back({vertex_from_json(e[0], m), vertex_from_json(e[1], m)});
  }
  return DirectedGraph(m, std::move(edges));
}

json graph_to_json(const DirectedGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.source + 1, e.target + 1});
  return {{"vertices", g.vertex_count()}, {"edges", edges}};
}

Vector<double> vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidArgument(what + " must be a nonempty array");
  Vector<double> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = number_from_json(j[k], what + " entry");
  }
  return v;
}

json vector_to_json(const Vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

json rates_to_json(const DirectedGraph& g, const RateAssignment<double>& u) {
  json edges = json::array();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    edges.push_back({g.source(e) + 1, g.target(e) + 1, u[e]});
  }
  return {{"edges", edges}};
}

RateAssignment<double> rates_from_json(const DirectedGraph& g, const json& j) {
  if (!j.is_object() || !j.contains("edges") || !j["edges"].is_array()) {
    throw InvalidArgument("rates JSON needs an \"edges\" array");
  }
  Vector<double> rates = Vector<double>::Zero(static_cast<Eigen::Index>(g.edge_count()));
  std::vector<bool> seen(g.edge_count(), false);
  for (const auto& row : j["edges"]) {
    if (!row.is_array() || row.size() != 3) throw InvalidArgument("each rate must be [i, j, rate]");
    const EdgeId e = edge_from_json(g, row[0], row[1]);
    if (seen[e]) throw InvalidArgument("rate given twice for one edge");
    seen[e] = true;
    rates[static_cast<Eigen::Index>(e)] = number_from_json(row[2], "rate");
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw InvalidArgument("rates JSON does not cover every edge");
  }
  return RateAssignment<double>(g, std::move(rates));
}

json schedule_to_json(const DirectedGraph& g, const PiecewiseSchedule<double>& s) {
  json phases = json::array();
  for (const auto& p : s.phases()) {
    phases.push_back({{"duration", p.duration ? json(*p.duration) : json(nullptr)},
                      {"rates", rates_to_json(g, p.rates)}});
  }
  return {{"phases", phases}};
}

PiecewiseSchedule<double> schedule_from_json(const DirectedGraph& g, const json& j) {
  if (!j.is_object() || !j.contains("phases") || !j["phases"].is_array()) {
    throw InvalidArgument("schedule JSON needs a \"phases\" array");
  }
  std::vector<SchedulePhase<double>> phases;
  for (const auto& p : j["phases"]) {
    if (!p.is_object() || !p.contains("duration") || !p.contains("rates")) {
      throw InvalidArgument("each phase needs \"duration\" and \"rates\"");
    }
    std::optional<double> d;
    if (!p["duration"].is_null()) d = number_from_json(p["duration"], "duration");
    phases.push_back({d, rates_from_json(g, p["rates"])});
  }
  return PiecewiseSchedule<double>(std::move(phases));
}

json law_to_json(const FeedbackLaw<double>& law) {
  return {{"target", vector_to_json(law.target().values())}, {"gain", law.gain()}};
}

FeedbackLaw<double> law_from_json(const DirectedGraph& g, const json& j) {
  if (!j.is_object() || !j.contains("target") || !j.contains("gain")) {
    throw InvalidArgument("law JSON needs \"target\" and \"gain\"");
  }
  return FeedbackLaw<double>(g, Distribution<double>(vector_from_json(j["target"], "target")),
                             number_from_json(j["gain"], "gain"));
}

json candidate_to_json(const DirectedGraph& g, const PolyCandidate<double>& c) {
  json edges = json::array();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto k = static_cast<Eigen::Index>(e);
    edges.push_back({g.source(e) + 1, g.target(e) + 1, c.source_coeffs[k], c.target_coeffs[k]});
  }
  return {{"gain", c.gain}, {"edges", edges}};
}

PolyCandidate<double> candidate_from_json(const DirectedGraph& g, const json& j) {
  if (!j.is_object() || !j.contains("gain") || !j.contains("edges") || !j["edges"].is_array()) {
    throw InvalidArgument("candidate JSON needs \"gain\" and \"edges\"");
  }
  const auto n = static_cast<Eigen::Index>(g.edge_count());
  PolyCandidate<double> c{Vector<double>::Constant(n, -1), Vector<double>::Constant(n, -1),
                          number_from_json(j["gain"], "gain")};
  for (const auto& row : j["edges"]) {
    if (!row.is_array() || row.size() != 4) {
      throw InvalidArgument("each candidate row must be [i, j, a, b]");
    }
    const auto k = static_cast<Eigen::Index>(edge_from_json(g, row[0], row[1]));
    c.source_coeffs[k] = number_from_json(row[2], "coefficient");
    c.target_coeffs[k] = number_from_json(row[3], "coefficient");
  }
  c.validate(g);
  return c;
}

json certificate_to_json(const CertificateReport<double>& r) {
  return {{"samples_checked", r.samples_checked},
          {"max_vdot", r.max_vdot},
          {"min_margin", r.min_margin},
          {"violations", r.violations},
          {"passed", r.passed}};
}

json summary_to_json(const CertifySummary& s) {
  json checks = json::array();
  for (const auto& c : s.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"measured", c.measured},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
  }
  return {{"passed", s.passed()}, {"checks", checks}};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj) {
  if (traj.size() == 0) return;
  write_density_header(os, traj.states.front().size());
  for (std::size_t k = 0; k < traj.size(); ++k) write_row(os, traj.times[k], traj.states[k]);
}

void write_events_csv(std::ostream& os, const AgentTrajectory& traj) {
  os << "t,agent,from,to\n";
  for (std::size_t k = 0; k < traj.event_count(); ++k) {
    const auto& ev = traj.events[k];
    os << format_double(traj.event_times[k]) << ',' << ev.agent << ',' << ev.from + 1 << ','
       << ev.to + 1 << '\n';
  }
}

void write_agent_density_csv(std::ostream& os, const AgentTrajectory& traj) {
  write_density_header(os, traj.initial_counts.size());
  write_row(os, 0.0, empirical_density(traj.initial_counts, traj.agent_count));
  for (std::size_t k = 0; k < traj.event_count(); ++k) {
    write_row(os, traj.event_times[k], empirical_density(traj.counts[k], traj.agent_count));
  }
}

}  // namespace swarmstab::io
