#include "swarmstab/graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <string>

namespace swarmstab {

namespace {

std::string vertex_name(Vertex v) { return std::to_string(v + 1); }

// Vertices of `members` reachable from `start` following edges forwards
// (or backwards) without leaving `members`.
std::vector<bool> reach_within(const DirectedGraph& g, const VertexSet& members, Vertex start,
                               bool backwards) {
  std::vector<bool> seen(g.vertex_count(), false);
  std::deque<Vertex> queue{start};
  seen[start] = true;
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop_front();
    const auto& incident = backwards ? g.in_edges(v) : g.out_edges(v);
    for (EdgeId e : incident) {
      const Vertex w = backwards ? g.source(e) : g.target(e);
      if (!seen[w] && members.contains(w)) {
        seen[w] = true;
        queue.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace

DirectedGraph::DirectedGraph(std::size_t vertex_count, std::vector<Edge> edges)
    : vertex_count_(vertex_count),
      edges_(std::move(edges)),
      out_(vertex_count),
      in_(vertex_count) {
  if (vertex_count_ == 0) throw InvalidArgument("graph must have at least one vertex");
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    const auto [s, t] = edges_[e];
    if (s >= vertex_count_ || t >= vertex_count_) {
      throw InvalidArgument("edge (" + vertex_name(s) + "," + vertex_name(t) +
                            ") references a vertex outside 1.." +
                            std::to_string(vertex_count_));
    }
    if (s == t) throw InvalidArgument("self-loop at vertex " + vertex_name(s));
    if (!index_.emplace(std::pair{s, t}, e).second) {
      throw InvalidArgument("duplicate edge (" + vertex_name(s) + "," + vertex_name(t) + ")");
    }
    out_[s].push_back(e);
    in_[t].push_back(e);
  }
}

std::optional<EdgeId> DirectedGraph::find_edge(Vertex from, Vertex to) const {
  const auto it = index_.find({from, to});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VertexSet::VertexSet(std::size_t vertex_count, const std::vector<Vertex>& members)
    : mask_(vertex_count, false) {
  for (Vertex v : members) insert(v);
}

bool VertexSet::empty() const { return size() == 0; }

std::size_t VertexSet::size() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

std::vector<Vertex> VertexSet::members() const {
  std::vector<Vertex> out;
  for (Vertex v = 0; v < mask_.size(); ++v) {
    if (mask_[v]) out.push_back(v);
  }
  return out;
}

bool is_strongly_connected_within(const DirectedGraph& g, const VertexSet& members) {
  const auto verts = members.members();
  if (verts.size() <= 1) return true;
  const auto fwd = reach_within(g, members, verts.front(), false);
  const auto bwd = reach_within(g, members, verts.front(), true);
  return std::all_of(verts.begin(), verts.end(), [&](Vertex v) { return fwd[v] && bwd[v]; });
}

bool is_strongly_connected(const DirectedGraph& g) {
  VertexSet all(g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) all.insert(v);
  return is_strongly_connected_within(g, all);
}

bool is_bidirected(const DirectedGraph& g) {
  return std::all_of(g.edges().begin(), g.edges().end(), [&](const Edge& e) {
    return g.find_edge(e.target, e.source).has_value();
  });
}

Eigen::MatrixXi out_laplacian(const DirectedGraph& g) {
  const auto m = static_cast<Eigen::Index>(g.vertex_count());
  Eigen::MatrixXi lap = Eigen::MatrixXi::Zero(m, m);
  for (const auto& [s, t] : g.edges()) {
    lap(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) += 1;
    lap(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) -= 1;
  }
  return lap;
}

bool has_strongly_connected_support(const DirectedGraph& g, const VertexSet& support) {
  if (support.universe_size() != g.vertex_count()) {
    throw InvalidArgument("support size does not match the graph");
  }
  if (support.empty()) return false;
  return is_strongly_connected_within(g, support);
}

VertexSet sigma_set(const DirectedGraph& g, const VertexSet& zero, Vertex i, SigmaRule rule) {
  if (i >= g.vertex_count()) throw InvalidArgument("vertex " + vertex_name(i) + " out of range");
  if (zero.universe_size() != g.vertex_count()) {
    throw InvalidArgument("density mask size does not match the graph");
  }
  VertexSet result(g.vertex_count());
  // Vertices whose predecessors may still extend a qualifying path.
  std::vector<bool> expanded(g.vertex_count(), false);
  std::deque<Vertex> queue;

  auto admit = [&](Vertex w) {
    if (!result.contains(w)) result.insert(w);
    if (!expanded[w]) {
      expanded[w] = true;
      queue.push_back(w);
    }
  };

  for (EdgeId e : g.in_edges(i)) {
    const Vertex p = g.source(e);
    if (rule == SigmaRule::Literal || zero.contains(p)) admit(p);
  }
  while (!queue.empty()) {
    const Vertex q = queue.front();
    queue.pop_front();
    for (EdgeId e : g.in_edges(q)) {
      const Vertex w = g.source(e);
      if (zero.contains(w)) admit(w);
    }
  }
  return result;
}

DirectedGraph restricted_graph(const DirectedGraph& g, const VertexSet& support) {
  if (support.empty()) throw InvalidArgument("restricted_graph requires a nonempty support");
  std::vector<Edge> kept;
  for (const auto& e : g.edges()) {
    if (support.contains(e.source) && !support.contains(e.target)) continue;
    kept.push_back(e);
  }
  return DirectedGraph(g.vertex_count(), std::move(kept));
}

DirectedGraph rooted_in_branching(const DirectedGraph& g, Vertex root) {
  if (root >= g.vertex_count()) throw InvalidArgument("root out of range");
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> layer(g.vertex_count(), kUnreached);
  std::deque<Vertex> queue{root};
  layer[root] = 0;
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop_front();
    for (EdgeId e : g.in_edges(v)) {
      const Vertex w = g.source(e);
      if (layer[w] == kUnreached) {
        layer[w] = layer[v] + 1;
        queue.push_back(w);
      }
    }
  }
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (layer[v] == kUnreached) {
      throw InvalidArgument("vertex " + vertex_name(v) + " has no directed path to root " +
                            vertex_name(root));
    }
  }
  std::vector<Edge> kept;
  for (const auto& e : g.edges()) {
    if (layer[e.source] == layer[e.target] + 1) kept.push_back(e);
  }
  return DirectedGraph(g.vertex_count(), std::move(kept));
}

TransientPartition::TransientPartition(std::size_t vertex_count, std::vector<PartitionBlock> blocks)
    : blocks_(std::move(blocks)), block_of_(vertex_count, std::numeric_limits<std::size_t>::max()) {
  auto claim = [&](Vertex v, std::size_t n) {
    if (v >= vertex_count) throw InvalidArgument("partition vertex out of range");
    if (block_of_[v] != std::numeric_limits<std::size_t>::max()) {
      throw InvalidArgument("vertex " + vertex_name(v) + " appears in two partition blocks");
    }
    block_of_[v] = n;
  };
  for (std::size_t n = 0; n < blocks_.size(); ++n) {
    claim(blocks_[n].root, n);
    for (Vertex v : blocks_[n].transients) claim(v, n);
  }
  for (Vertex v = 0; v < vertex_count; ++v) {
    if (block_of_[v] == std::numeric_limits<std::size_t>::max()) {
      throw InvalidArgument("vertex " + vertex_name(v) + " is not covered by the partition");
    }
  }
}

std::vector<Vertex> TransientPartition::block_members(std::size_t n) const {
  std::vector<Vertex> out{blocks_.at(n).root};
  out.insert(out.end(), blocks_[n].transients.begin(), blocks_[n].transients.end());
  std::sort(out.begin(), out.end());
  return out;
}

TransientPartition transient_partition(const DirectedGraph& g, const VertexSet& support) {
  if (support.universe_size() != g.vertex_count()) {
    throw InvalidArgument("support size does not match the graph");
  }
  if (support.empty()) throw InvalidArgument("target distribution has empty support");
  if (!is_strongly_connected(g)) throw InvalidArgument("graph is not strongly connected");

  VertexSet zero(g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    if (!support.contains(v)) zero.insert(v);
  }
  std::vector<bool> claimed(g.vertex_count(), false);
  std::vector<PartitionBlock> blocks;
  for (Vertex root : support.members()) {
    PartitionBlock block{root, {}};
    claimed[root] = true;
    const VertexSet drain = sigma_set(g, zero, root, SigmaRule::ZeroPath);
    for (Vertex v : drain.members()) {
      if (zero.contains(v) && !claimed[v]) {
        claimed[v] = true;
        block.transients.push_back(v);
      }
    }
    blocks.push_back(std::move(block));
  }
  if (std::find(claimed.begin(), claimed.end(), false) != claimed.end()) {
    throw std::logic_error("transient partition left a zero-density vertex unclaimed");
  }
  return TransientPartition(g.vertex_count(), std::move(blocks));
}

DirectedGraph induced_subgraph(const DirectedGraph& g, const VertexSet& members) {
  const auto verts = members.members();
  std::vector<Vertex> relabel(g.vertex_count(), 0);
  for (std::size_t k = 0; k < verts.size(); ++k) relabel[verts[k]] = k;
  std::vector<Edge> kept;
  for (const auto& e : g.edges()) {
    if (members.contains(e.source) && members.contains(e.target)) {
      kept.push_back({relabel[e.source], relabel[e.target]});
    }
  }
  return DirectedGraph(verts.size(), std::move(kept));
}

}  // namespace swarmstab
