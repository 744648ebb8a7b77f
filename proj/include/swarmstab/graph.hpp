#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "swarmstab/types.hpp"

namespace swarmstab {

struct Edge {
  Vertex source;
  Vertex target;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed graph on vertices 0..M-1 without self-loops or duplicate edges.
///
/// Edge ids are positions in the construction-order edge list; every rate
/// vector in the library is indexed by them. Vertices are 0-based in code and
/// 1-based in every file format.
class DirectedGraph {
 public:
  DirectedGraph(std::size_t vertex_count, std::vector<Edge> edges);

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  Vertex source(EdgeId e) const { return edges_.at(e).source; }
  Vertex target(EdgeId e) const { return edges_.at(e).target; }

  std::optional<EdgeId> find_edge(Vertex from, Vertex to) const;
  const std::vector<EdgeId>& out_edges(Vertex v) const { return out_.at(v); }
  const std::vector<EdgeId>& in_edges(Vertex v) const { return in_.at(v); }

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.vertex_count_ == b.vertex_count_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t vertex_count_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
  std::map<std::pair<Vertex, Vertex>, EdgeId> index_;
};

/// Membership mask over the vertices of a graph.
class VertexSet {
 public:
  VertexSet() = default;
  explicit VertexSet(std::size_t vertex_count) : mask_(vertex_count, false) {}
  VertexSet(std::size_t vertex_count, const std::vector<Vertex>& members);

  void insert(Vertex v) { mask_.at(v) = true; }
  bool contains(Vertex v) const { return mask_.at(v); }
  bool empty() const;
  std::size_t size() const;
  std::size_t universe_size() const { return mask_.size(); }
  std::vector<Vertex> members() const;

  friend bool operator==(const VertexSet&, const VertexSet&) = default;

 private:
  std::vector<bool> mask_;
};

/// Vertices with strictly positive density.
template <typename Derived>
VertexSet support_of(const Eigen::MatrixBase<Derived>& x) {
  VertexSet s(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > typename Derived::Scalar(0)) s.insert(static_cast<Vertex>(i));
  }
  return s;
}

bool is_strongly_connected(const DirectedGraph& g);

/// Strong connectivity of the subgraph induced on `members`.
bool is_strongly_connected_within(const DirectedGraph& g, const VertexSet& members);

bool is_bidirected(const DirectedGraph& g);

/// D_out - A with A(i, j) = 1 iff (j, i) is an edge.
Eigen::MatrixXi out_laplacian(const DirectedGraph& g);

bool has_strongly_connected_support(const DirectedGraph& g, const VertexSet& support);

template <typename Scalar>
bool has_strongly_connected_support(const DirectedGraph& g, const Distribution<Scalar>& x) {
  return has_strongly_connected_support(g, support_of(x.values()));
}

/// Path condition used when collecting the vertices that can drain into `i`.
enum class SigmaRule {
  // Sources of e_1..e_{f-1} have zero density; the source of the last edge
  // is unconstrained, so every in-neighbour of i qualifies.
  Literal,
  // Every vertex of the path other than i has zero density.
  ZeroPath,
};

/// Vertices j with a directed path j -> ... -> i satisfying `rule`, where
/// `zero` marks the vertices of zero density.
VertexSet sigma_set(const DirectedGraph& g, const VertexSet& zero, Vertex i,
                    SigmaRule rule = SigmaRule::Literal);

template <typename Scalar>
VertexSet sigma_set(const DirectedGraph& g, const Distribution<Scalar>& y, Vertex i,
                    SigmaRule rule = SigmaRule::Literal) {
  VertexSet zero(g.vertex_count());
  for (std::size_t v = 0; v < y.size(); ++v) {
    if (y[v] == Scalar(0)) zero.insert(v);
  }
  return sigma_set(g, zero, i, rule);
}

/// Same vertices; drops every edge that leaves `support`.
DirectedGraph restricted_graph(const DirectedGraph& g, const VertexSet& support);

/// Breadth-first layering towards `root`, keeping every edge from layer n to
/// layer n-1. Throws InvalidArgument if some vertex cannot reach `root`.
DirectedGraph rooted_in_branching(const DirectedGraph& g, Vertex root);

struct PartitionBlock {
  Vertex root;
  std::vector<Vertex> transients;
};

/// Cover of the vertex set by blocks, one per positive-density vertex.
class TransientPartition {
 public:
  TransientPartition(std::size_t vertex_count, std::vector<PartitionBlock> blocks);

  const std::vector<PartitionBlock>& blocks() const { return blocks_; }
  std::size_t block_count() const { return blocks_.size(); }
  std::size_t block_of(Vertex v) const { return block_of_.at(v); }
  bool is_root(Vertex v) const { return blocks_[block_of(v)].root == v; }
  std::vector<Vertex> block_members(std::size_t n) const;

 private:
  std::vector<PartitionBlock> blocks_;
  std::vector<std::size_t> block_of_;
};

/// Roots are the support vertices in ascending order; block n takes its root
/// plus every unclaimed zero-density vertex whose zero-density path leads to
/// the root (SigmaRule::ZeroPath).
TransientPartition transient_partition(const DirectedGraph& g, const VertexSet& support);

template <typename Scalar>
TransientPartition transient_partition(const DirectedGraph& g, const Distribution<Scalar>& xd) {
  return transient_partition(g, support_of(xd.values()));
}

/// Subgraph induced on `members`, relabelled to 0..|members|-1 in ascending order.
DirectedGraph induced_subgraph(const DirectedGraph& g, const VertexSet& members);

}  // namespace swarmstab
