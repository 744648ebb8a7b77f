#pragma once

// Fixtures and independent oracles shared by the unit and acceptance suites.
// Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "swarmstab/graph.hpp"
#include "swarmstab/rng.hpp"
#include "swarmstab/types.hpp"

namespace swarmstab::testing {

/// Five-vertex bidirected chain 1 <-> 2 <-> 3 <-> 4 <-> 5.
inline DirectedGraph chain(std::size_t m) {
  std::vector<Edge> edges;
  for (Vertex v = 0; v + 1 < m; ++v) {
    edges.push_back({v, v + 1});
    edges.push_back({v + 1, v});
  }
  return DirectedGraph(m, std::move(edges));
}

inline DirectedGraph reference_chain() { return chain(5); }

inline Vector<double> vec(std::initializer_list<double> xs) {
  Vector<double> v(static_cast<Eigen::Index>(xs.size()));
  std::copy(xs.begin(), xs.end(), v.begin());
  return v;
}

// Reference setup of the five-vertex experiments.
inline Vector<double> reference_initial() { return vec({0.4, 0.1, 0.05, 0.35, 0.1}); }
inline Vector<double> reference_target() { return vec({0.1, 0.2, 0.25, 0.4, 0.05}); }

/// Random strongly connected digraph: a random Hamiltonian cycle plus each
/// other ordered pair with probability p.
inline DirectedGraph random_strongly_connected(Rng& rng, std::size_t m, double p) {
  std::vector<Vertex> perm(m);
  std::iota(perm.begin(), perm.end(), Vertex{0});
  for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<std::vector<bool>> has(m, std::vector<bool>(m, false));
  std::vector<Edge> edges;
  if (m > 1) {
    for (std::size_t k = 0; k < m; ++k) {
      const Vertex s = perm[k], t = perm[(k + 1) % m];
      if (!has[s][t]) {
        has[s][t] = true;
        edges.push_back({s, t});
      }
    }
  }
  for (Vertex s = 0; s < m; ++s) {
    for (Vertex t = 0; t < m; ++t) {
      if (s != t && !has[s][t] && rng.uniform() < p) {
        has[s][t] = true;
        edges.push_back({s, t});
      }
    }
  }
  return DirectedGraph(m, std::move(edges));
}

/// Random connected bidirected graph: random spanning tree plus extra pairs.
inline DirectedGraph random_bidirected(Rng& rng, std::size_t m, double p) {
  std::vector<std::vector<bool>> has(m, std::vector<bool>(m, false));
  std::vector<Edge> edges;
  auto link = [&](Vertex a, Vertex b) {
    if (a == b || has[a][b]) return;
    has[a][b] = has[b][a] = true;
    edges.push_back({a, b});
    edges.push_back({b, a});
  };
  for (Vertex v = 1; v < m; ++v) link(v, static_cast<Vertex>(rng.below(v)));
  for (Vertex a = 0; a < m; ++a) {
    for (Vertex b = a + 1; b < m; ++b) {
      if (rng.uniform() < p) link(a, b);
    }
  }
  return DirectedGraph(m, std::move(edges));
}

/// Random digraph with no connectivity guarantee.
inline DirectedGraph random_digraph(Rng& rng, std::size_t m, double p) {
  std::vector<Edge> edges;
  for (Vertex s = 0; s < m; ++s) {
    for (Vertex t = 0; t < m; ++t) {
      if (s != t && rng.uniform() < p) edges.push_back({s, t});
    }
  }
  return DirectedGraph(m, std::move(edges));
}

/// Strictly positive random distribution, entries bounded below by floor.
inline Vector<double> random_positive(Rng& rng, std::size_t m, double floor = 0.02) {
  Vector<double> x = sample_simplex<double>(rng, m);
  x = (x.array() + floor).matrix();
  return x / x.sum();
}

/// Enumerates every directed walk from `from` that visits no vertex twice
/// (except that it may return to `from` at the very end), calling
/// visit(path) with the vertex sequence for each walk ending at `to`.
inline void enumerate_simple_paths(const DirectedGraph& g, Vertex from, Vertex to,
                                   const std::function<void(const std::vector<Vertex>&)>& visit) {
  std::vector<Vertex> path{from};
  std::vector<bool> used(g.vertex_count(), false);
  used[from] = true;
  std::function<void(Vertex)> dfs = [&](Vertex v) {
    for (const auto& e : g.edges()) {
      if (e.source != v) continue;
      const Vertex w = e.target;
      if (w == to) {
        path.push_back(w);
        visit(path);
        path.pop_back();
      }
      if (!used[w] && w != to) {
        used[w] = true;
        path.push_back(w);
        dfs(w);
        path.pop_back();
        used[w] = false;
      }
    }
  };
  dfs(from);
}

/// Brute-force reachability restricted to `members`, by path enumeration.
inline bool path_exists_within(const DirectedGraph& g, const std::vector<bool>& members, Vertex a,
                               Vertex b) {
  if (a == b) return true;
  bool found = false;
  enumerate_simple_paths(g, a, b, [&](const std::vector<Vertex>& p) {
    if (std::all_of(p.begin(), p.end(), [&](Vertex v) { return members[v]; })) found = true;
  });
  return found;
}

inline bool brute_strongly_connected(const DirectedGraph& g, const std::vector<bool>& members) {
  for (Vertex a = 0; a < g.vertex_count(); ++a) {
    for (Vertex b = 0; b < g.vertex_count(); ++b) {
      if (members[a] && members[b] && !path_exists_within(g, members, a, b)) return false;
    }
  }
  return true;
}

/// sigma_y(i) by enumerating paths j = v0 -> ... -> vf = i. With
/// `literal`, v0..v_{f-2} must have zero density; otherwise v0..v_{f-1}.
inline std::vector<Vertex> brute_sigma(const DirectedGraph& g, const std::vector<bool>& zero,
                                       Vertex i, bool literal) {
  std::vector<Vertex> out;
  for (Vertex j = 0; j < g.vertex_count(); ++j) {
    bool ok = false;
    enumerate_simple_paths(g, j, i, [&](const std::vector<Vertex>& p) {
      const std::size_t constrained = literal ? p.size() - 2 : p.size() - 1;
      bool fine = true;
      for (std::size_t k = 0; k < constrained; ++k) fine = fine && zero[p[k]];
      ok = ok || fine;
    });
    if (ok) out.push_back(j);
  }
  return out;
}

}  // namespace swarmstab::testing
