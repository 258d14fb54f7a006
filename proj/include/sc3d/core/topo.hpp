#ifndef SC3D_CORE_TOPO_HPP
#define SC3D_CORE_TOPO_HPP

#include "sc3d/core/types.hpp"

#include <algorithm>
#include <queue>
#include <functional>
#include <vector>

namespace sc3d {

// Plain adjacency-list digraph. Used for the unrolled graph and as the
// common input of the topological sort.
struct Digraph {
    std::vector<std::vector<int>> successors;

    explicit Digraph(int n = 0) : successors(static_cast<std::size_t>(n)) {}

    int size() const { return static_cast<int>(successors.size()); }
    void add_edge(int from, int to) { successors[static_cast<std::size_t>(from)].push_back(to); }

    std::size_t edge_count() const {
        std::size_t m = 0;
        for (const auto& s : successors) m += s.size();
        return m;
    }

    // Nonzero entry [j, i] is the edge i -> j.
    template <class Derived>
    static Digraph from_adjacency(const Eigen::MatrixBase<Derived>& adj) {
        if (adj.rows() != adj.cols()) throw ShapeError("adjacency matrix must be square");
        Digraph g(static_cast<int>(adj.rows()));
        for (int i = 0; i < adj.cols(); ++i)
            for (int j = 0; j < adj.rows(); ++j)
                if (adj(j, i) != 0) g.add_edge(i, j);
        return g;
    }
};

struct TopoResult {
    std::vector<int> order;  // filled when acyclic
    std::vector<int> cycle;  // witness in edge direction, smallest node first

    bool acyclic() const { return cycle.empty(); }
};

// Kahn's algorithm, always releasing the smallest ready node so the order is
// unique for a given graph. On failure, a directed cycle is recovered by
// walking predecessors inside the residual (non-released) subgraph.
inline TopoResult topological_sort(const Digraph& g) {
    const int n = g.size();
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    for (const auto& succ : g.successors)
        for (int v : succ) ++indeg[static_cast<std::size_t>(v)];

    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < n; ++v)
        if (indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);

    TopoResult res;
    res.order.reserve(static_cast<std::size_t>(n));
    while (!ready.empty()) {
        const int u = ready.top();
        ready.pop();
        res.order.push_back(u);
        for (int v : g.successors[static_cast<std::size_t>(u)])
            if (--indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);
    }
    if (static_cast<int>(res.order.size()) == n) return res;

    // Every residual node keeps at least one residual predecessor.
    std::vector<int> pred(static_cast<std::size_t>(n), -1);
    for (int u = 0; u < n; ++u) {
        if (indeg[static_cast<std::size_t>(u)] == 0) continue;
        for (int v : g.successors[static_cast<std::size_t>(u)])
            if (indeg[static_cast<std::size_t>(v)] > 0 && pred[static_cast<std::size_t>(v)] < 0)
                pred[static_cast<std::size_t>(v)] = u;
    }
    int start = 0;
    while (indeg[static_cast<std::size_t>(start)] == 0) ++start;

    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    std::vector<int> walk;
    int v = start;
    while (pos[static_cast<std::size_t>(v)] < 0) {
        pos[static_cast<std::size_t>(v)] = static_cast<int>(walk.size());
        walk.push_back(v);
        v = pred[static_cast<std::size_t>(v)];
    }
    // walk[pos[v]..] is a cycle traversed against edge direction.
    std::vector<int> cyc(walk.begin() + pos[static_cast<std::size_t>(v)], walk.end());
    std::reverse(cyc.begin(), cyc.end());
    std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
    res.order.clear();
    res.cycle = std::move(cyc);
    return res;
}

template <class Derived>
TopoResult topological_sort(const Eigen::MatrixBase<Derived>& adjacency) {
    return topological_sort(Digraph::from_adjacency(adjacency));
}

template <class Derived>
bool is_acyclic(const Eigen::MatrixBase<Derived>& adjacency) {
    return topological_sort(adjacency).acyclic();
}

}  // namespace sc3d

#endif  // SC3D_CORE_TOPO_HPP
