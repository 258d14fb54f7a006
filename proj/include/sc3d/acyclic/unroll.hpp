#ifndef SC3D_ACYCLIC_UNROLL_HPP
#define SC3D_ACYCLIC_UNROLL_HPP

#include "sc3d/core/topo.hpp"
#include "sc3d/core/types.hpp"

namespace sc3d {

// Vertex (t, j) with t in 1..T_window is numbered (t - 1) * d + j.
struct UnrolledGraph {
    int dim = 0;
    int window = 0;
    Digraph graph;

    int vertex(int t, int j) const { return (t - 1) * dim + j; }
};

// Time-unrolled graph over slices 1..T_window: lagged edges
// (t - l, i) -> (t, j) whenever A_l[j,i] != 0 and t - l >= 1, plus
// instantaneous edges (t, i) -> (t, j) whenever B[j,i] != 0, i != j.
inline UnrolledGraph unroll_graph(const DynamicGraph& g, int window) {
    if (window < 1) throw Error("unroll_graph: window must be >= 1");
    const int d = g.dim;
    UnrolledGraph u{d, window, Digraph(d * window)};
    for (int t = 1; t <= window; ++t) {
        for (int l = 1; l <= g.lag_order && t - l >= 1; ++l) {
            const Matrix& a = g.lag(l);
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < d; ++i)
                    if (a(j, i) != 0.0) u.graph.add_edge(u.vertex(t - l, i), u.vertex(t, j));
        }
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i)
                if (i != j && g.instant_matrix(j, i) != 0.0) u.graph.add_edge(u.vertex(t, i), u.vertex(t, j));
    }
    return u;
}

}  // namespace sc3d

#endif  // SC3D_ACYCLIC_UNROLL_HPP
