#ifndef SC3D_ACYCLIC_EXTRACT_HPP
#define SC3D_ACYCLIC_EXTRACT_HPP

#include "sc3d/core/topo.hpp"
#include "sc3d/core/types.hpp"

#include <algorithm>
#include <optional>
#include <tuple>
#include <vector>

namespace sc3d {

namespace detail {

// True if `to` is reachable from `from` following edges i -> j stored as
// out[i] lists.
inline bool reachable(const std::vector<std::vector<int>>& out, int from, int to, std::vector<char>& seen) {
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (u == to) return true;
        for (int v : out[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
        }
    }
    return false;
}

}  // namespace detail

/// Greedy maximum-weight acyclic subgraph: candidate edges (nonzero entries)
/// are visited by |B[j,i]| descending, ties by (j, i) ascending, and an edge
/// i -> j is admitted unless j already reaches i. Stops after `max_edges`
/// admissions when given.
inline BinaryMatrix extract_dag(const Matrix& B, std::optional<int> max_edges = std::nullopt) {
    if (B.rows() != B.cols()) throw ShapeError("extract_dag: B must be square");
    const int d = static_cast<int>(B.rows());
    std::vector<std::tuple<double, int, int>> edges;  // (|w|, j, i)
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i)
            if (i != j && B(j, i) != 0.0) edges.emplace_back(std::abs(B(j, i)), j, i);
    std::stable_sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });

    BinaryMatrix out = BinaryMatrix::Zero(d, d);
    std::vector<std::vector<int>> succ(static_cast<std::size_t>(d));
    std::vector<char> seen(static_cast<std::size_t>(d));
    int admitted = 0;
    for (const auto& [w, j, i] : edges) {
        if (max_edges && admitted >= *max_edges) break;
        if (detail::reachable(succ, j, i, seen)) continue;
        succ[static_cast<std::size_t>(i)].push_back(j);
        out(j, i) = 1;
        ++admitted;
    }
    return out;
}

}  // namespace sc3d

#endif  // SC3D_ACYCLIC_EXTRACT_HPP
