#pragma once

#include "nsdd/mesh.hpp"

#include <array>
#include <map>
#include <vector>

namespace nsdd::mesh {

/// Taylor-Hood P2-P1 degree-of-freedom numbering over one mesh.
///
/// Velocity nodes are the mesh vertices plus all edge midpoints, numbered
/// lexicographically by (x, y); each node carries two components, dof =
/// 2*node + component. Pressure nodes are the vertices in the same ordering.
/// Interface trace nodes (when the mesh has Interface-tagged edges) are the
/// velocity nodes on the interface sorted by ascending y, two components per
/// node, giving the shared X_h numbering of both subdomains.
struct DofMap {
    std::vector<Vec2> velocity_nodes;
    std::vector<Vec2> pressure_nodes;

    /// Per triangle: local velocity nodes (v0 v1 v2, mid12 mid20 mid01).
    std::vector<std::array<int, 6>> tri_vnodes;
    /// Per triangle: local pressure nodes (v0 v1 v2).
    std::vector<std::array<int, 3>> tri_pnodes;

    std::map<BoundaryTag, std::vector<int>> tagged_vnodes;  // sorted node ids

    std::vector<int> trace_vnodes;                  // trace node -> velocity node
    std::vector<double> trace_y;                    // ascending
    std::vector<std::array<int, 3>> trace_segments; // (lo, hi, mid) trace node ids

    int n_vnodes() const { return static_cast<int>(velocity_nodes.size()); }
    int n_vel() const { return 2 * n_vnodes(); }
    int n_pres() const { return static_cast<int>(pressure_nodes.size()); }
    int n_state() const { return n_vel() + n_pres(); }
    int n_trace_nodes() const { return static_cast<int>(trace_vnodes.size()); }
    int n_trace() const { return 2 * n_trace_nodes(); }

    static int vdof(int node, int comp) { return 2 * node + comp; }

    bool node_has_tag(int node, BoundaryTag t) const;
    /// Velocity dofs on inlet/wall boundaries (the Dirichlet set of the flow
    /// problems); disjoint from interior dofs by construction.
    std::vector<int> dirichlet_vnodes() const;
};

DofMap build_dofmap(const Mesh& m);

}  // namespace nsdd::mesh
