#include "nsdd/dofmap.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace nsdd::mesh {

namespace {

struct NodeLess {
    bool operator()(const Vec2& a, const Vec2& b) const {
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    }
};

}  // namespace

bool DofMap::node_has_tag(int node, BoundaryTag t) const {
    auto it = tagged_vnodes.find(t);
    if (it == tagged_vnodes.end()) return false;
    return std::binary_search(it->second.begin(), it->second.end(), node);
}

std::vector<int> DofMap::dirichlet_vnodes() const {
    std::set<int> nodes;
    for (BoundaryTag t : {BoundaryTag::Inlet, BoundaryTag::Wall}) {
        auto it = tagged_vnodes.find(t);
        if (it == tagged_vnodes.end()) continue;
        nodes.insert(it->second.begin(), it->second.end());
    }
    return {nodes.begin(), nodes.end()};
}

DofMap build_dofmap(const Mesh& m) {
    DofMap d;

    // Unique edges with their midpoints.
    std::map<EdgeKey, int> edge_id;  // edge -> index into midpoint list
    std::vector<Vec2> midpoints;
    std::vector<std::array<int, 3>> tri_edges(m.triangles.size());
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        // local edge e is opposite vertex e: (1,2), (2,0), (0,1)
        static constexpr int ea[3] = {1, 2, 0};
        static constexpr int eb[3] = {2, 0, 1};
        for (int e = 0; e < 3; ++e) {
            int a = tri[ea[e]], b = tri[eb[e]];
            EdgeKey key{std::min(a, b), std::max(a, b)};
            auto it = edge_id.find(key);
            if (it == edge_id.end()) {
                it = edge_id.emplace(key, static_cast<int>(midpoints.size())).first;
                const Vec2 pa = m.vertices[key.first], pb = m.vertices[key.second];
                midpoints.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
            }
            tri_edges[t][e] = it->second;
        }
    }

    // Velocity nodes: vertices then midpoints, renumbered lexicographically.
    const int nv = static_cast<int>(m.vertices.size());
    const int ne = static_cast<int>(midpoints.size());
    std::vector<Vec2> all(nv + ne);
    std::copy(m.vertices.begin(), m.vertices.end(), all.begin());
    std::copy(midpoints.begin(), midpoints.end(), all.begin() + nv);
    std::vector<int> perm(all.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    std::sort(perm.begin(), perm.end(),
              [&](int a, int b) { return NodeLess{}(all[a], all[b]); });
    std::vector<int> vnode_of(all.size());  // raw index -> sorted node id
    d.velocity_nodes.resize(all.size());
    for (size_t r = 0; r < perm.size(); ++r) {
        vnode_of[perm[r]] = static_cast<int>(r);
        d.velocity_nodes[r] = all[perm[r]];
    }

    // Pressure nodes: vertices, lexicographic.
    std::vector<int> pperm(nv);
    for (int i = 0; i < nv; ++i) pperm[i] = i;
    std::sort(pperm.begin(), pperm.end(),
              [&](int a, int b) { return NodeLess{}(m.vertices[a], m.vertices[b]); });
    std::vector<int> pnode_of(nv);
    d.pressure_nodes.resize(nv);
    for (int r = 0; r < nv; ++r) {
        pnode_of[pperm[r]] = r;
        d.pressure_nodes[r] = m.vertices[pperm[r]];
    }

    d.tri_vnodes.resize(m.triangles.size());
    d.tri_pnodes.resize(m.triangles.size());
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        for (int v = 0; v < 3; ++v) {
            d.tri_vnodes[t][v] = vnode_of[tri[v]];
            d.tri_pnodes[t][v] = pnode_of[tri[v]];
        }
        for (int e = 0; e < 3; ++e) d.tri_vnodes[t][3 + e] = vnode_of[nv + tri_edges[t][e]];
    }

    // Tagged nodes: endpoints and midpoint of every tagged edge.
    std::map<BoundaryTag, std::set<int>> tagged;
    for (const auto& [key, tag] : m.edge_tags) {
        tagged[tag].insert(vnode_of[key.first]);
        tagged[tag].insert(vnode_of[key.second]);
        tagged[tag].insert(vnode_of[nv + edge_id.at(key)]);
    }
    for (auto& [tag, nodes] : tagged) d.tagged_vnodes[tag] = {nodes.begin(), nodes.end()};

    // Interface trace numbering, ascending y.
    auto it = d.tagged_vnodes.find(BoundaryTag::Interface);
    if (it != d.tagged_vnodes.end()) {
        std::vector<int> nodes = it->second;
        std::sort(nodes.begin(), nodes.end(), [&](int a, int b) {
            return d.velocity_nodes[a].y < d.velocity_nodes[b].y;
        });
        d.trace_vnodes = nodes;
        std::map<int, int> trace_of;  // velocity node -> trace node
        for (size_t k = 0; k < nodes.size(); ++k) {
            d.trace_y.push_back(d.velocity_nodes[nodes[k]].y);
            trace_of[nodes[k]] = static_cast<int>(k);
        }
        for (const auto& [key, tag] : m.edge_tags) {
            if (tag != BoundaryTag::Interface) continue;
            int a = vnode_of[key.first], b = vnode_of[key.second];
            int mid = vnode_of[nv + edge_id.at(key)];
            int ta = trace_of.at(a), tb = trace_of.at(b);
            if (d.trace_y[ta] > d.trace_y[tb]) std::swap(ta, tb);
            d.trace_segments.push_back({ta, tb, trace_of.at(mid)});
        }
        std::sort(d.trace_segments.begin(), d.trace_segments.end(),
                  [](const auto& s1, const auto& s2) { return s1[0] < s2[0]; });
    }

    return d;
}

}  // namespace nsdd::mesh
