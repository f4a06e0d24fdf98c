#include "nsdd/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <ostream>
#include <set>

namespace nsdd::mesh {

namespace {

constexpr double kSnapTol = 1e-9;

bool is_multiple(double value, double h) {
    const double q = value / h;
    return std::abs(q - std::round(q)) <= kSnapTol * std::max(1.0, std::abs(q));
}

bool point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (std::abs(cross) > kSnapTol) return false;
    const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    return dot >= -kSnapTol && dot <= len2 + kSnapTol;
}

// Ray casting; p must not lie on the boundary (cell centers never do).
bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
    bool inside = false;
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

std::uint64_t fnv1a(const void* data, size_t len, std::uint64_t h) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename T>
std::uint64_t fnv1a_value(const T& v, std::uint64_t h) {
    return fnv1a(&v, sizeof(T), h);
}

Mesh generate_structured(const Geometry& geo, double h, bool tag_interface) {
    for (const Vec2& v : geo.vertices) {
        if (!is_multiple(v.x, h) || !is_multiple(v.y, h))
            throw MeshError("mesh size h=" + std::to_string(h) +
                            " does not divide the geometry segment lengths");
    }
    if (tag_interface && !is_multiple(geo.x_interface, h))
        throw MeshError("interface abscissa " + std::to_string(geo.x_interface) +
                        " is not on a grid line of h=" + std::to_string(h));

    double xmin = geo.vertices[0].x, xmax = xmin, ymin = geo.vertices[0].y, ymax = ymin;
    for (const Vec2& v : geo.vertices) {
        xmin = std::min(xmin, v.x);
        xmax = std::max(xmax, v.x);
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
    }
    const int nx = static_cast<int>(std::round((xmax - xmin) / h));
    const int ny = static_cast<int>(std::round((ymax - ymin) / h));

    auto lattice = [&](int ix, int iy) -> Vec2 { return {xmin + ix * h, ymin + iy * h}; };

    // Cells whose center is inside the polygon.
    std::vector<std::pair<int, int>> cells;
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) {
            const Vec2 c{xmin + (ix + 0.5) * h, ymin + (iy + 0.5) * h};
            if (point_in_polygon(c, geo.vertices)) cells.emplace_back(ix, iy);
        }
    if (cells.empty()) throw MeshError("structured generation produced no cells");

    // Vertex ids in (ix, iy) lexicographic order, i.e. by (x, y).
    std::set<std::pair<int, int>> used;
    for (auto [ix, iy] : cells) {
        used.insert({ix, iy});
        used.insert({ix + 1, iy});
        used.insert({ix, iy + 1});
        used.insert({ix + 1, iy + 1});
    }
    std::map<std::pair<int, int>, int> vid;
    Mesh m;
    m.h = h;
    for (const auto& key : used) {
        vid[key] = static_cast<int>(m.vertices.size());
        m.vertices.push_back(lattice(key.first, key.second));
    }

    // Two CCW triangles per cell, same diagonal everywhere.
    for (auto [ix, iy] : cells) {
        const int v00 = vid.at({ix, iy});
        const int v10 = vid.at({ix + 1, iy});
        const int v01 = vid.at({ix, iy + 1});
        const int v11 = vid.at({ix + 1, iy + 1});
        m.triangles.push_back({v00, v10, v11});
        m.triangles.push_back({v00, v11, v01});
    }

    // Count edge multiplicity to find the boundary.
    std::map<EdgeKey, int> edge_count;
    for (const auto& t : m.triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_count[{a, b}];
        }

    const size_t npoly = geo.vertices.size();
    for (const auto& [key, count] : edge_count) {
        const Vec2 pa = m.vertices[key.first];
        const Vec2 pb = m.vertices[key.second];
        if (count == 1) {
            bool tagged = false;
            for (size_t s = 0; s < npoly; ++s) {
                const Vec2 q0 = geo.vertices[s];
                const Vec2 q1 = geo.vertices[(s + 1) % npoly];
                if (point_on_segment(pa, q0, q1) && point_on_segment(pb, q0, q1)) {
                    m.edge_tags[key] = geo.edge_tags[s];
                    tagged = true;
                    break;
                }
            }
            if (!tagged) throw MeshError("boundary edge not on any geometry segment");
        } else if (tag_interface && std::abs(pa.x - geo.x_interface) < kSnapTol &&
                   std::abs(pb.x - geo.x_interface) < kSnapTol) {
            m.edge_tags[key] = BoundaryTag::Interface;
        }
    }
    return m;
}

}  // namespace

const char* tag_name(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::Inlet: return "inlet";
        case BoundaryTag::Wall: return "wall";
        case BoundaryTag::Outlet: return "outlet";
        case BoundaryTag::Interface: return "interface";
    }
    return "?";
}

double Geometry::area() const {
    double s = 0.0;
    const size_t n = vertices.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

Geometry bfs_geometry(double x_interface) {
    Geometry g;
    g.vertices = {{0, 2}, {4, 2}, {4, 0}, {18, 0}, {18, 5}, {0, 5}};
    g.edge_tags = {BoundaryTag::Wall,   BoundaryTag::Wall, BoundaryTag::Wall,
                   BoundaryTag::Outlet, BoundaryTag::Wall, BoundaryTag::Inlet};
    g.x_interface = x_interface;
    return g;
}

Geometry rect_geometry(double Lx, double Ly) {
    Geometry g;
    g.vertices = {{0, 0}, {Lx, 0}, {Lx, Ly}, {0, Ly}};
    g.edge_tags = {BoundaryTag::Wall, BoundaryTag::Outlet, BoundaryTag::Wall, BoundaryTag::Inlet};
    g.x_interface = 0.5 * Lx;
    return g;
}

double Mesh::area() const {
    double s = 0.0;
    for (size_t t = 0; t < triangles.size(); ++t) s += triangle_area(static_cast<int>(t));
    return s;
}

double Mesh::triangle_area(int t) const {
    const auto& tri = triangles[t];
    const Vec2 a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

BoundaryTag Mesh::tag_at(Vec2 p) const {
    double best = std::numeric_limits<double>::max();
    BoundaryTag tag = BoundaryTag::Wall;
    for (const auto& [key, t] : edge_tags) {
        const Vec2 a = vertices[key.first], b = vertices[key.second];
        const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        const double d = std::hypot(mid.x - p.x, mid.y - p.y);
        if (d < best) {
            best = d;
            tag = t;
        }
    }
    if (best > 0.51 * h) throw MeshError("no tagged edge near query point");
    return tag;
}

std::uint64_t Mesh::fingerprint() const {
    std::uint64_t h64 = 1469598103934665603ULL;
    h64 = fnv1a_value(h, h64);
    for (const Vec2& v : vertices) {
        h64 = fnv1a_value(v.x, h64);
        h64 = fnv1a_value(v.y, h64);
    }
    for (const auto& t : triangles)
        for (int v : t) h64 = fnv1a_value(v, h64);
    for (const auto& [key, tag] : edge_tags) {
        h64 = fnv1a_value(key.first, h64);
        h64 = fnv1a_value(key.second, h64);
        h64 = fnv1a_value(static_cast<int>(tag), h64);
    }
    return h64;
}

void Mesh::write_text(std::ostream& os) const {
    os << "# nsdd mesh (h=" << h << ")\n";
    os << "vertices " << vertices.size() << "\n";
    os << "# columns: id x y\n";
    for (size_t i = 0; i < vertices.size(); ++i)
        os << i << " " << vertices[i].x << " " << vertices[i].y << "\n";
    os << "triangles " << triangles.size() << "\n";
    os << "# columns: id v0 v1 v2 (counter-clockwise)\n";
    for (size_t t = 0; t < triangles.size(); ++t)
        os << t << " " << triangles[t][0] << " " << triangles[t][1] << " " << triangles[t][2]
           << "\n";
    os << "tagged_edges " << edge_tags.size() << "\n";
    os << "# columns: v0 v1 tag\n";
    for (const auto& [key, tag] : edge_tags)
        os << key.first << " " << key.second << " " << tag_name(tag) << "\n";
}

Mesh generate_bfs_mesh(double h, double x_interface) {
    if (!(x_interface > 4.0 && x_interface < 18.0))
        throw MeshError("interface abscissa must lie strictly between the step (x=4) and the "
                        "outlet (x=18)");
    return generate_structured(bfs_geometry(x_interface), h, /*tag_interface=*/true);
}

Mesh generate_rect_mesh(double Lx, double Ly, double h) {
    Geometry g = rect_geometry(Lx, Ly);
    Mesh m = generate_structured(g, h, /*tag_interface=*/false);
    return m;
}

std::vector<double> InterfaceMesh::trace_node_ys() const {
    std::vector<double> ys;
    for (int s = 0; s + 1 < static_cast<int>(vertex_ys.size()); ++s) {
        ys.push_back(vertex_ys[s]);
        ys.push_back(0.5 * (vertex_ys[s] + vertex_ys[s + 1]));
    }
    if (!vertex_ys.empty()) ys.push_back(vertex_ys.back());
    return ys;
}

Decomposition decompose(const Mesh& m, double x_interface) {
    // No triangle may straddle the line.
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        bool left = false, right = false;
        for (int v : m.triangles[t]) {
            if (m.vertices[v].x < x_interface - kSnapTol) left = true;
            if (m.vertices[v].x > x_interface + kSnapTol) right = true;
        }
        if (left && right)
            throw MeshError("interface x=" + std::to_string(x_interface) +
                            " is not a union of mesh edges");
    }

    Decomposition d;
    d.interface.x = x_interface;

    auto build_side = [&](bool first) {
        Mesh sub;
        sub.h = m.h;
        std::vector<int>& parent = first ? d.parent_vertex1 : d.parent_vertex2;
        std::map<int, int> to_sub;
        std::vector<int> tri_ids;
        for (size_t t = 0; t < m.triangles.size(); ++t) {
            const auto& tri = m.triangles[t];
            double cx = (m.vertices[tri[0]].x + m.vertices[tri[1]].x + m.vertices[tri[2]].x) / 3.0;
            if ((cx < x_interface) == first) tri_ids.push_back(static_cast<int>(t));
        }
        if (tri_ids.empty()) throw MeshError("decomposition leaves one side empty");
        // Parent vertex order is lexicographic; keep it.
        std::set<int> vset;
        for (int t : tri_ids)
            for (int v : m.triangles[t]) vset.insert(v);
        for (int v : vset) {
            to_sub[v] = static_cast<int>(sub.vertices.size());
            sub.vertices.push_back(m.vertices[v]);
            parent.push_back(v);
        }
        for (int t : tri_ids) {
            const auto& tri = m.triangles[t];
            sub.triangles.push_back({to_sub[tri[0]], to_sub[tri[1]], to_sub[tri[2]]});
        }
        // Inherit tags for edges present in this submesh; tag the cut line.
        std::set<EdgeKey> sub_edges;
        for (const auto& tri : sub.triangles)
            for (int e = 0; e < 3; ++e) {
                int a = tri[e], b = tri[(e + 1) % 3];
                if (a > b) std::swap(a, b);
                sub_edges.insert({a, b});
            }
        for (const auto& [key, tag] : m.edge_tags) {
            auto ia = to_sub.find(key.first);
            auto ib = to_sub.find(key.second);
            if (ia == to_sub.end() || ib == to_sub.end()) continue;
            EdgeKey sk{std::min(ia->second, ib->second), std::max(ia->second, ib->second)};
            if (sub_edges.count(sk)) sub.edge_tags[sk] = tag;
        }
        for (const EdgeKey& e : sub_edges) {
            const Vec2 a = sub.vertices[e.first], b = sub.vertices[e.second];
            if (std::abs(a.x - x_interface) < kSnapTol && std::abs(b.x - x_interface) < kSnapTol)
                sub.edge_tags[e] = BoundaryTag::Interface;
        }
        return sub;
    };

    d.omega1 = build_side(true);
    d.omega2 = build_side(false);

    // Interface vertex ordinates from the cut edges.
    std::set<double> ys;
    for (const auto& [key, tag] : d.omega1.edge_tags) {
        if (tag != BoundaryTag::Interface) continue;
        ys.insert(d.omega1.vertices[key.first].y);
        ys.insert(d.omega1.vertices[key.second].y);
    }
    if (ys.size() < 2) throw MeshError("interface has no edges on the cut line");
    d.interface.vertex_ys.assign(ys.begin(), ys.end());
    return d;
}

}  // namespace nsdd::mesh
