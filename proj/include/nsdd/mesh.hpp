#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdd::mesh {

struct MeshError : std::runtime_error {
    explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class BoundaryTag { Inlet, Wall, Outlet, Interface };

const char* tag_name(BoundaryTag t);

/// Closed, simple, counter-clockwise polygon with one tag per boundary edge
/// segment, plus the abscissa of the decomposition interface. Units are cm.
struct Geometry {
    std::vector<Vec2> vertices;            // CCW
    std::vector<BoundaryTag> edge_tags;    // edge i runs vertices[i] -> vertices[i+1 mod n]
    double x_interface = 0.0;

    double area() const;  // shoelace, positive for CCW
};

/// Backward-facing step channel: duct y in [2,5] for x in [0,4], step down to
/// y=0 at x=4, full height to x=18. Inlet at x=0, outlet at x=18, walls
/// elsewhere.
Geometry bfs_geometry(double x_interface = 9.0);

/// Rectangle [0,Lx]x[0,Ly]: inlet x=0, outlet x=Lx, walls y=0 and y=Ly.
Geometry rect_geometry(double Lx, double Ly);

using EdgeKey = std::pair<int, int>;  // sorted vertex ids

/// Structured conforming triangulation: squares of side h split along the
/// same diagonal everywhere, triangles counter-clockwise.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::map<EdgeKey, BoundaryTag> edge_tags;  // boundary edges + interface edges
    double h = 0.0;

    double area() const;
    double triangle_area(int t) const;
    /// Tag of the edge whose midpoint is nearest to p; throws when no tagged
    /// edge lies within h/4 of p.
    BoundaryTag tag_at(Vec2 p) const;
    /// Content hash of vertices, connectivity and tags (stable across runs).
    std::uint64_t fingerprint() const;
    /// Plain-text export: node list, element list, tagged-edge list.
    void write_text(std::ostream& os) const;
};

Mesh generate_bfs_mesh(double h, double x_interface = 9.0);
Mesh generate_rect_mesh(double Lx, double Ly, double h);

/// 1D trace discretisation of the interface line x = x_interface. Vertices
/// sorted by ascending y; P2 trace nodes are vertices plus segment midpoints.
struct InterfaceMesh {
    double x = 0.0;
    std::vector<double> vertex_ys;  // ascending

    int n_segments() const { return static_cast<int>(vertex_ys.size()) - 1; }
    /// All P2 node ordinates in ascending order (2*n_segments + 1 of them).
    std::vector<double> trace_node_ys() const;
    double length() const { return vertex_ys.empty() ? 0.0 : vertex_ys.back() - vertex_ys.front(); }
};

struct Decomposition {
    Mesh omega1;  // triangles with centroid x < x_interface
    Mesh omega2;
    InterfaceMesh interface;
    std::vector<int> parent_vertex1;  // submesh vertex id -> parent vertex id
    std::vector<int> parent_vertex2;
};

/// Splits a mesh along x = x_interface; the line must be a union of mesh
/// edges. Submeshes inherit Dirichlet tags (inlet + walls) and the outlet;
/// the cut edges are tagged Interface on both sides.
Decomposition decompose(const Mesh& m, double x_interface);

}  // namespace nsdd::mesh
