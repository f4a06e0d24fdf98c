#include "nsdd/fem.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace nsdd::fem {

namespace {

TriangleRule make_deg4() {
    // Dunavant 6-point rule, two symmetric orbits.
    const double a1 = 0.44594849091596489, w1 = 0.22338158967801147;
    const double a2 = 0.091576213509770743, w2 = 0.10995174365532187;
    TriangleRule r;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
        const double b = 1.0 - 2.0 * a;
        r.points.push_back({b, a, a});
        r.points.push_back({a, b, a});
        r.points.push_back({a, a, b});
        r.weights.insert(r.weights.end(), 3, w);
    }
    return r;
}

TriangleRule make_deg5() {
    // Dunavant 7-point rule: centroid plus two symmetric orbits.
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 + s15) / 21.0, w1 = (155.0 + s15) / 1200.0;
    const double a2 = (6.0 - s15) / 21.0, w2 = (155.0 - s15) / 1200.0;
    TriangleRule r;
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(9.0 / 40.0);
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
        const double b = 1.0 - 2.0 * a;
        r.points.push_back({b, a, a});
        r.points.push_back({a, b, a});
        r.points.push_back({a, a, b});
        r.weights.insert(r.weights.end(), 3, w);
    }
    return r;
}

/// Quadratic shape values on [0,1] at parameter s, node order (lo, hi, mid).
std::array<double, 3> line_p2_values(double s) {
    return {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
}

}  // namespace

const TriangleRule& triangle_rule_deg4() {
    static const TriangleRule r = make_deg4();
    return r;
}

const TriangleRule& triangle_rule_deg5() {
    static const TriangleRule r = make_deg5();
    return r;
}

const LineRule& line_rule_3() {
    static const LineRule r = [] {
        const double p = std::sqrt(3.0 / 5.0);
        return LineRule{{-p, 0.0, p}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }();
    return r;
}

TriangleGeometry triangle_geometry(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double twice = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if (twice <= 0.0) throw std::invalid_argument("triangle_geometry: non-positive orientation");
    TriangleGeometry g;
    g.area = 0.5 * twice;
    g.grad_lambda[0] = {(b.y - c.y) / twice, (c.x - b.x) / twice};
    g.grad_lambda[1] = {(c.y - a.y) / twice, (a.x - c.x) / twice};
    g.grad_lambda[2] = {(a.y - b.y) / twice, (b.x - a.x) / twice};
    return g;
}

std::array<double, 6> p2_values(const std::array<double, 3>& l) {
    return {l[0] * (2.0 * l[0] - 1.0), l[1] * (2.0 * l[1] - 1.0), l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[1] * l[2], 4.0 * l[2] * l[0], 4.0 * l[0] * l[1]};
}

std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& l,
                                 const std::array<Vec2, 3>& g) {
    auto lin = [](double c0, const Vec2& a, double c1, const Vec2& b) {
        return Vec2{c0 * a.x + c1 * b.x, c0 * a.y + c1 * b.y};
    };
    return {Vec2{(4.0 * l[0] - 1.0) * g[0].x, (4.0 * l[0] - 1.0) * g[0].y},
            Vec2{(4.0 * l[1] - 1.0) * g[1].x, (4.0 * l[1] - 1.0) * g[1].y},
            Vec2{(4.0 * l[2] - 1.0) * g[2].x, (4.0 * l[2] - 1.0) * g[2].y},
            lin(4.0 * l[1], g[2], 4.0 * l[2], g[1]),
            lin(4.0 * l[2], g[0], 4.0 * l[0], g[2]),
            lin(4.0 * l[0], g[1], 4.0 * l[1], g[0])};
}

namespace {

struct ScalarOps {
    std::vector<linalg::Triplet> mass;       // P2 x P2
    std::vector<linalg::Triplet> stiffness;  // unit viscosity
    std::vector<linalg::Triplet> div;        // rows P1, cols velocity dofs
};

ScalarOps assemble_scalar_ops(const Mesh& m, const DofMap& d) {
    const TriangleRule& rule = triangle_rule_deg4();
    ScalarOps out;
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        const TriangleGeometry geo =
            triangle_geometry(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
        const auto& vn = d.tri_vnodes[t];
        const auto& pn = d.tri_pnodes[t];
        double mloc[6][6] = {}, kloc[6][6] = {}, bloc[3][6][2] = {};
        for (size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q] * geo.area;
            const auto val = p2_values(rule.points[q]);
            const auto grad = p2_gradients(rule.points[q], geo.grad_lambda);
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    mloc[i][j] += w * val[i] * val[j];
                    kloc[i][j] += w * (grad[i].x * grad[j].x + grad[i].y * grad[j].y);
                }
            for (int a = 0; a < 3; ++a)
                for (int i = 0; i < 6; ++i) {
                    bloc[a][i][0] -= w * rule.points[q][a] * grad[i].x;
                    bloc[a][i][1] -= w * rule.points[q][a] * grad[i].y;
                }
        }
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int c = 0; c < 2; ++c) {
                    out.mass.emplace_back(DofMap::vdof(vn[i], c), DofMap::vdof(vn[j], c),
                                          mloc[i][j]);
                    out.stiffness.emplace_back(DofMap::vdof(vn[i], c), DofMap::vdof(vn[j], c),
                                               kloc[i][j]);
                }
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < 6; ++i)
                for (int c = 0; c < 2; ++c)
                    out.div.emplace_back(pn[a], DofMap::vdof(vn[i], c), bloc[a][i][c]);
    }
    return out;
}

}  // namespace

AssembledOperators assemble_constant_ops(const Mesh& m, const DofMap& d, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("assemble_constant_ops: viscosity must be > 0");
    ScalarOps s = assemble_scalar_ops(m, d);
    AssembledOperators ops;
    ops.nu = nu;
    ops.M = linalg::SparseMatrix::from_triplets(d.n_vel(), d.n_vel(), s.mass);
    for (auto& t : s.stiffness) t = {t.row(), t.col(), nu * t.value()};
    ops.A = linalg::SparseMatrix::from_triplets(d.n_vel(), d.n_vel(), s.stiffness);
    ops.B = linalg::SparseMatrix::from_triplets(d.n_pres(), d.n_vel(), s.div);
    assemble_interface_ops(d, ops.T_gamma, ops.M_gamma);
    return ops;
}

void assemble_interface_ops(const DofMap& d, linalg::SparseMatrix& T_gamma,
                            linalg::SparseMatrix& M_gamma) {
    const int nt = d.n_trace();
    std::vector<linalg::Triplet> tg, mg;
    const LineRule& rule = line_rule_3();
    for (const auto& seg : d.trace_segments) {
        const double len = d.trace_y[seg[1]] - d.trace_y[seg[0]];
        double loc[3][3] = {};
        for (size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q] * 0.5 * len;
            const auto val = line_p2_values(0.5 * (rule.points[q] + 1.0));
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) loc[i][j] += w * val[i] * val[j];
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int c = 0; c < 2; ++c) {
                    mg.emplace_back(2 * seg[i] + c, 2 * seg[j] + c, loc[i][j]);
                    tg.emplace_back(DofMap::vdof(d.trace_vnodes[seg[i]], c), 2 * seg[j] + c,
                                    loc[i][j]);
                }
    }
    M_gamma = linalg::SparseMatrix::from_triplets(nt, nt, mg);
    T_gamma = linalg::SparseMatrix::from_triplets(
        nt == 0 ? 0 : static_cast<int>(2 * d.velocity_nodes.size()), nt, tg);
}

linalg::SparseMatrix velocity_h1_matrix(const Mesh& m, const DofMap& d) {
    ScalarOps s = assemble_scalar_ops(m, d);
    std::vector<linalg::Triplet> all = s.mass;
    all.insert(all.end(), s.stiffness.begin(), s.stiffness.end());
    return linalg::SparseMatrix::from_triplets(d.n_vel(), d.n_vel(), all);
}

linalg::SparseMatrix pressure_mass_matrix(const Mesh& m, const DofMap& d) {
    const TriangleRule& rule = triangle_rule_deg4();
    std::vector<linalg::Triplet> trips;
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        const TriangleGeometry geo =
            triangle_geometry(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
        const auto& pn = d.tri_pnodes[t];
        for (size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q] * geo.area;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    trips.emplace_back(pn[a], pn[b], w * rule.points[q][a] * rule.points[q][b]);
        }
    }
    return linalg::SparseMatrix::from_triplets(d.n_pres(), d.n_pres(), trips);
}

ConvectionAssembler::ConvectionAssembler(const Mesh& m, const DofMap& d)
    : n_vel_(d.n_vel()), nodes_(d.tri_vnodes) {
    const TriangleRule& rule = triangle_rule_deg5();
    const size_t nq = rule.points.size();
    values_.resize(nq);
    for (size_t q = 0; q < nq; ++q) values_[q] = p2_values(rule.points[q]);
    scaled_weights_.resize(m.triangles.size() * nq);
    gradients_.resize(m.triangles.size() * nq);
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        const TriangleGeometry geo =
            triangle_geometry(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
        for (size_t q = 0; q < nq; ++q) {
            scaled_weights_[t * nq + q] = rule.weights[q] * geo.area;
            gradients_[t * nq + q] = p2_gradients(rule.points[q], geo.grad_lambda);
        }
    }
}

ConvectionMatrices ConvectionAssembler::assemble(const linalg::Vector& w) const {
    const size_t nq = values_.size();
    std::vector<linalg::Triplet> c_trips, jc_trips;
    c_trips.reserve(nodes_.size() * nq * 72);
    jc_trips.reserve(nodes_.size() * nq * 216);
    for (size_t t = 0; t < nodes_.size(); ++t) {
        const auto& vn = nodes_[t];
        for (size_t q = 0; q < nq; ++q) {
            const double sw = scaled_weights_[t * nq + q];
            const auto& val = values_[q];
            const auto& grad = gradients_[t * nq + q];
            double wx = 0.0, wy = 0.0, gw[2][2] = {};
            for (int i = 0; i < 6; ++i) {
                const double ux = w[DofMap::vdof(vn[i], 0)], uy = w[DofMap::vdof(vn[i], 1)];
                wx += ux * val[i];
                wy += uy * val[i];
                gw[0][0] += ux * grad[i].x;
                gw[0][1] += ux * grad[i].y;
                gw[1][0] += uy * grad[i].x;
                gw[1][1] += uy * grad[i].y;
            }
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    const double conv = sw * val[i] * (wx * grad[j].x + wy * grad[j].y);
                    const double mass = sw * val[i] * val[j];
                    for (int c = 0; c < 2; ++c) {
                        const int row = DofMap::vdof(vn[i], c);
                        c_trips.emplace_back(row, DofMap::vdof(vn[j], c), conv);
                        jc_trips.emplace_back(row, DofMap::vdof(vn[j], c), conv);
                        for (int dcomp = 0; dcomp < 2; ++dcomp)
                            jc_trips.emplace_back(row, DofMap::vdof(vn[j], dcomp),
                                                  mass * gw[c][dcomp]);
                    }
                }
            }
        }
    }
    ConvectionMatrices out;
    out.C = linalg::SparseMatrix::from_triplets(n_vel_, n_vel_, c_trips);
    out.Jc = linalg::SparseMatrix::from_triplets(n_vel_, n_vel_, jc_trips);
    return out;
}

linalg::Vector ConvectionAssembler::apply(const linalg::Vector& w) const {
    const size_t nq = values_.size();
    linalg::Vector r = linalg::Vector::Zero(n_vel_);
    for (size_t t = 0; t < nodes_.size(); ++t) {
        const auto& vn = nodes_[t];
        for (size_t q = 0; q < nq; ++q) {
            const double sw = scaled_weights_[t * nq + q];
            const auto& val = values_[q];
            const auto& grad = gradients_[t * nq + q];
            double wx = 0.0, wy = 0.0, gw[2][2] = {};
            for (int i = 0; i < 6; ++i) {
                const double ux = w[DofMap::vdof(vn[i], 0)], uy = w[DofMap::vdof(vn[i], 1)];
                wx += ux * val[i];
                wy += uy * val[i];
                gw[0][0] += ux * grad[i].x;
                gw[0][1] += ux * grad[i].y;
                gw[1][0] += uy * grad[i].x;
                gw[1][1] += uy * grad[i].y;
            }
            const double cx = wx * gw[0][0] + wy * gw[0][1];
            const double cy = wx * gw[1][0] + wy * gw[1][1];
            for (int i = 0; i < 6; ++i) {
                r[DofMap::vdof(vn[i], 0)] += sw * val[i] * cx;
                r[DofMap::vdof(vn[i], 1)] += sw * val[i] * cy;
            }
        }
    }
    return r;
}

void DirichletData::impose(linalg::Vector& state) const {
    for (size_t k = 0; k < dofs.size(); ++k) state[dofs[k]] = values[static_cast<int>(k)];
}

void DirichletData::clear_rows(linalg::Vector& r) const {
    for (int dof : dofs) r[dof] = 0.0;
}

std::vector<char> DirichletData::mask(int n) const {
    std::vector<char> m(n, 0);
    for (int dof : dofs) m[dof] = 1;
    return m;
}

namespace {

DirichletData from_map(const std::map<int, double>& vals) {
    DirichletData d;
    d.dofs.reserve(vals.size());
    d.values.resize(static_cast<int>(vals.size()));
    int k = 0;
    for (const auto& [dof, v] : vals) {
        d.dofs.push_back(dof);
        d.values[k++] = v;
    }
    return d;
}

template <typename Profile>
DirichletData profile_dirichlet(const DofMap& d, Profile&& inlet_ux) {
    std::map<int, double> vals;
    if (auto it = d.tagged_vnodes.find(mesh::BoundaryTag::Inlet); it != d.tagged_vnodes.end()) {
        for (int node : it->second) {
            vals[DofMap::vdof(node, 0)] = inlet_ux(d.velocity_nodes[node].y);
            vals[DofMap::vdof(node, 1)] = 0.0;
        }
    }
    if (auto it = d.tagged_vnodes.find(mesh::BoundaryTag::Wall); it != d.tagged_vnodes.end()) {
        for (int node : it->second) {
            vals[DofMap::vdof(node, 0)] = 0.0;
            vals[DofMap::vdof(node, 1)] = 0.0;
        }
    }
    return from_map(vals);
}

}  // namespace

DirichletData bfs_dirichlet(const DofMap& d, double Ubar) {
    return profile_dirichlet(
        d, [Ubar](double y) { return Ubar * (4.0 / 9.0) * (y - 2.0) * (5.0 - y); });
}

DirichletData rect_dirichlet(const DofMap& d, double Ly, double U) {
    return profile_dirichlet(d, [Ly, U](double y) { return 4.0 * U * y * (Ly - y) / (Ly * Ly); });
}

DirichletData zero_dirichlet(const DofMap& d) {
    std::map<int, double> vals;
    for (int node : d.dirichlet_vnodes()) {
        vals[DofMap::vdof(node, 0)] = 0.0;
        vals[DofMap::vdof(node, 1)] = 0.0;
    }
    return from_map(vals);
}

void append_eliminated(std::vector<linalg::Triplet>& dst, const linalg::SparseMatrix& src,
                       const std::vector<char>& row_constrained,
                       const std::vector<char>& col_constrained, int row_offset, int col_offset,
                       bool transpose, double scale) {
    const int* offs = src.row_offsets();
    const int* cols = src.col_indices();
    const double* vals = src.values();
    for (int r = 0; r < src.rows(); ++r) {
        for (int k = offs[r]; k < offs[r + 1]; ++k) {
            const int R = transpose ? cols[k] : r;
            const int C = transpose ? r : cols[k];
            if (!row_constrained.empty() && row_constrained[R]) continue;
            if (!col_constrained.empty() && col_constrained[C]) continue;
            dst.emplace_back(R + row_offset, C + col_offset, scale * vals[k]);
        }
    }
}

}  // namespace nsdd::fem
