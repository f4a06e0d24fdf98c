#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdd/fem.hpp"
#include "nsdd/mesh.hpp"
#include "oracles.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace nsdd;
using linalg::DenseMatrix;
using linalg::SparseMatrix;
using linalg::Vector;
using mesh::Vec2;

namespace {

struct Discretisation {
    mesh::Mesh m;
    mesh::DofMap d;
};

Discretisation make_square(double h) {
    mesh::Mesh m = mesh::generate_rect_mesh(1.0, 1.0, h);
    mesh::DofMap d = mesh::build_dofmap(m);
    return {std::move(m), std::move(d)};
}

/// Nodal interpolant of a velocity field onto the P2 dofs.
Vector interpolate_velocity(const mesh::DofMap& d,
                            const std::function<std::array<double, 2>(Vec2)>& f) {
    Vector u = Vector::Zero(d.n_vel());
    for (int n = 0; n < d.n_vnodes(); ++n) {
        const auto v = f(d.velocity_nodes[n]);
        u[mesh::DofMap::vdof(n, 0)] = v[0];
        u[mesh::DofMap::vdof(n, 1)] = v[1];
    }
    return u;
}

Vector interpolate_pressure(const mesh::DofMap& d, const std::function<double(Vec2)>& f) {
    Vector p = Vector::Zero(d.n_pres());
    for (int n = 0; n < d.n_pres(); ++n) p[n] = f(d.pressure_nodes[n]);
    return p;
}

/// Assembles the same bilinear forms as the library but through the
/// independent degree-8 quadrature of the oracle header, as dense matrices.
struct OracleForms {
    DenseMatrix M, A, B;
};

OracleForms oracle_forms(const Discretisation& dis, double nu) {
    const mesh::DofMap& d = dis.d;
    OracleForms out;
    out.M = DenseMatrix::Zero(d.n_vel(), d.n_vel());
    out.A = DenseMatrix::Zero(d.n_vel(), d.n_vel());
    out.B = DenseMatrix::Zero(d.n_pres(), d.n_vel());
    const auto& rule = oracles::deg8_rule();
    for (size_t t = 0; t < dis.m.triangles.size(); ++t) {
        const auto& vn = d.tri_vnodes[t];
        const auto& pn = d.tri_pnodes[t];
        const Vec2 a = d.velocity_nodes[vn[0]];
        const Vec2 b = d.velocity_nodes[vn[1]];
        const Vec2 c = d.velocity_nodes[vn[2]];
        const oracles::TriangleFrame fr = oracles::triangle_frame(a, b, c);
        for (const auto& qp : rule) {
            const double w = qp.w * fr.area;
            const auto phi = oracles::p2_shapes(qp.l0, qp.l1, qp.l2);
            const auto grad = oracles::p2_gradients(fr, qp.l0, qp.l1, qp.l2);
            const auto psi = oracles::p1_shapes(qp.l0, qp.l1, qp.l2);
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    const double mij = w * phi[i] * phi[j];
                    const double aij =
                        w * nu * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                    for (int comp = 0; comp < 2; ++comp) {
                        out.M(mesh::DofMap::vdof(vn[i], comp), mesh::DofMap::vdof(vn[j], comp)) +=
                            mij;
                        out.A(mesh::DofMap::vdof(vn[i], comp), mesh::DofMap::vdof(vn[j], comp)) +=
                            aij;
                    }
                }
            // b(v, q) = -(div v, q): row q, column v-dof.
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < 6; ++j)
                    for (int comp = 0; comp < 2; ++comp)
                        out.B(pn[k], mesh::DofMap::vdof(vn[j], comp)) -=
                            w * psi[k] * grad[j][comp];
        }
    }
    return out;
}

double sparse_vs_dense(const SparseMatrix& S, const DenseMatrix& D) {
    DenseMatrix diff = DenseMatrix(S.eigen()) - D;
    return diff.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("triangle geometry matches the analytic frame") {
    const auto g = fem::triangle_geometry({0.0, 0.0}, {2.0, 0.0}, {0.0, 1.0});
    CHECK(g.area == doctest::Approx(1.0));
    // grad lambda_0 = (-1/2, -1), grad lambda_1 = (1/2, 0), grad lambda_2 = (0, 1).
    CHECK(g.grad_lambda[0].x == doctest::Approx(-0.5));
    CHECK(g.grad_lambda[0].y == doctest::Approx(-1.0));
    CHECK(g.grad_lambda[1].x == doctest::Approx(0.5));
    CHECK(g.grad_lambda[1].y == doctest::Approx(0.0));
    CHECK(g.grad_lambda[2].x == doctest::Approx(0.0));
    CHECK(g.grad_lambda[2].y == doctest::Approx(1.0));
    // Oracle frame agrees.
    const auto fr = oracles::triangle_frame({0.0, 0.0}, {2.0, 0.0}, {0.0, 1.0});
    CHECK(fr.area == doctest::Approx(g.area));
    for (int i = 0; i < 3; ++i) {
        CHECK(fr.grad_l[i][0] == doctest::Approx(g.grad_lambda[i].x));
        CHECK(fr.grad_l[i][1] == doctest::Approx(g.grad_lambda[i].y));
    }
}

TEST_CASE("P2 shapes satisfy nodal duality and partition of unity") {
    // Node order (v0 v1 v2 m12 m20 m01) with barycentric node coordinates.
    const std::array<std::array<double, 3>, 6> nodes{{{1, 0, 0},
                                                      {0, 1, 0},
                                                      {0, 0, 1},
                                                      {0, 0.5, 0.5},
                                                      {0.5, 0, 0.5},
                                                      {0.5, 0.5, 0}}};
    for (int n = 0; n < 6; ++n) {
        const auto v = fem::p2_values(nodes[n]);
        for (int i = 0; i < 6; ++i) CHECK(v[i] == doctest::Approx(i == n ? 1.0 : 0.0));
    }
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> bar(0.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        double l0 = bar(rng), l1 = bar(rng) * (1.0 - l0);
        const std::array<double, 3> l{l0, l1, 1.0 - l0 - l1};
        const auto v = fem::p2_values(l);
        double s = 0.0;
        for (double x : v) s += x;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
        // Matches the oracle shape set.
        const auto ov = oracles::p2_shapes(l[0], l[1], l[2]);
        for (int i = 0; i < 6; ++i) CHECK(v[i] == doctest::Approx(ov[i]).epsilon(1e-14));
        // Gradients sum to zero (derivative of the unity partition).
        const auto g = fem::triangle_geometry({0.2, 0.1}, {1.3, 0.4}, {0.5, 1.7});
        const auto grads = fem::p2_gradients(l, g.grad_lambda);
        double gx = 0.0, gy = 0.0;
        for (const auto& gr : grads) {
            gx += gr.x;
            gy += gr.y;
        }
        CHECK(std::abs(gx) <= 1e-13);
        CHECK(std::abs(gy) <= 1e-13);
    }
}

TEST_CASE("quadrature rules integrate monomials exactly") {
    // Integral over the reference triangle of l0^a l1^b l2^c is
    // a! b! c! / (a+b+c+2)! times 2*area; with weights normalised to one the
    // rule returns the mean value, i.e. 2 * that integral for area 1/2.
    const auto factorial = [](int k) {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    };
    const auto exact_mean = [&](int a, int b, int c) {
        return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
    };
    const auto check_rule = [&](const fem::TriangleRule& r, int degree) {
        double wsum = 0.0;
        for (double w : r.weights) wsum += w;
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
        for (int a = 0; a + 0 <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b) {
                const int c = degree - a - b;
                double s = 0.0;
                for (size_t q = 0; q < r.points.size(); ++q) {
                    const auto& l = r.points[q];
                    s += r.weights[q] * std::pow(l[0], a) * std::pow(l[1], b) *
                         std::pow(l[2], c);
                }
                CHECK(s == doctest::Approx(exact_mean(a, b, c)).epsilon(1e-13));
            }
    };
    check_rule(fem::triangle_rule_deg4(), 4);
    check_rule(fem::triangle_rule_deg5(), 5);

    // Line rule integrates odd/even polynomials through degree 5 on [-1, 1].
    const auto& lr = fem::line_rule_3();
    for (int p = 0; p <= 5; ++p) {
        double s = 0.0;
        for (size_t q = 0; q < lr.points.size(); ++q)
            s += lr.weights[q] * std::pow(lr.points[q], p);
        const double exact = (p % 2 == 1) ? 0.0 : 2.0 / (p + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-14));
    }
}

TEST_CASE("constant operators match an independent assembly") {
    const Discretisation dis = make_square(0.5);
    const double nu = 0.7;
    const fem::AssembledOperators ops = fem::assemble_constant_ops(dis.m, dis.d, nu);
    const OracleForms ref = oracle_forms(dis, nu);

    CHECK(ops.nu == nu);
    CHECK(sparse_vs_dense(ops.M, ref.M) <= 1e-13);
    CHECK(sparse_vs_dense(ops.A, ref.A) <= 1e-13);
    CHECK(sparse_vs_dense(ops.B, ref.B) <= 1e-13);
    CHECK(ops.B.rows() == dis.d.n_pres());
    CHECK(ops.B.cols() == dis.d.n_vel());
    // No interface on a plain rectangle.
    CHECK(ops.T_gamma.nonzeros() == 0);
    CHECK(ops.M_gamma.nonzeros() == 0);

    // Mass integrates constants: 1^T M 1 = 2 * area (two components).
    const Vector ones = Vector::Ones(dis.d.n_vel());
    CHECK(ones.dot(ops.M.apply(ones)) == doctest::Approx(2.0 * dis.m.area()).epsilon(1e-13));
    // Stiffness annihilates constants.
    CHECK(ops.A.apply(ones).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("Galerkin consistency on polynomial interpolants") {
    // For u in P2^2 and p in P1 the interpolants are exact, so the discrete
    // forms must reproduce the analytic integrals over the unit square.
    const Discretisation dis = make_square(0.25);
    const double nu = 1.3;
    const fem::AssembledOperators ops = fem::assemble_constant_ops(dis.m, dis.d, nu);

    // u = (x^2, x y), v = (y, x), p = x + 2 y.
    const Vector u = interpolate_velocity(
        dis.d, [](Vec2 q) { return std::array<double, 2>{q.x * q.x, q.x * q.y}; });
    const Vector v =
        interpolate_velocity(dis.d, [](Vec2 q) { return std::array<double, 2>{q.y, q.x}; });
    const Vector p = interpolate_pressure(dis.d, [](Vec2 q) { return q.x + 2.0 * q.y; });

    // m(u, v) = int x^2 y + x^2 y = 2 * (1/3)*(1/2) = 1/3.
    CHECK(v.dot(ops.M.apply(u)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // a(u, v) = nu int grad u : grad v = nu int (2x*0 + 0*1 + y*1 + x*0) = nu/2.
    CHECK(v.dot(ops.A.apply(u)) == doctest::Approx(nu * 0.5).epsilon(1e-12));
    // b(u, q) = -int q div u = -int (x + 2y) * 3x = -(1 + 3/2) = -5/2... with
    // div u = 2x + x = 3x: int (x + 2y) 3x dx dy = 3*(1/3) + 6*(1/2)*(1/2) = 2.5.
    CHECK(p.dot(ops.B.apply(u)) == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("convection matches the oracle quadrature and its own residual") {
    const Discretisation dis = make_square(0.5);
    const fem::ConvectionAssembler conv(dis.m, dis.d);

    std::mt19937_64 rng(17);
    const Vector w = oracles::random_unit(dis.d.n_vel(), rng);
    const Vector u = oracles::random_unit(dis.d.n_vel(), rng);
    const Vector v = oracles::random_unit(dis.d.n_vel(), rng);

    const fem::ConvectionMatrices cm = conv.assemble(w);

    // Oracle value of c(w, u, v) = int ((w . grad) u) . v by degree-8 quadrature
    // (exact for the trilinear P2 integrand).
    const auto field_at = [&](const Vector& coeff, int tri, const std::array<double, 3>& l) {
        const auto phi = oracles::p2_shapes(l[0], l[1], l[2]);
        std::array<double, 2> val{0.0, 0.0};
        for (int i = 0; i < 6; ++i)
            for (int comp = 0; comp < 2; ++comp)
                val[comp] += coeff[mesh::DofMap::vdof(dis.d.tri_vnodes[tri][i], comp)] * phi[i];
        return val;
    };
    const auto grad_at = [&](const Vector& coeff, int tri, const std::array<double, 3>& l,
                             const oracles::TriangleFrame& fr) {
        const auto g = oracles::p2_gradients(fr, l[0], l[1], l[2]);
        // grad[comp][dir]
        std::array<std::array<double, 2>, 2> val{{{0, 0}, {0, 0}}};
        for (int i = 0; i < 6; ++i)
            for (int comp = 0; comp < 2; ++comp)
                for (int dir = 0; dir < 2; ++dir)
                    val[comp][dir] +=
                        coeff[mesh::DofMap::vdof(dis.d.tri_vnodes[tri][i], comp)] * g[i][dir];
        return val;
    };
    double oracle = 0.0;
    for (size_t t = 0; t < dis.m.triangles.size(); ++t) {
        const auto& vn = dis.d.tri_vnodes[t];
        const Vec2 a = dis.d.velocity_nodes[vn[0]];
        const Vec2 b = dis.d.velocity_nodes[vn[1]];
        const Vec2 c = dis.d.velocity_nodes[vn[2]];
        const auto fr = oracles::triangle_frame(a, b, c);
        for (const auto& qp : oracles::deg8_rule()) {
            const std::array<double, 3> l{qp.l0, qp.l1, qp.l2};
            const auto wv = field_at(w, static_cast<int>(t), l);
            const auto vv = field_at(v, static_cast<int>(t), l);
            const auto gu = grad_at(u, static_cast<int>(t), l, fr);
            double dot = 0.0;
            for (int comp = 0; comp < 2; ++comp)
                dot += (wv[0] * gu[comp][0] + wv[1] * gu[comp][1]) * vv[comp];
            oracle += qp.w * fr.area * dot;
        }
    }
    CHECK(v.dot(cm.C.apply(u)) == doctest::Approx(oracle).epsilon(1e-12));

    // apply(w) = C(w) w (nonlinear residual term).
    CHECK((conv.apply(w) - cm.C.apply(w)).lpNorm<Eigen::Infinity>() <= 1e-13);

    // Jc is the Gateaux derivative: Jc(w) delta = C(delta) w + C(w) delta.
    const Vector delta = oracles::random_unit(dis.d.n_vel(), rng);
    const Vector jd = cm.Jc.apply(delta);
    const Vector ref = conv.assemble(delta).C.apply(w) + cm.C.apply(delta);
    CHECK((jd - ref).lpNorm<Eigen::Infinity>() <= 1e-12);

    // Finite-difference cross-check of the derivative of w -> c(w, w, .).
    const double eps = 1e-6;
    const Vector fd = (conv.apply(w + eps * delta) - conv.apply(w - eps * delta)) / (2.0 * eps);
    CHECK((jd - fd).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("convection is skew-symmetric on divergence-free transport fields") {
    // c(w, u, v) + c(w, v, u) = -int div w (u . v) + boundary flux. Take
    // w = curl psi for a cubic stream function: w is quadratic, hence exactly
    // P2-representable and pointwise divergence free. Zeroing u and v at every
    // boundary node makes them vanish identically along each boundary edge
    // (a 1D quadratic with three roots), killing the flux term, so the sum
    // must vanish to quadrature roundoff.
    const Discretisation dis = make_square(0.25);
    const fem::ConvectionAssembler conv(dis.m, dis.d);

    // psi = x^3 - 2 x^2 y + y^3, w = (psi_y, -psi_x) in P2^2 exactly.
    const Vector w = interpolate_velocity(dis.d, [](Vec2 q) {
        return std::array<double, 2>{-2.0 * q.x * q.x + 3.0 * q.y * q.y,
                                     -(3.0 * q.x * q.x - 4.0 * q.x * q.y)};
    });

    std::vector<char> boundary(dis.d.n_vel(), 0);
    for (auto tag : {mesh::BoundaryTag::Inlet, mesh::BoundaryTag::Wall,
                     mesh::BoundaryTag::Outlet})
        if (dis.d.tagged_vnodes.count(tag))
            for (int node : dis.d.tagged_vnodes.at(tag))
                for (int comp = 0; comp < 2; ++comp)
                    boundary[mesh::DofMap::vdof(node, comp)] = 1;

    std::mt19937_64 rng(23);
    const fem::ConvectionMatrices cm = conv.assemble(w);
    for (int t = 0; t < 3; ++t) {
        Vector u = oracles::random_unit(dis.d.n_vel(), rng);
        Vector v = oracles::random_unit(dis.d.n_vel(), rng);
        for (int i = 0; i < dis.d.n_vel(); ++i)
            if (boundary[i]) u[i] = v[i] = 0.0;
        const double s = v.dot(cm.C.apply(u)) + u.dot(cm.C.apply(v));
        CHECK(std::abs(s) <= 1e-8 * (1.0 + std::abs(v.dot(cm.C.apply(u)))));
    }
}

TEST_CASE("interface operators match the segment mass oracle") {
    const mesh::Mesh m = mesh::generate_bfs_mesh(1.0);
    const mesh::Decomposition dec = mesh::decompose(m, 9.0);
    const mesh::DofMap d1 = mesh::build_dofmap(dec.omega1);

    SparseMatrix T, Mg;
    fem::assemble_interface_ops(d1, T, Mg);
    CHECK(T.rows() == d1.n_vel());
    CHECK(T.cols() == d1.n_trace());
    CHECK(Mg.rows() == d1.n_trace());
    CHECK(Mg.cols() == d1.n_trace());

    // Dense trace mass by summing the per-segment P2 oracle blocks.
    DenseMatrix ref = DenseMatrix::Zero(d1.n_trace(), d1.n_trace());
    for (const auto& seg : d1.trace_segments) {
        const double L = d1.trace_y[seg[1]] - d1.trace_y[seg[0]];
        const auto block = oracles::segment_p2_mass(L);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int comp = 0; comp < 2; ++comp)
                    ref(2 * seg[i] + comp, 2 * seg[j] + comp) += block[i][j];
    }
    CHECK(sparse_vs_dense(Mg, ref) <= 1e-13);

    // M_gamma integrates constants to 2 * interface length.
    const Vector ones = Vector::Ones(d1.n_trace());
    CHECK(ones.dot(Mg.apply(ones)) == doctest::Approx(2.0 * 5.0).epsilon(1e-13));

    // T restricted to trace rows IS M_gamma (the trace nodes are velocity
    // dofs): <T g, v> picks out interface shape products.
    for (int tn = 0; tn < d1.n_trace_nodes(); ++tn)
        for (int comp = 0; comp < 2; ++comp) {
            const int vd = mesh::DofMap::vdof(d1.trace_vnodes[tn], comp);
            const int td = 2 * tn + comp;
            std::mt19937_64 rng(100 + tn);
            const Vector g = oracles::random_unit(d1.n_trace(), rng);
            CHECK(T.apply(g)[vd] == doctest::Approx(Mg.apply(g)[td]).epsilon(1e-13));
        }

    // Adjointness: <T g, u> = <g, tr(u)>_{M_gamma-free form}: T^T scatters
    // back to the trace exactly.
    std::mt19937_64 rng(12);
    const Vector g = oracles::random_unit(d1.n_trace(), rng);
    const Vector u = oracles::random_unit(d1.n_vel(), rng);
    const double lhs = u.dot(T.apply(g));
    // tr(u): gather trace dofs.
    Vector tru(d1.n_trace());
    for (int tn = 0; tn < d1.n_trace_nodes(); ++tn)
        for (int comp = 0; comp < 2; ++comp)
            tru[2 * tn + comp] = u[mesh::DofMap::vdof(d1.trace_vnodes[tn], comp)];
    CHECK(lhs == doctest::Approx(g.dot(Mg.apply(tru))).epsilon(1e-14));
}

TEST_CASE("H1 and pressure mass matrices define inner products") {
    const Discretisation dis = make_square(0.5);
    const SparseMatrix H = fem::velocity_h1_matrix(dis.m, dis.d);
    const SparseMatrix Q = fem::pressure_mass_matrix(dis.m, dis.d);
    const fem::AssembledOperators unit = fem::assemble_constant_ops(dis.m, dis.d, 1.0);

    // H = M + A(nu=1).
    DenseMatrix ref = DenseMatrix(unit.M.eigen()) + DenseMatrix(unit.A.eigen());
    CHECK(sparse_vs_dense(H, ref) <= 1e-13);

    // Q integrates 1 to the area and is symmetric positive definite.
    const Vector onep = Vector::Ones(dis.d.n_pres());
    CHECK(onep.dot(Q.apply(onep)) == doctest::Approx(dis.m.area()).epsilon(1e-13));
    std::mt19937_64 rng(31);
    const Vector x = oracles::random_unit(dis.d.n_pres(), rng);
    const Vector y = oracles::random_unit(dis.d.n_pres(), rng);
    CHECK(x.dot(Q.apply(y)) == doctest::Approx(y.dot(Q.apply(x))).epsilon(1e-13));
    CHECK(x.dot(Q.apply(x)) > 0.0);
}

TEST_CASE("Dirichlet data imposes the parabolic inflow") {
    const mesh::Mesh m = mesh::generate_bfs_mesh(0.5);
    const mesh::DofMap d = mesh::build_dofmap(m);
    const double Ubar = 2.0;
    const fem::DirichletData dir = fem::bfs_dirichlet(d, Ubar);

    CHECK(std::is_sorted(dir.dofs.begin(), dir.dofs.end()));
    CHECK(static_cast<int>(dir.dofs.size()) == dir.values.size());

    Vector state = Vector::Constant(d.n_state(), -7.0);
    dir.impose(state);
    for (int n = 0; n < d.n_vnodes(); ++n) {
        const Vec2 q = d.velocity_nodes[n];
        if (d.node_has_tag(n, mesh::BoundaryTag::Inlet)) {
            const double exact = Ubar * 4.0 / 9.0 * (q.y - 2.0) * (5.0 - q.y);
            CHECK(state[mesh::DofMap::vdof(n, 0)] == doctest::Approx(exact).epsilon(1e-14));
            CHECK(state[mesh::DofMap::vdof(n, 1)] == 0.0);
        } else if (d.node_has_tag(n, mesh::BoundaryTag::Wall)) {
            CHECK(state[mesh::DofMap::vdof(n, 0)] == 0.0);
            CHECK(state[mesh::DofMap::vdof(n, 1)] == 0.0);
        } else {
            CHECK(state[mesh::DofMap::vdof(n, 0)] == -7.0);
        }
    }
    // Inlet corners (2 and 5) are wall points too: the parabola vanishes
    // there so the datum is continuous.
    // clear_rows zeroes exactly the constrained entries.
    Vector r = Vector::Ones(d.n_state());
    dir.clear_rows(r);
    const auto mask = dir.mask(d.n_state());
    for (int i = 0; i < d.n_state(); ++i) CHECK(r[i] == (mask[i] ? 0.0 : 1.0));

    // Homogeneous data zeroes the same set.
    const fem::DirichletData z = fem::zero_dirichlet(d);
    CHECK(z.dofs == dir.dofs);
    CHECK(z.values.lpNorm<Eigen::Infinity>() == 0.0);

    // Scaling: the datum is linear in Ubar.
    const fem::DirichletData unit = fem::bfs_dirichlet(d, 1.0);
    CHECK((dir.values - Ubar * unit.values).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("rectangle inflow matches its profile") {
    const mesh::Mesh m = mesh::generate_rect_mesh(2.0, 1.0, 0.25);
    const mesh::DofMap d = mesh::build_dofmap(m);
    const double U = 1.5, Ly = 1.0;
    const fem::DirichletData dir = fem::rect_dirichlet(d, Ly, U);
    Vector state = Vector::Zero(d.n_state());
    dir.impose(state);
    for (int n = 0; n < d.n_vnodes(); ++n) {
        const Vec2 q = d.velocity_nodes[n];
        if (d.node_has_tag(n, mesh::BoundaryTag::Inlet)) {
            const double exact = 4.0 * U * q.y * (Ly - q.y) / (Ly * Ly);
            CHECK(state[mesh::DofMap::vdof(n, 0)] == doctest::Approx(exact).epsilon(1e-14));
        }
    }
}

TEST_CASE("append_eliminated drops constrained rows and columns") {
    std::mt19937_64 rng(41);
    std::vector<linalg::Triplet> ts;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) ts.emplace_back(i, j, static_cast<double>(10 * i + j + 1));
    const SparseMatrix A = SparseMatrix::from_triplets(5, 5, ts);

    std::vector<char> rmask(5, 0), cmask(5, 0);
    rmask[1] = 1;
    cmask[3] = 1;

    std::vector<linalg::Triplet> out;
    fem::append_eliminated(out, A, rmask, cmask, 2, 7, false, 3.0);
    const SparseMatrix R = SparseMatrix::from_triplets(12, 12, out);
    const DenseMatrix D(R.eigen());
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double expected = (rmask[i] || cmask[j]) ? 0.0 : 3.0 * (10 * i + j + 1);
            CHECK(D(i + 2, j + 7) == expected);
        }

    // Transpose mode: entry (i, j) lands at (j + ro, i + co), masks applied in
    // the destination orientation.
    std::vector<linalg::Triplet> outT;
    fem::append_eliminated(outT, A, rmask, cmask, 0, 0, true);
    const DenseMatrix DT(SparseMatrix::from_triplets(5, 5, outT).eigen());
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double expected = (rmask[j] || cmask[i]) ? 0.0 : (10.0 * i + j + 1);
            CHECK(DT(j, i) == expected);
        }

    // Empty masks keep everything.
    std::vector<linalg::Triplet> all;
    fem::append_eliminated(all, A, {}, {}, 0, 0);
    CHECK(sparse_vs_dense(SparseMatrix::from_triplets(5, 5, all), DenseMatrix(A.eigen())) ==
          0.0);
}
