#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdd/solvers.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace nsdd;
using linalg::Vector;
using mesh::Vec2;
using solvers::DdDiscretisation;
using solvers::FlowProblem;

namespace {

struct RectSetup {
    mesh::Mesh m;
    mesh::DofMap d;
};

RectSetup rect_setup(double Lx, double Ly, double h) {
    mesh::Mesh m = mesh::generate_rect_mesh(Lx, Ly, h);
    mesh::DofMap d = mesh::build_dofmap(m);
    return {std::move(m), std::move(d)};
}

DdDiscretisation make_dd(double h, double Ubar, double nu, double dt) {
    const mesh::Mesh m = mesh::generate_bfs_mesh(h);
    return solvers::build_dd(
        m, 9.0, [](const mesh::DofMap& d) { return fem::bfs_dirichlet(d, 1.0); }, Ubar, nu,
        dt);
}

/// Divergence residual of the velocity block on the non-Dirichlet rows
/// (the discrete incompressibility enforced by the solver).
double divergence_residual(const FlowProblem& fp, const Vector& state) {
    const Vector u = state.head(fp.dofs().n_vel());
    return fp.ops().B.apply(u).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("steady Poiseuille flow is reproduced exactly") {
    const double Lx = 2.0, Ly = 1.0, h = 0.25, U = 1.5, nu = 0.8;
    const RectSetup rs = rect_setup(Lx, Ly, h);
    FlowProblem fp(rs.m, rs.d, fem::rect_dirichlet(rs.d, Ly, U), nu, 0.5, 0.0);

    // March to steady state; the parabolic profile is an exact Taylor-Hood
    // solution (quadratic velocity, linear pressure, vanishing convection).
    Vector state = Vector::Zero(rs.d.n_state());
    FlowProblem::StateResult r;
    for (int s = 0; s < 60; ++s) {
        r = fp.solve_state(state, Vector(), false);
        state = r.state;
        CHECK(divergence_residual(fp, state) <= 1e-9);
    }

    for (int n = 0; n < rs.d.n_vnodes(); ++n) {
        const Vec2 q = rs.d.velocity_nodes[n];
        const double exact = 4.0 * U * q.y * (Ly - q.y) / (Ly * Ly);
        CHECK(state[mesh::DofMap::vdof(n, 0)] == doctest::Approx(exact).epsilon(1e-7));
        CHECK(std::abs(state[mesh::DofMap::vdof(n, 1)]) <= 1e-8);
    }
    // Pressure drives the flow with the analytic gradient -8 nu U / Ly^2,
    // pinned to ~0 at the outflow by the do-nothing condition.
    const double dpdx = -8.0 * nu * U / (Ly * Ly);
    for (int n = 0; n < rs.d.n_pres(); ++n) {
        const Vec2 q = rs.d.pressure_nodes[n];
        const double exact = dpdx * (q.x - Lx);
        CHECK(state[rs.d.n_vel() + n] == doctest::Approx(exact).epsilon(1e-6));
    }
}

TEST_CASE("implicit Euler respects the Stokes limit and superposition") {
    const DdDiscretisation dd = make_dd(1.0, 1.0, 1.0, 0.1);
    const int ng = dd.n_trace();
    std::mt19937_64 rng(5);
    const Vector prev = Vector::Zero(dd.sub1.n_state());

    // Stokes solves are affine in the interface control: x(g1) + x(g2) - x(0)
    // = x(g1 + g2) for a shared previous state and inflow datum.
    const Vector g1 = oracles::random_unit(ng, rng);
    const Vector g2 = oracles::random_unit(ng, rng);
    const Vector x0 = dd.sub1.solve_state(prev, Vector::Zero(ng), false, true).state;
    const Vector xa = dd.sub1.solve_state(prev, g1, false, true).state;
    const Vector xb = dd.sub1.solve_state(prev, g2, false, true).state;
    const Vector xs = dd.sub1.solve_state(prev, g1 + g2, false, true).state;
    CHECK((xa + xb - x0 - xs).lpNorm<Eigen::Infinity>() <=
          1e-10 * (1.0 + xs.lpNorm<Eigen::Infinity>()));

    // One Stokes iteration only.
    CHECK(dd.sub1.solve_state(prev, g1, false, true).iterations == 1);
}

TEST_CASE("divergence residual stays at solver precision along a trajectory") {
    const DdDiscretisation dd = make_dd(1.0, 2.0, 1.0, 0.01);
    Vector full = Vector::Zero(dd.full.n_state());
    Vector s1 = Vector::Zero(dd.sub1.n_state());
    Vector s2 = Vector::Zero(dd.sub2.n_state());
    std::mt19937_64 rng(8);
    for (int step = 0; step < 3; ++step) {
        full = dd.full.solve_state(full, Vector(), false).state;
        CHECK(divergence_residual(dd.full, full) <= 1e-9);
        const Vector g = 0.1 * oracles::random_unit(dd.n_trace(), rng);
        s1 = dd.sub1.solve_state(s1, g, false).state;
        s2 = dd.sub2.solve_state(s2, g, false).state;
        CHECK(divergence_residual(dd.sub1, s1) <= 1e-9);
        CHECK(divergence_residual(dd.sub2, s2) <= 1e-9);
    }
}

TEST_CASE("restriction maps are coordinate-exact and value-preserving") {
    const DdDiscretisation dd = make_dd(1.0, 1.5, 1.2, 0.05);
    Vector full = Vector::Zero(dd.full.n_state());
    full = dd.full.solve_state(full, Vector(), false).state;

    for (int side = 1; side <= 2; ++side) {
        const FlowProblem& sub = dd.sub(side);
        const Vector r = dd.restrict_state(side, full);
        REQUIRE(r.size() == sub.n_state());
        // Every subdomain velocity node exists in the full map at identical
        // coordinates, and the restricted values are bit-identical.
        int checked = 0;
        for (int n = 0; n < sub.dofs().n_vnodes(); ++n) {
            const Vec2 q = sub.dofs().velocity_nodes[n];
            for (int fn = 0; fn < dd.dofs.n_vnodes(); ++fn) {
                if (dd.dofs.velocity_nodes[fn].x == q.x &&
                    dd.dofs.velocity_nodes[fn].y == q.y) {
                    for (int c = 0; c < 2; ++c)
                        CHECK(r[mesh::DofMap::vdof(n, c)] ==
                              full[mesh::DofMap::vdof(fn, c)]);
                    ++checked;
                    break;
                }
            }
        }
        CHECK(checked == sub.dofs().n_vnodes());
    }
}

TEST_CASE("interface trace and scatter are adjoint gather operations") {
    const DdDiscretisation dd = make_dd(1.0, 1.0, 1.0, 0.1);
    std::mt19937_64 rng(3);
    const Vector x = oracles::random_unit(dd.sub1.n_state(), rng);
    const Vector w = oracles::random_unit(dd.n_trace(), rng);
    // <tr(x), w> = <x, scatter(w)>: scatter places trace values on velocity
    // dofs, the trace gathers them back.
    const double lhs = dd.sub1.interface_trace(x).dot(w);
    Vector padded = Vector::Zero(dd.sub1.n_state());
    padded.head(dd.sub1.dofs().n_vel()) = dd.sub1.scatter_trace(w);
    CHECK(lhs == doctest::Approx(padded.dot(x)).epsilon(1e-14));

    // Round trip: trace(scatter(w)) = w exactly.
    Vector lifted = Vector::Zero(dd.sub1.n_state());
    lifted.head(dd.sub1.dofs().n_vel()) = dd.sub1.scatter_trace(w);
    CHECK((dd.sub1.interface_trace(lifted) - w).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("trace mismatch functional matches closed forms and the segment oracle") {
    const DdDiscretisation dd = make_dd(1.0, 1.0, 1.0, 0.1);
    const int nt = dd.sub1.dofs().n_trace_nodes();

    // delta = (1, 0) on the whole length-5 interface: J = 1/2 * 5 * 1 = 2.5.
    Vector s1 = Vector::Zero(dd.sub1.n_state());
    const Vector s2 = Vector::Zero(dd.sub2.n_state());
    Vector ones = Vector::Zero(dd.n_trace());
    for (int tn = 0; tn < nt; ++tn) ones[2 * tn] = 1.0;
    s1.head(dd.sub1.dofs().n_vel()) = dd.sub1.scatter_trace(ones);
    CHECK(solvers::compute_functional(dd, s1, s2) == doctest::Approx(2.5).epsilon(1e-13));

    // Random mismatch against the closed-form segment mass blocks.
    std::mt19937_64 rng(9);
    const Vector delta = oracles::random_unit(dd.n_trace(), rng);
    Vector s1r = Vector::Zero(dd.sub1.n_state());
    s1r.head(dd.sub1.dofs().n_vel()) = dd.sub1.scatter_trace(delta);
    const double J = solvers::compute_functional(dd, s1r, s2);

    const auto& dm = dd.sub1.dofs();
    double acc = 0.0;
    for (const auto& seg : dm.trace_segments) {
        const double L = dm.trace_y[seg[1]] - dm.trace_y[seg[0]];
        const auto block = oracles::segment_p2_mass(L);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int c = 0; c < 2; ++c)
                    acc += delta[2 * seg[i] + c] * block[i][j] * delta[2 * seg[j] + c];
    }
    CHECK(J == doctest::Approx(0.5 * acc).epsilon(1e-12));

    // trace_mismatch itself is the signed difference of the gathered traces.
    const Vector tm = solvers::trace_mismatch(dd, s1r, s2);
    CHECK((tm - delta).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("adjoint solves invert the transposed Jacobian") {
    const DdDiscretisation dd = make_dd(1.0, 1.5, 0.9, 0.05);
    std::mt19937_64 rng(31);
    Vector prev = Vector::Zero(dd.sub1.n_state());
    const Vector g = 0.2 * oracles::random_unit(dd.n_trace(), rng);
    const FlowProblem::StateResult r = dd.sub1.solve_state(prev, g, true);
    REQUIRE(r.jacobian != nullptr);

    // Load on the velocity block, zero at Dirichlet dofs.
    Vector load = oracles::random_unit(dd.sub1.dofs().n_vel(), rng);
    for (int dof : dd.sub1.dirichlet().dofs) load[dof] = 0.0;

    const Vector adj = dd.sub1.solve_adjoint(r, load);
    REQUIRE(adj.size() == dd.sub1.n_state());

    // <adj, J y> = <load_padded, y> for any y supported off the Dirichlet
    // rows: verify with y = J^{-1} b for random eliminated b.
    Vector b = oracles::random_unit(dd.sub1.n_state(), rng);
    for (int dof : dd.sub1.dirichlet().dofs) b[dof] = 0.0;
    const Vector y = r.jacobian->solve(b);
    Vector lp = Vector::Zero(dd.sub1.n_state());
    lp.head(dd.sub1.dofs().n_vel()) = load;
    CHECK(adj.dot(b) == doctest::Approx(lp.dot(y)).epsilon(1e-10));

    // Adjoint states carry homogeneous Dirichlet values.
    for (int dof : dd.sub1.dirichlet().dofs) CHECK(adj[dof] == 0.0);
}

TEST_CASE("adjoint gradient of the mismatch functional passes finite differences") {
    const DdDiscretisation dd = make_dd(1.0, 2.0, 1.0, 0.01);
    const int ng = dd.n_trace();
    std::mt19937_64 rng(77);

    // Previous states: one committed step at g = 0 from rest.
    Vector p1 = dd.sub1.solve_state(Vector::Zero(dd.sub1.n_state()), Vector::Zero(ng), false)
                    .state;
    Vector p2 = dd.sub2.solve_state(Vector::Zero(dd.sub2.n_state()), Vector::Zero(ng), false)
                    .state;

    const auto J_of = [&](const Vector& g) {
        const Vector s1 = dd.sub1.solve_state(p1, g, false).state;
        const Vector s2 = dd.sub2.solve_state(p2, g, false).state;
        return solvers::compute_functional(dd, s1, s2);
    };

    // Gradient by the adjoint chain at a physically scaled control.
    const Vector g = 0.5 * oracles::random_unit(ng, rng);
    const FlowProblem::StateResult r1 = dd.sub1.solve_state(p1, g, true);
    const FlowProblem::StateResult r2 = dd.sub2.solve_state(p2, g, true);
    const Vector delta =
        dd.sub1.interface_trace(r1.state) - dd.sub2.interface_trace(r2.state);
    const Vector Md = dd.sub1.ops().M_gamma.apply(delta);
    const Vector adj1 = dd.sub1.solve_adjoint(r1, dd.sub1.scatter_trace(Md));
    const Vector adj2 = dd.sub2.solve_adjoint(r2, -dd.sub2.scatter_trace(Md));
    const solvers::GradientPair gp = solvers::compute_gradient(dd, adj1, adj2);

    // Riesz representative solves M_gamma riesz = dual.
    CHECK((dd.sub1.ops().M_gamma.apply(gp.riesz) - gp.dual).lpNorm<Eigen::Infinity>() <=
          1e-12 * (1.0 + gp.dual.lpNorm<Eigen::Infinity>()));

    // Central differences along random unit directions.
    const double eps = 1e-6 * g.norm() + 1e-8;
    for (int k = 0; k < 4; ++k) {
        const Vector dir = oracles::random_unit(ng, rng);
        const double fd = oracles::central_difference(J_of, g, dir, eps);
        const double an = gp.dual.dot(dir);
        CHECK(std::abs(fd - an) <= 1e-5 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("extracted interface flux reproduces every subdomain momentum row") {
    // The flux functional read off the monolithic solution makes the
    // restricted states satisfy both subdomains' momentum equations to
    // solver precision. The interface-adjacent continuity rows, however,
    // cannot be matched by any flux load: the monolithic system only forces
    // the two half-domain contributions to cancel, so a nonzero divergence
    // mismatch remains by construction.
    const DdDiscretisation dd = make_dd(1.0, 2.0, 1.0, 0.01);
    Vector prev = Vector::Zero(dd.full.n_state());
    Vector cur = dd.full.solve_state(prev, Vector(), false).state;
    // One more step so the previous state is nontrivial.
    const Vector nxt = dd.full.solve_state(cur, Vector(), false).state;

    const Vector gstar = solvers::extract_interface_flux(dd, nxt, cur);

    for (int side = 1; side <= 2; ++side) {
        const FlowProblem& sub = dd.sub(side);
        const Vector rs = dd.restrict_state(side, nxt);
        const Vector rp = dd.restrict_state(side, cur);
        Vector mom = sub.momentum_action(rs, rp);
        mom -= sub.interface_sign() * sub.ops().T_gamma.apply(gstar);
        // Clear Dirichlet rows (held by the boundary datum, not the
        // momentum equation).
        for (int dof : sub.dirichlet().dofs) mom[dof] = 0.0;
        const double scale = 1.0 + sub.momentum_action(rs, rp).lpNorm<Eigen::Infinity>();
        CHECK(mom.lpNorm<Eigen::Infinity>() <= 1e-9 * scale);

        // Divergence rows: near zero away from the interface, structurally
        // nonzero at the interface pressure nodes.
        const Vector div = sub.ops().B.apply(rs.head(sub.dofs().n_vel()));
        double interior = 0.0, interface = 0.0;
        for (int pn = 0; pn < sub.dofs().n_pres(); ++pn) {
            const bool on_gamma = sub.dofs().pressure_nodes[pn].x == 9.0;
            (on_gamma ? interface : interior) =
                std::max(on_gamma ? interface : interior, std::abs(div[pn]));
        }
        CHECK(interior <= 1e-9);
        CHECK(interface > 1e-4);  // the structural obstruction
    }
}

TEST_CASE("Newton accepts seeds without changing the fixed point") {
    const DdDiscretisation dd = make_dd(1.0, 2.5, 0.7, 0.02);
    std::mt19937_64 rng(13);
    const Vector prev = Vector::Zero(dd.sub1.n_state());
    const Vector g = 0.3 * oracles::random_unit(dd.n_trace(), rng);

    const FlowProblem::StateResult cold = dd.sub1.solve_state(prev, g, false);
    const FlowProblem::StateResult warm =
        dd.sub1.solve_state(prev, g, false, false, &cold.state);
    CHECK(warm.iterations <= cold.iterations);
    CHECK((warm.state - cold.state).lpNorm<Eigen::Infinity>() <=
          1e-11 * (1.0 + cold.state.lpNorm<Eigen::Infinity>()));

    // A nearby control seeded from the old solution converges to the same
    // state as a cold start.
    const Vector g2 = g + 0.01 * oracles::random_unit(dd.n_trace(), rng);
    const Vector a = dd.sub1.solve_state(prev, g2, false, false, &cold.state).state;
    const Vector b = dd.sub1.solve_state(prev, g2, false).state;
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + b.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("Newton failure raises a convergence error carrying its iterations") {
    // Vanishing viscosity with a huge step and strong inflow: the implicit
    // system has no reachable solution for full Newton within its budget.
    const mesh::Mesh m = mesh::generate_bfs_mesh(1.0);
    bool threw = false;
    try {
        const DdDiscretisation dd = solvers::build_dd(
            m, 9.0, [](const mesh::DofMap& d) { return fem::bfs_dirichlet(d, 1.0); }, 50.0,
            1e-6, 100.0);
        Vector prev = Vector::Zero(dd.full.n_state());
        Vector s = dd.full.solve_state(prev, Vector(), false).state;
        (void)s;
    } catch (const linalg::ConvergenceError& e) {
        threw = true;
        CHECK(e.iterations > 0);
    } catch (const linalg::SingularMatrixError&) {
        threw = true;  // pivot breakdown is the other legitimate failure mode
    }
    CHECK(threw);
}

TEST_CASE("weighted norms agree with the quadratic form") {
    const DdDiscretisation dd = make_dd(1.0, 1.0, 1.0, 0.1);
    std::mt19937_64 rng(2);
    const Vector v = oracles::random_unit(dd.sub1.dofs().n_pres(), rng);
    const double n = solvers::weighted_norm(dd.pmass1, v);
    CHECK(n * n == doctest::Approx(v.dot(dd.pmass1.apply(v))).epsilon(1e-13));
}

TEST_CASE("coupled discretisation scales the inflow datum linearly") {
    const mesh::Mesh m = mesh::generate_bfs_mesh(1.0);
    const auto unit = [](const mesh::DofMap& d) { return fem::bfs_dirichlet(d, 1.0); };
    const DdDiscretisation a = solvers::build_dd(m, 9.0, unit, 1.0, 1.0, 0.1);
    const DdDiscretisation b = solvers::build_dd(m, 9.0, unit, 3.0, 1.0, 0.1);
    CHECK(a.Ubar == 1.0);
    CHECK(b.Ubar == 3.0);
    CHECK((b.full.dirichlet().values - 3.0 * a.full.dirichlet().values)
              .lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(b.full.dirichlet().dofs == a.full.dirichlet().dofs);
    // Sides carry the matching interface orientation signs.
    CHECK(a.sub1.interface_sign() == 1.0);
    CHECK(a.sub2.interface_sign() == -1.0);
    CHECK(a.full.interface_sign() == 0.0);
}
