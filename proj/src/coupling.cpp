#include "nsdd/coupling.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace nsdd::coupling {

Mode parse_mode(const std::string& name) {
    std::string u;
    for (char c : name) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (u == "FFF") return Mode::FFF;
    if (u == "FRF") return Mode::FRF;
    if (u == "FRR") return Mode::FRR;
    if (u == "RRR") return Mode::RRR;
    throw std::invalid_argument("unknown coupling mode '" + name + "' (want fff|frf|frr|rrr)");
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::FFF: return "fff";
        case Mode::FRF: return "frf";
        case Mode::FRR: return "frr";
        default: return "rrr";
    }
}

ObjectiveDriver::ObjectiveDriver(const solvers::DdDiscretisation& dd,
                                 const rom::ReducedBasis* basis, Mode mode)
    : dd_(dd), basis_(basis), mode_(mode) {
    if (mode != Mode::FFF && basis == nullptr)
        throw std::invalid_argument("ObjectiveDriver: reduced coupling modes need a basis");
    if (basis && basis->mesh_fingerprint != dd.mesh.fingerprint())
        throw std::invalid_argument("ObjectiveDriver: basis/mesh fingerprint mismatch");
    if (side1_reduced(mode))
        red1_.emplace(basis->side1, dd.Ubar, dd.sub1.nu(), dd.sub1.dt());
    if (side2_reduced(mode))
        red2_.emplace(basis->side2, dd.Ubar, dd.sub2.nu(), dd.sub2.dt());
    states_ = initial_states();
}

int ObjectiveDriver::control_dim() const {
    return control_reduced(mode_) ? basis_->n_g() : dd_.n_trace();
}

ModeStates ObjectiveDriver::initial_states() const {
    ModeStates s;
    s.s1 = side1_reduced(mode_) ? Vector::Zero(basis_->side1.n_u() + 1 + basis_->side1.n_p())
                                : Vector::Zero(dd_.sub1.n_state());
    s.s2 = side2_reduced(mode_) ? Vector::Zero(basis_->side2.n_u() + 1 + basis_->side2.n_p())
                                : Vector::Zero(dd_.sub2.n_state());
    return s;
}

Vector ObjectiveDriver::control_to_xh(const Vector& g) const {
    return control_reduced(mode_) ? Vector(basis_->Zg * g) : g;
}

ObjectiveDriver::Solves ObjectiveDriver::solve_sides(const Vector& g, bool want_jacobian) const {
    if (g.size() != control_dim())
        throw std::invalid_argument("coupling objective: control has wrong dimension");
    Solves out;
    const Vector g_xh = control_to_xh(g);

    if (side1_reduced(mode_)) {
        const rom::ReducedSide& side = basis_->side1;
        const Vector prev = states_.s1.head(side.n_u() + 1);
        const Vector load = side.Tg_rom * g;  // sign +1
        auto r = red1_->solve_state(prev, load);
        out.s1.trace = side.Gtrace * r.ctilde;
        out.s1.iterations = r.iterations;
        out.s1.committed.resize(side.n_u() + 1 + side.n_p());
        out.s1.committed << r.ctilde, r.z.tail(side.n_p());
        out.red1 = std::move(r);
    } else {
        solvers::FlowProblem::StateResult r;
        try {
            r = dd_.sub1.solve_state(states_.s1, g_xh, want_jacobian, false,
                                     seed1_ ? &*seed1_ : nullptr);
        } catch (const linalg::ConvergenceError&) {
            if (!seed1_) throw;
            r = dd_.sub1.solve_state(states_.s1, g_xh, want_jacobian);
        }
        seed1_ = r.state;
        out.s1.trace = dd_.sub1.interface_trace(r.state);
        out.s1.iterations = r.iterations;
        out.s1.committed = r.state;
        out.fem1 = std::move(r);
    }

    if (side2_reduced(mode_)) {
        const rom::ReducedSide& side = basis_->side2;
        const Vector prev = states_.s2.head(side.n_u() + 1);
        const Vector load = control_reduced(mode_) ? Vector(-(side.Tg_rom * g))
                                                   : Vector(-(side.Tg_fem * g_xh));
        auto r = red2_->solve_state(prev, load);
        out.s2.trace = side.Gtrace * r.ctilde;
        out.s2.iterations = r.iterations;
        out.s2.committed.resize(side.n_u() + 1 + side.n_p());
        out.s2.committed << r.ctilde, r.z.tail(side.n_p());
        out.red2 = std::move(r);
    } else {
        solvers::FlowProblem::StateResult r;
        try {
            r = dd_.sub2.solve_state(states_.s2, g_xh, want_jacobian, false,
                                     seed2_ ? &*seed2_ : nullptr);
        } catch (const linalg::ConvergenceError&) {
            if (!seed2_) throw;
            r = dd_.sub2.solve_state(states_.s2, g_xh, want_jacobian);
        }
        seed2_ = r.state;
        out.s2.trace = dd_.sub2.interface_trace(r.state);
        out.s2.iterations = r.iterations;
        out.s2.committed = r.state;
        out.fem2 = std::move(r);
    }
    return out;
}

Evaluation ObjectiveDriver::evaluate(const Vector& g) const {
    Solves sol = solve_sides(g, true);
    const linalg::SparseMatrix& Mg = dd_.sub1.ops().M_gamma;
    Evaluation ev;
    ev.newton1 = sol.s1.iterations;
    ev.newton2 = sol.s2.iterations;

    const Vector delta = sol.s1.trace - sol.s2.trace;
    if (!control_reduced(mode_)) {
        // Functional on the FEM trace space: J = 1/2 delta^T M_Gamma delta.
        const Vector Md = Mg.apply(delta);
        ev.J = 0.5 * delta.dot(Md);

        const Vector adj1 =
            dd_.sub1.solve_adjoint(*sol.fem1, dd_.sub1.scatter_trace(Md));
        Vector term1 = Mg.apply(dd_.sub1.interface_trace(adj1));
        Vector term2;
        if (side2_reduced(mode_)) {
            const rom::ReducedSide& side = basis_->side2;
            const int nu = side.n_u();
            const Vector eta = red2_->solve_adjoint(
                *sol.red2, -(side.Gtrace.leftCols(nu).transpose() * Md));
            term2 = side.Tg_fem.transpose() * eta.head(nu);
        } else {
            const Vector adj2 =
                dd_.sub2.solve_adjoint(*sol.fem2, -dd_.sub2.scatter_trace(Md));
            term2 = Mg.apply(dd_.sub2.interface_trace(adj2));
        }
        ev.dual = term1 - term2;
        ev.riesz = dd_.m_gamma_chol.solve(ev.dual);
        return ev;
    }

    // Functional on control-POD coordinates: e = Zg^T M_Gamma delta,
    // J = 1/2 |e|^2 (the M_Gamma norm of the projected mismatch).
    const Vector e = basis_->Zg.transpose() * Mg.apply(delta);
    ev.J = 0.5 * e.squaredNorm();
    const Vector Mw = Mg.apply(Vector(basis_->Zg * e));

    Vector term1, term2;
    if (side1_reduced(mode_)) {
        const rom::ReducedSide& side = basis_->side1;
        const int nu = side.n_u();
        const Vector eta =
            red1_->solve_adjoint(*sol.red1, side.Gtrace.leftCols(nu).transpose() * Mw);
        term1 = side.Tg_rom.transpose() * eta.head(nu);
    } else {
        const Vector adj1 = dd_.sub1.solve_adjoint(*sol.fem1, dd_.sub1.scatter_trace(Mw));
        term1 = basis_->Zg.transpose() * Mg.apply(dd_.sub1.interface_trace(adj1));
    }
    {
        const rom::ReducedSide& side = basis_->side2;
        const int nu = side.n_u();
        const Vector eta = red2_->solve_adjoint(
            *sol.red2, -(side.Gtrace.leftCols(nu).transpose() * Mw));
        term2 = side.Tg_rom.transpose() * eta.head(nu);
    }
    ev.dual = term1 - term2;
    ev.riesz = ev.dual;  // coordinates are already M_Gamma-orthonormal
    return ev;
}

double ObjectiveDriver::functional(const Vector& g) const {
    Solves sol = solve_sides(g, false);
    const Vector delta = sol.s1.trace - sol.s2.trace;
    const Vector Md = dd_.sub1.ops().M_gamma.apply(delta);
    if (!control_reduced(mode_)) return 0.5 * delta.dot(Md);
    return 0.5 * (basis_->Zg.transpose() * Md).squaredNorm();
}

int ObjectiveDriver::advance(const Vector& g) {
    Solves sol = solve_sides(g, false);
    states_.s1 = std::move(sol.s1.committed);
    states_.s2 = std::move(sol.s2.committed);
    return sol.s1.iterations + sol.s2.iterations;
}

Vector ObjectiveDriver::fem_state(int side) const {
    const bool reduced = side == 1 ? side1_reduced(mode_) : side2_reduced(mode_);
    const Vector& s = side == 1 ? states_.s1 : states_.s2;
    if (!reduced) return s;
    const rom::ReducedSide& rs = side == 1 ? basis_->side1 : basis_->side2;
    const solvers::FlowProblem& fp = dd_.sub(side);
    const int nu = rs.n_u();
    Vector out(fp.n_state());
    out.head(fp.dofs().n_vel()) = rom::lift_velocity(rs, s.head(nu), s[nu]);
    out.tail(fp.dofs().n_pres()) = rs.Zp * s.tail(rs.n_p());
    return out;
}

Preconditioner ObjectiveDriver::preconditioner(bool riesz) const {
    if (!riesz || control_reduced(mode_)) return nullptr;
    const linalg::CholeskyFactor* chol = &dd_.m_gamma_chol;
    return [chol](const Vector& v) { return chol->solve(v); };
}

namespace {

double relative_error(const linalg::SparseMatrix& mass, const Vector& value,
                      const Vector& reference) {
    const double nref = solvers::weighted_norm(mass, reference);
    const double ndiff = solvers::weighted_norm(mass, value - reference);
    return nref > 0.0 ? ndiff / nref : ndiff;
}

}  // namespace

TransientResult run_transient(const solvers::DdDiscretisation& dd,
                              const rom::ReducedBasis* basis, Mode mode,
                              const TransientOptions& opts) {
    TransientResult out;
    ObjectiveDriver driver(dd, basis, mode);
    const int dim = driver.control_dim();
    const double dt = dd.sub1.dt();

    Vector mono_prev = Vector::Zero(dd.full.n_state());
    Vector warm = Vector::Zero(dim);

    for (int step = 1; step <= opts.n_steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        TimestepReport rep;
        rep.step = step;
        rep.time = step * dt;
        try {
            if (step > 1) rep.J_zero = driver.functional(Vector::Zero(dim));

            auto obj = [&](const Vector& g) {
                Evaluation ev = driver.evaluate(g);
                return ObjectiveValue{ev.J, ev.dual};
            };
            LbfgsResult res = lbfgs_minimize(
                obj, warm, opts.lbfgs, driver.preconditioner(opts.riesz_precondition));
            if (step == 1) rep.J_zero = res.J_history.front();

            rep.iterations = res.iterations;
            rep.evaluations = res.evaluations;
            rep.J = res.J;
            rep.grad_norm = res.gradient.lpNorm<Eigen::Infinity>();
            rep.stagnated = res.stagnated;
            driver.advance(res.x);
            warm = res.x;

            auto mono = dd.full.solve_state(mono_prev, Vector(), false);
            mono_prev = mono.state;
            for (int side = 1; side <= 2; ++side) {
                const Vector ref = dd.restrict_state(side, mono_prev);
                const Vector got = driver.fem_state(side);
                const solvers::FlowProblem& fp = dd.sub(side);
                const int nv = fp.dofs().n_vel();
                const double eu = relative_error(fp.ops().M, got.head(nv), ref.head(nv));
                const double ep = relative_error(side == 1 ? dd.pmass1 : dd.pmass2,
                                                 got.tail(fp.dofs().n_pres()),
                                                 ref.tail(fp.dofs().n_pres()));
                (side == 1 ? rep.err_u1 : rep.err_u2) = eu;
                (side == 1 ? rep.err_p1 : rep.err_p2) = ep;
            }

            rep.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            out.reports.push_back(rep);
            out.controls.push_back(res.x);
            out.states1.push_back(driver.fem_state(1));
            out.states2.push_back(driver.fem_state(2));
            out.traces.push_back(std::move(res.J_history));
        } catch (const linalg::ConvergenceError& err) {
            out.aborted = true;
            out.error = err.what();
            break;
        } catch (const linalg::SingularMatrixError& err) {
            out.aborted = true;
            out.error = err.what();
            break;
        }
    }
    return out;
}

std::vector<Vector> run_monolithic(const solvers::DdDiscretisation& dd, int n_steps) {
    std::vector<Vector> states;
    Vector prev = Vector::Zero(dd.full.n_state());
    for (int k = 0; k < n_steps; ++k) {
        prev = dd.full.solve_state(prev, Vector(), false).state;
        states.push_back(prev);
    }
    return states;
}

}  // namespace nsdd::coupling
