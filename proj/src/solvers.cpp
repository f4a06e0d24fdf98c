#include "nsdd/solvers.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace nsdd::solvers {

namespace {

constexpr int kMaxNewton = 25;

std::string format_history(const std::vector<double>& h) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific;
    for (size_t i = 0; i < h.size(); ++i) os << (i ? " " : "") << h[i];
    return os.str();
}

}  // namespace

FlowProblem::FlowProblem(const mesh::Mesh& m, const mesh::DofMap& d, fem::DirichletData dirichlet,
                         double nu, double dt, double interface_sign)
    : dofs_(d),
      ops_(fem::assemble_constant_ops(m, d, nu)),
      conv_(m, d),
      dirichlet_(std::move(dirichlet)),
      dt_(dt),
      sign_(interface_sign) {
    if (!(dt_ > 0.0)) throw std::invalid_argument("FlowProblem: dt must be > 0");
    const int nv = dofs_.n_vel();
    vel_mask_ = dirichlet_.mask(nv);
    const std::vector<char> none;
    fem::append_eliminated(constant_triplets_, ops_.M, vel_mask_, vel_mask_, 0, 0, false,
                           1.0 / dt_);
    fem::append_eliminated(constant_triplets_, ops_.A, vel_mask_, vel_mask_, 0, 0);
    fem::append_eliminated(constant_triplets_, ops_.B, vel_mask_, none, 0, nv, true);
    fem::append_eliminated(constant_triplets_, ops_.B, none, vel_mask_, nv, 0);
    for (int dof : dirichlet_.dofs) constant_triplets_.emplace_back(dof, dof, 1.0);
}

Vector FlowProblem::residual(const Vector& x, const Vector& u_prev, const Vector& load_v,
                             bool stokes) const {
    const int nv = dofs_.n_vel();
    const Vector u = x.head(nv);
    const Vector p = x.tail(dofs_.n_pres());
    Vector rv = load_v - (1.0 / dt_) * ops_.M.apply(u - u_prev) - ops_.A.apply(u) -
                ops_.B.apply_transpose(p);
    if (!stokes) rv -= conv_.apply(u);
    Vector r(x.size());
    r.head(nv) = rv;
    r.tail(dofs_.n_pres()) = -ops_.B.apply(u);
    dirichlet_.clear_rows(r);
    return r;
}

linalg::SparseMatrix FlowProblem::jacobian_matrix(const Vector& x, bool stokes) const {
    std::vector<linalg::Triplet> trips = constant_triplets_;
    if (!stokes) {
        const fem::ConvectionMatrices cm = conv_.assemble(x.head(dofs_.n_vel()));
        fem::append_eliminated(trips, cm.Jc, vel_mask_, vel_mask_, 0, 0);
    }
    return linalg::SparseMatrix::from_triplets(n_state(), n_state(), trips);
}

FlowProblem::StateResult FlowProblem::solve_state(const Vector& state_prev, const Vector& g,
                                                  bool want_jacobian, bool stokes,
                                                  const Vector* initial) const {
    const int nv = dofs_.n_vel();
    if (state_prev.size() != n_state())
        throw std::invalid_argument("solve_state: previous state has wrong dimension");
    const Vector u_prev = state_prev.head(nv);
    Vector load_v = Vector::Zero(nv);
    if (g.size() > 0) {
        if (g.size() != dofs_.n_trace())
            throw std::invalid_argument("solve_state: control has wrong trace dimension");
        load_v = sign_ * ops_.T_gamma.apply(g);
    }

    Vector x = (initial && initial->size() == n_state()) ? *initial : state_prev;
    dirichlet_.impose(x);
    std::vector<double> history;
    double r0 = 0.0;
    int iters = 0;
    bool converged = false;
    std::shared_ptr<linalg::SparseLuSolver> stokes_lu;
    for (int k = 0; k <= kMaxNewton; ++k) {
        const Vector r = residual(x, u_prev, load_v, stokes);
        const double rn = r.lpNorm<Eigen::Infinity>();
        history.push_back(rn);
        if (k == 0) r0 = rn;
        if (rn <= 1e-13 + 1e-14 * r0) {
            converged = true;
            iters = k;
            break;
        }
        // Roundoff floor: residual stopped contracting but is already tiny.
        if (k >= 2 && rn <= 1e-10 + 1e-12 * r0 && rn >= 0.5 * history[k - 1]) {
            converged = true;
            iters = k;
            break;
        }
        if (k == kMaxNewton) break;
        auto lu = std::make_shared<linalg::SparseLuSolver>(jacobian_matrix(x, stokes));
        x += lu->solve(r);
        if (stokes) stokes_lu = std::move(lu);
    }
    if (!converged) {
        if (history.back() <= 1e-10 + 1e-12 * r0) {
            iters = kMaxNewton;
        } else {
            throw linalg::ConvergenceError(
                "Newton failed on the flow state; residual history: " + format_history(history),
                static_cast<int>(history.size()) - 1);
        }
    }

    StateResult out;
    out.state = std::move(x);
    out.iterations = iters;
    if (want_jacobian) {
        // The loop factorises at pre-update iterates only; the adjoint needs
        // the Jacobian at the converged state itself.
        out.jacobian = (stokes && stokes_lu)
                           ? std::move(stokes_lu)
                           : std::make_shared<linalg::SparseLuSolver>(
                                 jacobian_matrix(out.state, stokes));
    }
    return out;
}

Vector FlowProblem::solve_adjoint(const StateResult& state, const Vector& velocity_load) const {
    if (!state.jacobian)
        throw std::logic_error("solve_adjoint: state was solved without want_jacobian");
    if (velocity_load.size() != dofs_.n_vel())
        throw std::invalid_argument("solve_adjoint: load has wrong dimension");
    Vector rhs = Vector::Zero(n_state());
    rhs.head(dofs_.n_vel()) = velocity_load;
    dirichlet_.clear_rows(rhs);
    return state.jacobian->solve_transposed(rhs);
}

Vector FlowProblem::momentum_action(const Vector& state, const Vector& state_prev) const {
    const int nv = dofs_.n_vel();
    const Vector u = state.head(nv);
    return (1.0 / dt_) * ops_.M.apply(u - state_prev.head(nv)) + ops_.A.apply(u) +
           conv_.apply(u) + ops_.B.apply_transpose(state.tail(dofs_.n_pres()));
}

Vector FlowProblem::interface_trace(const Vector& state) const {
    const auto& tv = dofs_.trace_vnodes;
    Vector t(2 * static_cast<int>(tv.size()));
    for (size_t k = 0; k < tv.size(); ++k)
        for (int c = 0; c < 2; ++c)
            t[2 * static_cast<int>(k) + c] = state[mesh::DofMap::vdof(tv[k], c)];
    return t;
}

Vector FlowProblem::scatter_trace(const Vector& w) const {
    const auto& tv = dofs_.trace_vnodes;
    if (w.size() != 2 * static_cast<int>(tv.size()))
        throw std::invalid_argument("scatter_trace: wrong trace dimension");
    Vector v = Vector::Zero(dofs_.n_vel());
    for (size_t k = 0; k < tv.size(); ++k)
        for (int c = 0; c < 2; ++c)
            v[mesh::DofMap::vdof(tv[k], c)] = w[2 * static_cast<int>(k) + c];
    return v;
}

namespace {

std::vector<int> node_map(const std::vector<mesh::Vec2>& sub,
                          const std::vector<mesh::Vec2>& full, const char* what) {
    std::map<std::pair<double, double>, int> index;
    for (size_t i = 0; i < full.size(); ++i)
        index[{full[i].x, full[i].y}] = static_cast<int>(i);
    std::vector<int> out(sub.size());
    for (size_t k = 0; k < sub.size(); ++k) {
        auto it = index.find({sub[k].x, sub[k].y});
        if (it == index.end())
            throw mesh::MeshError(std::string("restriction map: unmatched ") + what + " node");
        out[k] = it->second;
    }
    return out;
}

}  // namespace

Vector DdDiscretisation::restrict_state(int i, const Vector& full_state) const {
    const mesh::DofMap& sd = sub(i).dofs();
    const auto& vmap = i == 1 ? vnode_map1 : vnode_map2;
    const auto& pmap = i == 1 ? pnode_map1 : pnode_map2;
    Vector out(sd.n_state());
    for (int k = 0; k < sd.n_vnodes(); ++k)
        for (int c = 0; c < 2; ++c)
            out[mesh::DofMap::vdof(k, c)] = full_state[mesh::DofMap::vdof(vmap[k], c)];
    const int nv_full = dofs.n_vel();
    for (int j = 0; j < sd.n_pres(); ++j) out[sd.n_vel() + j] = full_state[nv_full + pmap[j]];
    return out;
}

namespace {

fem::DirichletData scaled_dirichlet(const DirichletFactory& unit, const mesh::DofMap& d,
                                    double Ubar) {
    fem::DirichletData data = unit(d);
    for (double& v : data.values) v *= Ubar;
    return data;
}

}  // namespace

DdDiscretisation build_dd(const mesh::Mesh& m, double x_interface,
                          const DirichletFactory& unit_dirichlet, double Ubar, double nu,
                          double dt) {
    mesh::Decomposition parts = mesh::decompose(m, x_interface);
    mesh::DofMap dofs = mesh::build_dofmap(m);
    mesh::DofMap dofs1 = mesh::build_dofmap(parts.omega1);
    mesh::DofMap dofs2 = mesh::build_dofmap(parts.omega2);
    if (dofs1.trace_y != dofs2.trace_y || dofs1.trace_y.empty())
        throw mesh::MeshError("build_dd: subdomain interface traces do not agree");

    FlowProblem full(m, dofs, scaled_dirichlet(unit_dirichlet, dofs, Ubar), nu, dt, 0.0);
    FlowProblem sub1(parts.omega1, dofs1, scaled_dirichlet(unit_dirichlet, dofs1, Ubar), nu, dt,
                     1.0);
    FlowProblem sub2(parts.omega2, dofs2, scaled_dirichlet(unit_dirichlet, dofs2, Ubar), nu, dt,
                     -1.0);

    std::vector<int> vm1 = node_map(dofs1.velocity_nodes, dofs.velocity_nodes, "velocity");
    std::vector<int> vm2 = node_map(dofs2.velocity_nodes, dofs.velocity_nodes, "velocity");
    std::vector<int> pm1 = node_map(dofs1.pressure_nodes, dofs.pressure_nodes, "pressure");
    std::vector<int> pm2 = node_map(dofs2.pressure_nodes, dofs.pressure_nodes, "pressure");

    linalg::SparseMatrix pmass1 = fem::pressure_mass_matrix(parts.omega1, dofs1);
    linalg::SparseMatrix pmass2 = fem::pressure_mass_matrix(parts.omega2, dofs2);
    linalg::CholeskyFactor chol(sub1.ops().M_gamma);

    return DdDiscretisation{m,
                            std::move(dofs),
                            std::move(parts),
                            std::move(full),
                            std::move(sub1),
                            std::move(sub2),
                            std::move(vm1),
                            std::move(vm2),
                            std::move(pm1),
                            std::move(pm2),
                            std::move(pmass1),
                            std::move(pmass2),
                            std::move(chol),
                            unit_dirichlet,
                            Ubar};
}

Vector trace_mismatch(const DdDiscretisation& dd, const Vector& state1, const Vector& state2) {
    return dd.sub1.interface_trace(state1) - dd.sub2.interface_trace(state2);
}

double compute_functional(const DdDiscretisation& dd, const Vector& state1,
                          const Vector& state2) {
    const Vector delta = trace_mismatch(dd, state1, state2);
    return 0.5 * delta.dot(dd.sub1.ops().M_gamma.apply(delta));
}

GradientPair compute_gradient(const DdDiscretisation& dd, const Vector& adj1,
                              const Vector& adj2) {
    GradientPair g;
    g.riesz = dd.sub1.interface_trace(adj1) - dd.sub2.interface_trace(adj2);
    g.dual = dd.sub1.ops().M_gamma.apply(g.riesz);
    return g;
}

Vector extract_interface_flux(const DdDiscretisation& dd, const Vector& full_state,
                              const Vector& full_prev) {
    const Vector s1 = dd.restrict_state(1, full_state);
    const Vector p1 = dd.restrict_state(1, full_prev);
    const Vector action = dd.sub1.momentum_action(s1, p1);
    const auto& tv = dd.sub1.dofs().trace_vnodes;
    Vector r(2 * static_cast<int>(tv.size()));
    for (size_t k = 0; k < tv.size(); ++k)
        for (int c = 0; c < 2; ++c)
            r[2 * static_cast<int>(k) + c] = action[mesh::DofMap::vdof(tv[k], c)];
    return dd.m_gamma_chol.solve(r);
}

double weighted_norm(const linalg::SparseMatrix& mass, const Vector& v) {
    return std::sqrt(std::max(0.0, v.dot(mass.apply(v))));
}

}  // namespace nsdd::solvers
