#pragma once

#include "nsdd/fem.hpp"
#include "nsdd/linalg.hpp"
#include "nsdd/mesh.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace nsdd::solvers {

using linalg::Vector;

/// One flow problem (monolithic domain or a single subdomain): implicit
/// Euler + exact Newton on the Taylor-Hood saddle system, with symmetric
/// Dirichlet elimination and an optional interface flux load.
///
/// The state vector layout is [u; p] (velocity dofs then pressure dofs).
/// interface_sign is +1 for Omega_1, -1 for Omega_2 (the (-1)^{i+1} factor
/// of the coupled problem) and 0 for the monolithic domain.
class FlowProblem {
  public:
    FlowProblem(const mesh::Mesh& m, const mesh::DofMap& d, fem::DirichletData dirichlet,
                double nu, double dt, double interface_sign);

    FlowProblem(FlowProblem&&) = default;
    FlowProblem& operator=(FlowProblem&&) = default;

    struct StateResult {
        Vector state;  // [u; p], Dirichlet values exact
        int iterations = 0;
        /// Factorised (eliminated) Jacobian at the returned state; present
        /// when requested, shared so adjoint solves can reuse it.
        std::shared_ptr<linalg::SparseLuSolver> jacobian;
    };

    /// One implicit-Euler step from state_prev with interface load
    /// sign * T_gamma * g (pass an empty g when there is no interface).
    /// stokes drops the convection term (linear problem, one iteration).
    /// initial, when given, seeds Newton (e.g. the converged state of a
    /// nearby control during a line search); it does not affect the fixed
    /// point, only the iteration count.
    StateResult solve_state(const Vector& state_prev, const Vector& g, bool want_jacobian,
                            bool stokes = false, const Vector* initial = nullptr) const;

    /// Linear adjoint solve against the transposed state Jacobian with the
    /// given velocity-block load and homogeneous Dirichlet data; returns
    /// [xi; lambda].
    Vector solve_adjoint(const StateResult& state, const Vector& velocity_load) const;

    /// Momentum-equation action (1/dt) M (u - u_prev) + A u + c(u,u,.) +
    /// B^T p at a given state, before interface load and Dirichlet handling
    /// (used to read the discrete interface flux off a monolithic solution).
    Vector momentum_action(const Vector& state, const Vector& state_prev) const;

    /// Gathers the interface trace (X_h coefficients) of a state/adjoint.
    Vector interface_trace(const Vector& state) const;
    /// Scatters X_h-indexed values onto the velocity dofs of a zero vector.
    Vector scatter_trace(const Vector& w) const;

    const mesh::DofMap& dofs() const { return dofs_; }
    const fem::AssembledOperators& ops() const { return ops_; }
    const fem::ConvectionAssembler& convection() const { return conv_; }
    const fem::DirichletData& dirichlet() const { return dirichlet_; }
    double dt() const { return dt_; }
    double nu() const { return ops_.nu; }
    double interface_sign() const { return sign_; }
    int n_state() const { return dofs_.n_state(); }

  private:
    Vector residual(const Vector& x, const Vector& u_prev, const Vector& load_v,
                    bool stokes) const;
    linalg::SparseMatrix jacobian_matrix(const Vector& x, bool stokes) const;

    mesh::DofMap dofs_;
    fem::AssembledOperators ops_;
    fem::ConvectionAssembler conv_;
    fem::DirichletData dirichlet_;
    std::vector<char> vel_mask_;    // Dirichlet mask over velocity dofs
    std::vector<linalg::Triplet> constant_triplets_;  // eliminated, with unit diagonal
    double dt_ = 0.0;
    double sign_ = 0.0;
};

/// Everything the two-subdomain optimisation needs at one parameter value:
/// the monolithic reference problem, both subdomain problems, restriction
/// maps (full mesh -> submesh, coordinate-exact), pressure masses for error
/// norms and the factorised interface mass.
struct DdDiscretisation {
    mesh::Mesh mesh;
    mesh::DofMap dofs;
    mesh::Decomposition parts;
    FlowProblem full;
    FlowProblem sub1;
    FlowProblem sub2;
    std::vector<int> vnode_map1, vnode_map2;  // sub velocity node -> full node
    std::vector<int> pnode_map1, pnode_map2;
    linalg::SparseMatrix pmass1, pmass2;  // pressure L2 masses on the submeshes
    linalg::CholeskyFactor m_gamma_chol;
    std::function<fem::DirichletData(const mesh::DofMap&)> unit_dirichlet;
    double Ubar = 1.0;  // inflow amplitude; actual datum = Ubar * unit datum

    const FlowProblem& sub(int i) const { return i == 1 ? sub1 : sub2; }
    /// Restricts a monolithic [u; p] state to subdomain i's layout.
    Vector restrict_state(int i, const Vector& full_state) const;
    int n_trace() const { return sub1.dofs().n_trace(); }
};

using DirichletFactory = std::function<fem::DirichletData(const mesh::DofMap&)>;

/// Builds the coupled discretisation at one parameter value. unit_dirichlet
/// produces the amplitude-one inflow datum; the amplitude enters only as the
/// linear scale Ubar (which is what makes the single-lifting reduced spaces
/// exact in the datum).
DdDiscretisation build_dd(const mesh::Mesh& m, double x_interface,
                          const DirichletFactory& unit_dirichlet, double Ubar, double nu,
                          double dt);

/// Interface velocity jump tr(u_1) - tr(u_2) in X_h coefficients.
Vector trace_mismatch(const DdDiscretisation& dd, const Vector& state1, const Vector& state2);

/// J = 1/2 delta^T M_Gamma delta over the interface.
double compute_functional(const DdDiscretisation& dd, const Vector& state1, const Vector& state2);

struct GradientPair {
    Vector dual;   // dJ/dg as a functional on X_h: M_Gamma (tr xi_1 - tr xi_2)
    Vector riesz;  // L2(Gamma_0) Riesz representative: tr xi_1 - tr xi_2
};

GradientPair compute_gradient(const DdDiscretisation& dd, const Vector& adj1, const Vector& adj2);

/// Discrete interface flux of a monolithic solution: the unique g in X_h
/// whose load reproduces the Omega_1-side momentum residual on the
/// interface velocity rows. With this control the restricted monolithic
/// state satisfies every subdomain momentum equation exactly; the subdomain
/// continuity rows tested against interface pressure functions are not
/// reachable by any flux control (the monolithic system only constrains the
/// two half-integrals to cancel), so the recovered states match the
/// restriction up to that interface divergence mismatch rather than to
/// solver precision.
Vector extract_interface_flux(const DdDiscretisation& dd, const Vector& full_state,
                              const Vector& full_prev);

/// sqrt(v^T M v) for an SPD mass-like matrix.
double weighted_norm(const linalg::SparseMatrix& mass, const Vector& v);

}  // namespace nsdd::solvers
