#pragma once

#include "nsdd/optimizer.hpp"
#include "nsdd/rom.hpp"
#include "nsdd/solvers.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nsdd::coupling {

using linalg::Vector;

/// Which representation each slot (subdomain 1, subdomain 2, control space)
/// uses: F = FEM, R = reduced.
enum class Mode { FFF, FRF, FRR, RRR };

Mode parse_mode(const std::string& name);  // accepts fff/FFF etc.
const char* mode_name(Mode m);
inline bool side1_reduced(Mode m) { return m == Mode::RRR; }
inline bool side2_reduced(Mode m) { return m != Mode::FFF; }
inline bool control_reduced(Mode m) { return m == Mode::FRR || m == Mode::RRR; }

/// Committed previous-step states. FEM sides store [u; p]; reduced sides
/// store [ctilde; p_hat] (extended coefficients, then reduced pressure).
struct ModeStates {
    Vector s1, s2;
};

/// One objective/gradient evaluation at a fixed previous state.
struct Evaluation {
    double J = 0.0;
    Vector dual;   // exact discrete gradient in the control parameterisation
    Vector riesz;  // representative used for preconditioned descent
    int newton1 = 0, newton2 = 0;
};

/// The per-timestep optimisation problem of one coupling mode: evaluates
/// J(g) and its exact adjoint gradient from the committed previous states,
/// and commits accepted controls. The control lives in X_h coefficients for
/// FEM-control modes and in control-POD coordinates otherwise.
class ObjectiveDriver {
  public:
    /// basis may be null for Mode::FFF only.
    ObjectiveDriver(const solvers::DdDiscretisation& dd, const rom::ReducedBasis* basis,
                    Mode mode);

    int control_dim() const;
    Mode mode() const { return mode_; }

    ModeStates initial_states() const;
    const ModeStates& states() const { return states_; }
    void set_states(ModeStates s) { states_ = std::move(s); }

    Evaluation evaluate(const Vector& g) const;

    /// J(g) alone, without adjoint solves (used for reference evaluations
    /// such as the g = 0 baseline).
    double functional(const Vector& g) const;

    /// Solves both sides at g and commits the results as the previous state
    /// of the next step; returns the Newton iteration total.
    int advance(const Vector& g);

    /// FEM-space [u; p] view of the committed state of one side (reduced
    /// states are lifted; the amplitude is the committed one).
    Vector fem_state(int side) const;

    /// Descent metric: the interface Riesz map for FEM-control modes, the
    /// identity (already orthonormal coordinates) otherwise. Returns an
    /// empty function when `riesz` is false or the identity applies.
    Preconditioner preconditioner(bool riesz) const;

  private:
    struct SideSolve {
        Vector committed;  // state in this side's storage layout
        Vector trace;      // interface trace values (X_h coefficients)
        int iterations = 0;
    };
    struct Solves {
        SideSolve s1, s2;
        std::optional<solvers::FlowProblem::StateResult> fem1, fem2;
        std::optional<rom::ReducedProblem::Result> red1, red2;
    };
    Solves solve_sides(const Vector& g, bool want_jacobian) const;
    Vector control_to_xh(const Vector& g) const;

    const solvers::DdDiscretisation& dd_;
    const rom::ReducedBasis* basis_;
    Mode mode_;
    std::optional<rom::ReducedProblem> red1_, red2_;
    ModeStates states_;
    // Newton seeds: converged FEM states of the most recent evaluation.
    // Successive line-search controls are close, so seeding Newton there
    // saves most factorisations; the fixed point is unaffected.
    mutable std::optional<Vector> seed1_, seed2_;
};

struct TimestepReport {
    int step = 0;         // 1-based
    double time = 0.0;    // step * dt
    int iterations = 0;   // optimiser iterations
    int evaluations = 0;  // objective evaluations
    double J = 0.0;
    double grad_norm = 0.0;  // inf norm of the dual at the accepted control
    double J_zero = 0.0;     // objective at g = 0 from the same previous state
    bool stagnated = false;
    double err_u1 = 0.0, err_u2 = 0.0;  // relative L2 errors vs monolithic
    double err_p1 = 0.0, err_p2 = 0.0;
    double wall_seconds = 0.0;
};

struct TransientResult {
    std::vector<TimestepReport> reports;
    std::vector<Vector> controls;          // accepted control per step
    std::vector<Vector> states1, states2;  // FEM-space [u; p] per step
    std::vector<std::vector<double>> traces;  // per-step accepted-iterate J values
    bool aborted = false;
    std::string error;
};

struct TransientOptions {
    int n_steps = 20;
    LbfgsSettings lbfgs;
    bool riesz_precondition = true;
};

/// Runs the optimise-then-commit transient loop; on a solver failure the
/// already-completed steps are kept and `aborted`/`error` are set.
TransientResult run_transient(const solvers::DdDiscretisation& dd,
                              const rom::ReducedBasis* basis, Mode mode,
                              const TransientOptions& opts);

/// Monolithic implicit-Euler trajectory from rest (reference solution).
std::vector<Vector> run_monolithic(const solvers::DdDiscretisation& dd, int n_steps);

}  // namespace nsdd::coupling
