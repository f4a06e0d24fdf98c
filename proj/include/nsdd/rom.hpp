#pragma once

#include "nsdd/solvers.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nsdd::rom {

using linalg::DenseMatrix;
using linalg::Vector;

/// Column-stored FEM trajectories of the offline FFF runs. Velocity and
/// pressure snapshots are kept raw here; homogenisation (subtracting the
/// parameter-scaled lifting) happens when the bases are built, so that the
/// stored data stays exactly re-evaluatable.
struct SnapshotSet {
    std::vector<std::array<double, 2>> mus;  // (Ubar, nu) per training run
    int steps_per_mu = 0;
    DenseMatrix u1, p1;  // velocity/pressure snapshot columns, subdomain 1
    DenseMatrix u2, p2;
    DenseMatrix g;       // optimal interface controls in X_h coefficients

    int columns() const { return static_cast<int>(mus.size()) * steps_per_mu; }
    int column(int imu, int istep) const { return imu * steps_per_mu + istep; }
};

/// One FFF trajectory: per-step subdomain states ([u; p]) and controls.
struct Trajectory {
    std::vector<Vector> states1, states2, controls;
};
using FffRunner = std::function<Trajectory(double Ubar, double nu)>;

/// Runs the FEM pipeline per training parameter and packs the snapshots.
SnapshotSet collect_snapshots(const std::vector<std::array<double, 2>>& training,
                              int n_steps, const solvers::DdDiscretisation& dd,
                              const FffRunner& run);

/// Unit-inflow lifting generator: one Stokes step (nu = 1, dt = 1) with the
/// given unit Dirichlet data; returns the velocity field (discretely
/// divergence-free, exact boundary values). The parameter-dependent lifting
/// is l(mu) = Ubar * l_unit.
Vector unit_lifting(const mesh::Mesh& m, const mesh::DofMap& d,
                    const fem::DirichletData& unit_data);

struct PodResult {
    DenseMatrix modes;        // X-orthonormal columns
    Vector singular_values;   // of the weighted snapshot matrix, all of them
};

/// POD of the snapshot columns in the inner product X (SPD): the leading N
/// left singular vectors of L^T S where X = L L^T. Throws when N exceeds the
/// numerical rank.
PodResult pod_basis(const DenseMatrix& S, int N, const linalg::SparseMatrix& X);

/// One velocity supremizer per pressure mode: solve X_u s = B^T q with
/// homogeneous Dirichlet elimination, then X_u-orthonormalise against Z_u
/// and the previously accepted supremizers. Near-zero candidates (e.g. from
/// q = 0) are skipped.
DenseMatrix supremizer_enrich(const linalg::SparseMatrix& Xu, const linalg::SparseMatrix& B,
                              const std::vector<char>& dirichlet_mask, const DenseMatrix& Zp,
                              const DenseMatrix& Zu);

/// Reduced structures of one subdomain. The velocity representation is
/// u = Zu c + amp * l_unit with the lifting amplitude pinned to Ubar (zero
/// at the initial condition); projected operators act on the extended
/// coefficient vector ctilde = [c; amp] of length Nu + 1.
struct ReducedSide {
    DenseMatrix Zu;      // n_vel x Nu, H1-orthonormal, zero on Dirichlet dofs
    DenseMatrix Zp;      // n_pres x Np, L2-orthonormal
    Vector l_unit;       // n_vel (identically zero when the side has no inlet)
    int n_pod = 0;       // leading velocity POD modes (rest are supremizers)

    DenseMatrix Mt;      // Nu x (Nu+1): Zu^T M [Zu | l]
    DenseMatrix Kt;      // Nu x (Nu+1): unit-viscosity stiffness projection
    DenseMatrix Bt;      // Np x (Nu+1): Zp^T B [Zu | l]
    std::vector<DenseMatrix> conv;  // Nu slabs of (Nu+1)^2: conv[a](b,c) = c(phi_b, phi_c, psi_a)
    DenseMatrix Tg_fem;  // Nu x n_trace: Zu^T T_Gamma
    DenseMatrix Tg_rom;  // Nu x Ng: Zu^T T_Gamma Zg
    DenseMatrix Gtrace;  // n_trace x (Nu+1): interface traces of [Zu | l]

    int n_u() const { return static_cast<int>(Zu.cols()); }
    int n_p() const { return static_cast<int>(Zp.cols()); }
    int n_sup() const { return n_u() - n_pod; }
};

struct ReducedBasis {
    ReducedSide side1, side2;
    DenseMatrix Zg;  // n_trace x Ng, M_Gamma-orthonormal control modes
    std::uint64_t mesh_fingerprint = 0;
    std::uint64_t training_seed = 0;

    int n_g() const { return static_cast<int>(Zg.cols()); }
};

struct ModeCounts {
    int u1 = 30;
    int u2 = 12;
    int p = 5;   // pressure modes per side; supremizer count matches
    int g = 10;
};

ReducedBasis build_reduced_basis(const solvers::DdDiscretisation& dd, const SnapshotSet& snaps,
                                 const ModeCounts& counts, std::uint64_t training_seed);

/// Homogenised reduced coordinates of a FEM velocity: Zu^T X (u - amp l).
Vector project_velocity(const ReducedSide& side, const linalg::SparseMatrix& Xu,
                        const Vector& u, double amp);
/// Lift reduced velocity coordinates back to the FEM space: Zu c + amp l.
Vector lift_velocity(const ReducedSide& side, const Vector& c, double amp);

/// Dense Newton solver for the reduced state equation of one subdomain and
/// the matching transposed-Jacobian adjoint solve.
class ReducedProblem {
  public:
    ReducedProblem(const ReducedSide& side, double Ubar, double nu, double dt);

    struct Result {
        Vector z;       // [c; p_hat] unknowns
        Vector ctilde;  // [c; Ubar] extended coefficients
        int iterations = 0;
        std::shared_ptr<linalg::DenseLuSolver> jacobian;
    };

    /// One implicit-Euler step from ctilde_prev; momentum_load (length Nu)
    /// carries the signed interface contribution, e.g. sign * Tg_rom * g.
    Result solve_state(const Vector& ctilde_prev, const Vector& momentum_load,
                       bool stokes = false) const;

    /// Transposed linear solve with the given momentum-row load (length Nu).
    Vector solve_adjoint(const Result& state, const Vector& load) const;

    /// Extended coefficients of the zero initial state (amp = 0).
    Vector initial_ctilde() const;

    const ReducedSide& side() const { return side_; }
    double Ubar() const { return Ubar_; }

  private:
    Vector residual(const Vector& z, const Vector& ctilde_prev, const Vector& load,
                    bool stokes) const;
    DenseMatrix jacobian(const Vector& z, bool stokes) const;

    const ReducedSide& side_;
    double Ubar_, nu_, dt_;
};

/// Binary basis container plus human-readable sidecar manifest
/// ("<path>.manifest.txt"). load_basis verifies magic, version and the mesh
/// fingerprint and refuses mismatches.
void save_basis(const ReducedBasis& basis, const std::string& path);
ReducedBasis load_basis(const std::string& path, std::uint64_t expected_fingerprint);

/// Binary trajectory container (per-parameter offline snapshots, online
/// state archives); same fingerprint policy as the basis container.
void save_trajectory(const Trajectory& t, const std::array<double, 2>& mu,
                     std::uint64_t mesh_fingerprint, const std::string& path);
struct LoadedTrajectory {
    Trajectory traj;
    std::array<double, 2> mu{};
};
LoadedTrajectory load_trajectory(const std::string& path, std::uint64_t expected_fingerprint);

}  // namespace nsdd::rom
