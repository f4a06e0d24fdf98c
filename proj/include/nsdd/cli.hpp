#pragma once

#include "nsdd/config.hpp"
#include "nsdd/coupling.hpp"
#include "nsdd/report.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nsdd::cli {

/// Geometry-resolved pieces of one configured run: the mesh and the
/// amplitude-one inflow datum. Coupled discretisations are built per
/// parameter value from here.
struct Workspace {
    RunConfig config;
    mesh::Mesh mesh;
    solvers::DirichletFactory unit_dirichlet;

    solvers::DdDiscretisation dd(double Ubar, double nu) const;
};

Workspace make_workspace(const RunConfig& c);

/// Outcome of the offline stage (snapshot runs + basis construction).
struct OfflineResult {
    rom::ReducedBasis basis;
    std::vector<std::array<double, 2>> used;  // parameters that produced snapshots
    std::vector<int> used_indices;            // their positions in the sampled set
    std::vector<std::string> failures;        // human-readable per-parameter failures
    int n_total = 0;
};

/// Runs (or, when snapshot_dir is non-empty, resumes from) the per-parameter
/// FFF trajectories, then builds the reduced basis. Failed parameters are
/// logged and skipped; throws only when too few snapshots survive to build a
/// basis at the configured mode counts.
OfflineResult run_offline(const Workspace& ws, const std::string& snapshot_dir,
                          std::ostream* log);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Adjoint gradient vs central finite differences for one coupling mode,
/// probed off-optimum at physically-scaled controls on the given committed
/// time steps.
std::vector<CheckResult> fd_gradient_checks(const Workspace& ws,
                                            const rom::ReducedBasis* basis, coupling::Mode mode,
                                            const std::vector<int>& probe_steps, int directions,
                                            double tol, std::uint64_t seed);

/// POD self-consistency on a small random snapshot set: orthonormality,
/// Eckart-Young energy identity, monotone reproduction error.
std::vector<CheckResult> pod_oracle_checks(std::uint64_t seed);

/// Reduced divergence inf-sup safeguard and reduced-saddle solvability at
/// the parameter-box corners and the test parameter.
std::vector<CheckResult> infsup_checks(const Workspace& ws, const rom::ReducedBasis& basis);

/// Steady Poiseuille on the rectangle: nodal match with the analytic
/// profile, and discrete divergence of the computed state.
std::vector<CheckResult> poiseuille_checks(double h);

// Command entry points; return process exit codes (0 ok, 1 config/usage
// error, 2 solver failure, 3 validation failure).
int cmd_offline(const RunConfig& config);
int cmd_online(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_validate(const RunConfig& config);

}  // namespace nsdd::cli
