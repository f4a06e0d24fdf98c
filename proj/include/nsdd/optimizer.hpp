#pragma once

#include "nsdd/linalg.hpp"

#include <functional>
#include <vector>

namespace nsdd::coupling {

/// One objective evaluation: the functional value and its exact derivative
/// with respect to the control coefficients (the dual vector; directional
/// derivatives are plain dot products against it).
struct ObjectiveValue {
    double J = 0.0;
    linalg::Vector gradient;
};

using Objective = std::function<ObjectiveValue(const linalg::Vector&)>;
/// Optional inverse-Hessian seed H0 (e.g. the interface Riesz map for FEM
/// controls); identity when absent. Must be SPD.
using Preconditioner = std::function<linalg::Vector(const linalg::Vector&)>;

struct LbfgsSettings {
    int memory = 10;
    int max_iterations = 200;
    double gtol = 1e-8;   // sup-norm of the gradient
    double ftol = 1e-12;  // relative decrease: stop when dJ <= ftol * max(|J_new|, |J_old|)
    double c1 = 1e-4;     // Armijo constant
    double c2 = 0.9;      // curvature constant (strong Wolfe)
    int max_line_search = 20;
};

struct LbfgsResult {
    linalg::Vector x;
    double J = 0.0;
    linalg::Vector gradient;
    int iterations = 0;       // accepted quasi-Newton steps
    int evaluations = 0;      // objective calls
    bool stagnated = false;   // line search gave up; x is the best iterate seen
    std::vector<double> J_history;  // J at accepted iterates, non-increasing
};

/// Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.
/// Line-search failure is not an error: the best point seen is returned with
/// the stagnated flag set.
LbfgsResult lbfgs_minimize(const Objective& f, const linalg::Vector& x0,
                           const LbfgsSettings& settings = {},
                           const Preconditioner& h0 = nullptr);

}  // namespace nsdd::coupling
