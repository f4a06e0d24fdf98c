#include "nsdd/optimizer.hpp"

#include <cmath>
#include <deque>

namespace nsdd::coupling {

namespace {

using linalg::Vector;

struct Pair {
    Vector s, y;
    double rho = 0.0;
};

Vector apply_h0(const Preconditioner& h0, const Vector& q) { return h0 ? h0(q) : q; }

struct LinePoint {
    double alpha = 0.0;
    double J = 0.0;
    double slope = 0.0;  // directional derivative along the search direction
    Vector x, gradient;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, const linalg::Vector& x0,
                           const LbfgsSettings& st, const Preconditioner& h0) {
    LbfgsResult res;
    res.x = x0;
    ObjectiveValue v = f(res.x);
    res.evaluations = 1;
    res.J = v.J;
    res.gradient = v.gradient;
    res.J_history.push_back(v.J);

    LinePoint best{0.0, v.J, 0.0, res.x, res.gradient};
    std::deque<Pair> pairs;

    auto finish = [&](bool stagnated) {
        res.stagnated = stagnated;
        if (stagnated && best.J < res.J) {
            res.x = best.x;
            res.J = best.J;
            res.gradient = best.gradient;
        }
        return res;
    };

    for (int iter = 0; iter < st.max_iterations; ++iter) {
        if (res.gradient.lpNorm<Eigen::Infinity>() <= st.gtol) return finish(false);

        // Two-loop recursion for d = -H grad.
        Vector q = res.gradient;
        std::vector<double> a(pairs.size());
        for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
            a[i] = pairs[i].rho * pairs[i].s.dot(q);
            q -= a[i] * pairs[i].y;
        }
        double gamma = 1.0;
        if (!pairs.empty()) {
            const Pair& last = pairs.back();
            const double denom = last.y.dot(apply_h0(h0, last.y));
            if (denom > 0.0) gamma = last.s.dot(last.y) / denom;
        }
        Vector r = gamma * apply_h0(h0, q);
        for (size_t i = 0; i < pairs.size(); ++i) {
            const double b = pairs[i].rho * pairs[i].y.dot(r);
            r += (a[i] - b) * pairs[i].s;
        }
        Vector d = -r;
        double slope0 = res.gradient.dot(d);
        if (!(slope0 < 0.0)) {
            pairs.clear();
            d = -apply_h0(h0, res.gradient);
            slope0 = res.gradient.dot(d);
            if (!(slope0 < 0.0)) return finish(false);  // gradient numerically zero
        }

        // Strong-Wolfe line search (bracket, then bisection zoom).
        const double J0 = res.J;
        auto probe = [&](double alpha) {
            LinePoint p;
            p.alpha = alpha;
            p.x = res.x + alpha * d;
            ObjectiveValue pv = f(p.x);
            ++res.evaluations;
            p.J = pv.J;
            p.slope = pv.gradient.dot(d);
            p.gradient = std::move(pv.gradient);
            if (p.J < best.J) best = p;
            return p;
        };
        auto wolfe_ok = [&](const LinePoint& p) {
            return p.J <= J0 + st.c1 * p.alpha * slope0 &&
                   std::abs(p.slope) <= -st.c2 * slope0;
        };

        LinePoint accepted;
        bool have_accepted = false;
        LinePoint lo, hi;
        bool bracketed = false;
        LinePoint prev{0.0, J0, slope0, res.x, res.gradient};
        double alpha = 1.0;
        int trials = 0;
        while (trials < st.max_line_search) {
            LinePoint p = probe(alpha);
            ++trials;
            if (p.J > J0 + st.c1 * alpha * slope0 || (trials > 1 && p.J >= prev.J)) {
                lo = prev;
                hi = p;
                bracketed = true;
                break;
            }
            if (std::abs(p.slope) <= -st.c2 * slope0) {
                accepted = std::move(p);
                have_accepted = true;
                break;
            }
            if (p.slope >= 0.0) {
                lo = p;
                hi = prev;
                bracketed = true;
                break;
            }
            prev = p;
            alpha *= 2.0;
        }
        if (bracketed) {
            while (trials < st.max_line_search) {
                const double amid = 0.5 * (lo.alpha + hi.alpha);
                LinePoint p = probe(amid);
                ++trials;
                if (wolfe_ok(p)) {
                    accepted = std::move(p);
                    have_accepted = true;
                    break;
                }
                if (p.J > J0 + st.c1 * amid * slope0 || p.J >= lo.J) {
                    hi = p;
                } else {
                    if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                    lo = p;
                }
            }
            // A bisection iterate that at least decreases J is still usable
            // when the curvature condition proved unreachable.
            if (!have_accepted && lo.alpha > 0.0 && lo.J < J0) {
                accepted = std::move(lo);
                have_accepted = true;
            }
        }
        if (!have_accepted) return finish(true);

        Vector s = accepted.x - res.x;
        Vector y = accepted.gradient - res.gradient;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
            if (static_cast<int>(pairs.size()) > st.memory) pairs.pop_front();
        }

        const double dJ = res.J - accepted.J;
        const double j_scale = std::max(std::abs(res.J), std::abs(accepted.J));
        res.x = std::move(accepted.x);
        res.J = accepted.J;
        res.gradient = std::move(accepted.gradient);
        res.iterations = iter + 1;
        res.J_history.push_back(res.J);
        if (dJ <= st.ftol * j_scale) return finish(false);
    }
    return finish(false);
}

}  // namespace nsdd::coupling
