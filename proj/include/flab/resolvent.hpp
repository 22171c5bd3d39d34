#pragma once

// Laplace-transform resolvent R(beta)f = integral of exp(-beta s) P(s)f ds,
// by Gauss-Laguerre (default) or truncated trapezoid quadrature, plus the
// classical approximation check that beta R(beta)f converges to f.

#include "flab/common.hpp"
#include "flab/norms.hpp"
#include "flab/semigroup.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace flab {

enum class QuadratureRule { GaussLaguerre, Trapezoid };

struct ResolventQuadrature {
    QuadratureRule rule = QuadratureRule::GaussLaguerre;
    int n_nodes = 64;
    double t_max = 40.0;  // trapezoid truncation horizon
    double beta = 1.0;
};

struct ResolventValue {
    double value = 0.0;
    // tail factor M exp((omega-beta) T)/(beta-omega); multiplies ||f||_rho rho(x)
    double tail_bound = 0.0;
    double covered_horizon = 0.0;
};

namespace detail {

// Golub-Welsch nodes/weights for weight exp(-u) on (0, inf)
inline void gauss_laguerre(int n, Vec& nodes, Vec& weights) {
    if (n < 1) throw InvalidParameter("need at least one quadrature node");
    Mat J = Mat::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        J(k, k) = 2.0 * k + 1.0;
        if (k + 1 < n) J(k, k + 1) = J(k + 1, k) = static_cast<double>(k + 1);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    if (es.info() != Eigen::Success) throw QuadratureUnstable("eigensolve failed");
    nodes = es.eigenvalues();
    weights = Vec(n);
    for (int k = 0; k < n; ++k) {
        double v0 = es.eigenvectors()(0, k);
        weights[k] = v0 * v0;  // total mass of exp(-u) du is 1
    }
}

}  // namespace detail

inline ResolventValue resolvent_apply(const SemigroupOperator& S,
                                      const ResolventQuadrature& q, const ScalarFn& f,
                                      const Vec& x) {
    GrowthBound g = S.growth.value_or(GrowthBound{1.0, 0.0});
    if (!(q.beta > g.omega))
        throw BetaBelowGrowthBound("beta must exceed the growth rate omega");

    ResolventValue out;
    if (q.rule == QuadratureRule::GaussLaguerre) {
        Vec u, wq;
        detail::gauss_laguerre(q.n_nodes, u, wq);
        double acc = 0.0;
        for (int k = 0; k < q.n_nodes; ++k)
            acc += wq[k] * S.apply(u[k] / q.beta, f, x);
        out.value = acc / q.beta;
        out.covered_horizon = u[q.n_nodes - 1] / q.beta;
    } else {
        if (q.n_nodes < 2 || !(q.t_max > 0.0))
            throw InvalidParameter("trapezoid rule needs n_nodes >= 2 and t_max > 0");
        double h = q.t_max / (q.n_nodes - 1);
        double acc = 0.0;
        for (int k = 0; k < q.n_nodes; ++k) {
            double s = k * h;
            double term = std::exp(-q.beta * s) * S.apply(s, f, x);
            acc += (k == 0 || k == q.n_nodes - 1) ? 0.5 * term : term;
        }
        out.value = acc * h;
        out.covered_horizon = q.t_max;
    }
    out.tail_bound =
        g.M * std::exp((g.omega - q.beta) * out.covered_horizon) / (q.beta - g.omega);
    if (!std::isfinite(out.value)) throw QuadratureUnstable("resolvent value not finite");
    return out;
}

struct YosidaPoint {
    double beta = 0.0;
    double error = 0.0;      // || beta R(beta) f - f ||_rho on the grid
    double tail_bound = 0.0;
};

inline std::vector<YosidaPoint> yosida_check(const SemigroupOperator& S, const ScalarFn& f,
                                             const SampleGrid& grid,
                                             const std::vector<double>& betas,
                                             ResolventQuadrature q = {}) {
    std::vector<YosidaPoint> out;
    out.reserve(betas.size());
    for (double beta : betas) {
        q.beta = beta;
        double tail = 0.0;
        ScalarFn resid = [&](const Vec& x) {
            ResolventValue rv = resolvent_apply(S, q, f, x);
            tail = std::max(tail, rv.tail_bound);
            return beta * rv.value - f(x);
        };
        YosidaPoint p;
        p.beta = beta;
        p.error = weighted_norm(resid, S.weight, grid).value;
        p.tail_bound = tail;
        out.push_back(p);
    }
    return out;
}

}  // namespace flab
