#pragma once

// Weighted polynomial approximation: least-squares fit on the sublevel set
// {rho <= R}, then a clamp to the observed sup of |f| there.  The clamp is
// the practical stand-in for the rescaling trick that makes truncated
// polynomials behave in the weighted norm far from the origin.

#include "flab/basis.hpp"
#include "flab/common.hpp"
#include "flab/norms.hpp"

#include <cmath>

namespace flab {

struct SwApproxResult {
    MonomialBasis basis;
    Vec coeffs;
    double clamp_bound = 0.0;
    double rho_norm_error = 0.0;
    std::size_t fit_points = 0;
    ScalarFn approximant;  // clamp(p(.))
};

inline SwApproxResult sw_approximate(const ScalarFn& f, const WeightFunction& w,
                                     int degree, double R, const SampleGrid& grid,
                                     double clamp_slack = 1e-6) {
    if (grid.empty()) throw EmptyGrid("sw_approximate over empty grid");
    if (degree < 0) throw InvalidParameter("negative degree");

    std::vector<const Vec*> fit;
    for (const auto& x : grid.points) {
        // small slack so boundary points (rho == R up to roundoff) stay in
        if (w.log_rho(x) <= std::log(R) + 1e-12) fit.push_back(&x);
    }
    if (fit.empty()) throw IllConditionedFit("no grid points inside {rho <= R}");

    MonomialBasis basis = monomial_basis(w.dim, degree);
    const int cols = static_cast<int>(basis.size());
    const int rows = static_cast<int>(fit.size());
    if (rows < cols) throw IllConditionedFit("fewer fit points than coefficients");

    Mat V(rows, cols);
    Vec y(rows);
    double fmax = 0.0;
    for (int r = 0; r < rows; ++r) {
        const Vec& x = *fit[r];
        double fx = f(x);
        if (!std::isfinite(fx)) throw NonFiniteFunctionValue("f not finite on fit region");
        y[r] = fx;
        fmax = std::max(fmax, std::abs(fx));
        for (int c = 0; c < cols; ++c)
            V(r, c) = basis.eval_monomial(static_cast<std::size_t>(c), x);
    }

    // equilibrate columns before QR; high-degree monomials dwarf the rest
    Vec scale(cols);
    for (int c = 0; c < cols; ++c) {
        double m = V.col(c).cwiseAbs().maxCoeff();
        scale[c] = m > 0.0 ? m : 1.0;
        V.col(c) /= scale[c];
    }
    Eigen::ColPivHouseholderQR<Mat> qr(V);
    qr.setThreshold(1e-12);
    if (qr.rank() < cols) throw IllConditionedFit("rank-deficient design matrix");
    Vec coeffs = qr.solve(y).cwiseQuotient(scale);

    SwApproxResult res;
    res.basis = basis;
    res.coeffs = coeffs;
    res.clamp_bound = fmax + clamp_slack;
    res.fit_points = fit.size();
    const double bound = res.clamp_bound;
    MonomialBasis basis_copy = basis;
    res.approximant = [basis_copy, coeffs, bound](const Vec& x) {
        double v = basis_copy.eval(coeffs, x);
        return std::min(std::max(v, -bound), bound);
    };
    ScalarFn residual = [&f, &res](const Vec& x) { return f(x) - res.approximant(x); };
    res.rho_norm_error = weighted_norm(residual, w, grid).value;
    return res;
}

}  // namespace flab
