#pragma once

// Transport semigroups P(t)f = f(psi_t(.)) for a semiflow psi on E, with the
// semiflow validation battery (identity, cocycle, continuity, weight growth)
// and the algebra-morphism probes that separate transport from diffusion.

#include "flab/common.hpp"
#include "flab/grid.hpp"
#include "flab/norms.hpp"
#include "flab/semigroup.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace flab {

struct Semiflow {
    int dim = 1;
    std::function<Vec(double, const Vec&)> psi;
    bool closed_form = true;
    double step = 0.0;  // RK4 step; t is snapped to round(t/step) whole steps
    std::string name;

    Vec operator()(double t, const Vec& x) const { return psi(t, x); }
};

inline Semiflow flow_from_map(int dim, std::function<Vec(double, const Vec&)> psi,
                              std::string name = "closed-form") {
    Semiflow f;
    f.dim = dim;
    f.psi = std::move(psi);
    f.closed_form = true;
    f.name = std::move(name);
    return f;
}

// Fixed-step RK4 integration of x' = field(x).  Snapping t to whole steps
// makes the discrete flow compose exactly: for times that are multiples of
// the step, psi_t(psi_s(x)) and psi_{t+s}(x) run the same step sequence.
inline Semiflow flow_from_field(int dim, VectorFn field, double step,
                                std::string name = "rk4") {
    if (!(step > 0.0)) throw InvalidParameter("RK4 step must be positive");
    Semiflow f;
    f.dim = dim;
    f.closed_form = false;
    f.step = step;
    f.name = std::move(name);
    f.psi = [field, step](double t, const Vec& x0) {
        if (t < 0.0) throw InvalidParameter("semiflow needs t >= 0");
        long long n = std::llround(t / step);
        Vec x = x0;
        for (long long k = 0; k < n; ++k) {
            Vec k1 = field(x);
            Vec k2 = field(x + 0.5 * step * k1);
            Vec k3 = field(x + 0.5 * step * k2);
            Vec k4 = field(x + step * k3);
            x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return x;
    };
    return f;
}

struct FlowGrowthPoint {
    double t = 0.0;
    double C_t = 1.0;  // max over grid of rho(psi_t(x)) / rho(x)
    Vec argmax;
};

struct SemiflowValidation {
    double identity_residual = 0.0;                     // (i)
    double cocycle_residual = 0.0;                      // (ii)
    std::vector<std::pair<double, double>> continuity;  // (iii): (t, max |psi_t(x)-x|)
    double lipschitz_estimate = 0.0;                    // (iv): near-pair displacement ratio
    std::vector<FlowGrowthPoint> growth;                // (v)
    double growth_sup_small_t = 1.0;                    // (vi): sup of C_t for t < delta
    double delta = 0.0, C = 0.0;
    bool verdict_identity = false, verdict_cocycle = false, verdict_continuity = false,
         verdict_growth_finite = false, verdict_growth_bounded = false;
    double tol = 0.0;
    bool all_pass() const {
        return verdict_identity && verdict_cocycle && verdict_continuity &&
               verdict_growth_finite && verdict_growth_bounded;
    }
};

inline double cocycle_tolerance(const Semiflow& flow, double base_tol, double scale) {
    if (flow.closed_form) return base_tol;
    double h4 = std::pow(flow.step, 4);
    return std::max(base_tol, 10.0 * h4 * std::max(1.0, scale));
}

inline SemiflowValidation validate_semiflow(const Semiflow& flow, const WeightFunction& w,
                                            const SampleGrid& grid,
                                            const std::vector<double>& times,
                                            double delta = 0.1,
                                            std::optional<double> C = std::nullopt,
                                            double tol = 1e-8) {
    if (grid.empty()) throw EmptyGrid("validate_semiflow over empty grid");
    if (times.empty()) throw InvalidParameter("validate_semiflow needs times");
    std::vector<double> ts = times;
    std::sort(ts.begin(), ts.end());

    SemiflowValidation rep;
    rep.tol = tol;
    rep.delta = delta;
    double traj_scale = 1.0;

    for (const auto& x : grid.points) {
        rep.identity_residual = std::max(
            rep.identity_residual, (flow.psi(0.0, x) - x).cwiseAbs().maxCoeff());
        traj_scale = std::max(traj_scale, x.cwiseAbs().maxCoeff());
    }

    for (std::size_t i = 0; i < ts.size(); ++i)
        for (std::size_t j = i; j < ts.size(); ++j)
            for (const auto& x : grid.points) {
                Vec a = flow.psi(ts[j], flow.psi(ts[i], x));
                Vec b = flow.psi(ts[i] + ts[j], x);
                traj_scale = std::max(traj_scale, b.cwiseAbs().maxCoeff());
                rep.cocycle_residual =
                    std::max(rep.cocycle_residual, (a - b).cwiseAbs().maxCoeff());
            }

    for (double t : ts) {
        double r = 0.0;
        for (const auto& x : grid.points)
            r = std::max(r, (flow.psi(t, x) - x).cwiseAbs().maxCoeff());
        rep.continuity.emplace_back(t, r);
    }

    // displacement ratio over nearby grid pairs; a crude modulus of continuity
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i + 1; j < grid.size(); ++j) {
            double dx = (grid.points[i] - grid.points[j]).cwiseAbs().maxCoeff();
            if (dx == 0.0 || dx > 0.5) continue;
            for (double t : ts) {
                double dpsi = (flow.psi(t, grid.points[i]) - flow.psi(t, grid.points[j]))
                                  .cwiseAbs()
                                  .maxCoeff();
                rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, dpsi / dx);
            }
        }

    bool growth_finite = true;
    for (double t : ts) {
        FlowGrowthPoint gp;
        gp.t = t;
        gp.argmax = grid.points.front();
        gp.C_t = 0.0;
        for (const auto& x : grid.points) {
            double num = w.eval(flow.psi(t, x));
            if (!std::isfinite(num)) {
                growth_finite = false;
                num = std::numeric_limits<double>::infinity();
            }
            double ratio = num / w.eval(x);
            if (ratio > gp.C_t) {
                gp.C_t = ratio;
                gp.argmax = x;
            }
        }
        rep.growth.push_back(gp);
        if (t < delta) rep.growth_sup_small_t = std::max(rep.growth_sup_small_t, gp.C_t);
    }

    double max_profile = 1.0;
    for (const auto& gp : rep.growth)
        if (std::isfinite(gp.C_t)) max_profile = std::max(max_profile, gp.C_t);
    rep.C = C.value_or(2.0 * max_profile);

    double ctol = cocycle_tolerance(flow, tol, traj_scale);
    rep.verdict_identity = rep.identity_residual <= tol;
    rep.verdict_cocycle = rep.cocycle_residual <= ctol;
    // (iii): displacement at the smallest time should be of order t_min, with
    // the rate self-calibrated from the largest time; catches jumps at 0
    double rate = 1.0 + 10.0 * rep.continuity.back().second / ts.back();
    rep.verdict_continuity = rep.continuity.front().second <= std::max(tol, rate * ts.front());
    rep.verdict_growth_finite = growth_finite;
    rep.verdict_growth_bounded = rep.growth_sup_small_t <= rep.C;
    return rep;
}

inline SemigroupOperator transport_semigroup(const Semiflow& flow, const WeightFunction& w,
                                             std::optional<GrowthBound> growth = {}) {
    if (flow.dim != w.dim) throw DimensionMismatch("flow/weight dimension mismatch");
    SemigroupOperator S;
    S.weight = w;
    auto psi = flow.psi;
    S.apply = [psi](double t, const ScalarFn& f, const Vec& x) { return f(psi(t, x)); };
    S.apply_cheap = S.apply;
    // P(t)rho = rho(psi_t(.)): exact for composition operators
    S.weight_action = [psi, w](double t, const Vec& x) { return w.eval(psi(t, x)); };
    if (w.log_eval) {
        auto lw = w.log_eval;
        S.log_weight_action = [psi, lw](double t, const Vec& x) { return lw(psi(t, x)); };
    }
    S.growth = growth;
    S.name = "transport:" + flow.name;
    return S;
}

// phi: R^n -> R with gradient, for morphism and derivation probes
struct SmoothMap {
    int arity = 1;
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> grad;
};

struct MorphismReport {
    double residual = 0.0;        // max |P(t)(phi(f)) - phi(P(t)f)| over grid
    double max_combined_se = 0.0; // stochastic backends only
    Vec argmax;
};

inline MorphismReport check_homomorphism(const SemigroupOperator& S, const SmoothMap& phi,
                                         const std::vector<ScalarFn>& fs,
                                         const SampleGrid& grid, double t) {
    if (static_cast<int>(fs.size()) != phi.arity)
        throw DimensionMismatch("arity mismatch between phi and fs");
    if (grid.empty()) throw EmptyGrid("check_homomorphism over empty grid");
    MorphismReport rep;
    rep.argmax = grid.points.front();
    ScalarFn comp = [&phi, &fs](const Vec& x) {
        Vec u(phi.arity);
        for (int i = 0; i < phi.arity; ++i) u[i] = fs[static_cast<std::size_t>(i)](x);
        return phi.eval(u);
    };
    for (const auto& x : grid.points) {
        double lhs = S.apply(t, comp, x);
        Vec u(phi.arity);
        for (int i = 0; i < phi.arity; ++i)
            u[i] = S.apply(t, fs[static_cast<std::size_t>(i)], x);
        double r = std::abs(lhs - phi.eval(u));
        if (r > rep.residual) {
            rep.residual = r;
            rep.argmax = x;
        }
        if (S.std_error) {
            double se = S.std_error(t, comp, x);
            Vec g = phi.grad(u);
            for (int i = 0; i < phi.arity; ++i)
                se += std::abs(g[i]) * S.std_error(t, fs[static_cast<std::size_t>(i)], x);
            rep.max_combined_se = std::max(rep.max_combined_se, se);
        }
    }
    return rep;
}

// difference-quotient generator: A_h g = (P(h)g - g)/h; the residual measures
// how far A_h is from acting as a first-order derivation through phi
inline double derivation_residual(const SemigroupOperator& S, const SmoothMap& phi,
                                  const std::vector<ScalarFn>& fs, const SampleGrid& grid,
                                  double h) {
    if (!(h > 0.0)) throw InvalidParameter("derivation step must be positive");
    if (static_cast<int>(fs.size()) != phi.arity)
        throw DimensionMismatch("arity mismatch between phi and fs");
    ScalarFn comp = [&phi, &fs](const Vec& x) {
        Vec u(phi.arity);
        for (int i = 0; i < phi.arity; ++i) u[i] = fs[static_cast<std::size_t>(i)](x);
        return phi.eval(u);
    };
    double worst = 0.0;
    for (const auto& x : grid.points) {
        double lhs = (S.apply(h, comp, x) - comp(x)) / h;
        Vec u(phi.arity);
        for (int i = 0; i < phi.arity; ++i) u[i] = fs[static_cast<std::size_t>(i)](x);
        Vec g = phi.grad(u);
        double rhs = 0.0;
        for (int i = 0; i < phi.arity; ++i) {
            const auto& fi = fs[static_cast<std::size_t>(i)];
            rhs += g[i] * (S.apply(h, fi, x) - fi(x)) / h;
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace flab
