#pragma once

// The operator-family abstraction shared by every backend: P(t) acts on
// scalar functions over a weighted space.  Backends fill in `apply`; the
// optional hooks let checks stay generic (weight action for norm bounds,
// standard errors for Monte Carlo, a log-space scan for weights too large
// for doubles).

#include "flab/common.hpp"
#include "flab/grid.hpp"
#include "flab/norms.hpp"
#include "flab/weight.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace flab {

struct GrowthBound {
    double M = 1.0;
    double omega = 0.0;
};

struct SemigroupOperator {
    using ApplyFn = std::function<double(double, const ScalarFn&, const Vec&)>;

    ApplyFn apply;        // (P(t)f)(x); required
    ApplyFn apply_cheap;  // reduced-cost variant for nested composition; optional
    ApplyFn std_error;    // standard error of the apply estimate; optional
    std::function<double(double, const Vec&)> weight_action;      // (P(t)rho)(x)
    std::function<double(double, const Vec&)> log_weight_action;  // log of the above
    // global scan hook returning (log value, argument); backends whose norm
    // lower bound lives off any finite grid (the chain) install this
    std::function<std::pair<double, double>(double)> norm_scan;
    WeightFunction weight;
    std::optional<GrowthBound> growth;
    bool stochastic = false;
    std::string name;

    double operator()(double t, const ScalarFn& f, const Vec& x) const {
        return apply(t, f, x);
    }
    const ApplyFn& nested_apply() const { return apply_cheap ? apply_cheap : apply; }
};

inline SemigroupOperator identity_semigroup(const WeightFunction& w) {
    SemigroupOperator S;
    S.weight = w;
    S.apply = [](double, const ScalarFn& f, const Vec& x) { return f(x); };
    S.apply_cheap = S.apply;
    S.weight_action = [w](double, const Vec& x) { return w.eval(x); };
    if (w.log_eval)
        S.log_weight_action = [w](double, const Vec& x) { return w.log_eval(x); };
    S.growth = GrowthBound{1.0, 0.0};
    S.name = "identity";
    return S;
}

struct OperatorNormEstimate {
    double value = 1.0;      // +inf when the log value overflows a double
    double log_value = 0.0;
    Vec argmax;
    bool from_global_scan = false;
};

// Lower bound for ||P(t)|| in the weighted norm: the weight itself is the
// extremal test function, so max over the grid of P(t)rho / rho is both
// cheap and attained.  Exactly 1 at t = 0 since P(0) is the identity.
inline OperatorNormEstimate estimate_operator_norm(const SemigroupOperator& S, double t,
                                                   const SampleGrid& grid) {
    if (grid.empty()) throw EmptyGrid("operator norm over empty grid");
    OperatorNormEstimate est;
    est.argmax = grid.points.front();
    if (t == 0.0) {
        est.value = 1.0;
        est.log_value = 0.0;
        return est;
    }
    if (!S.weight_action && !S.log_weight_action)
        throw BackendCannotEvaluateWeight("backend lacks a weight action hook");
    bool first = true;
    for (const auto& x : grid.points) {
        double lr;
        if (S.log_weight_action) {
            lr = S.log_weight_action(t, x) - S.weight.log_rho(x);
        } else {
            double num = S.weight_action(t, x);
            if (!std::isfinite(num))
                throw NonFiniteFunctionValue("weight action not finite");
            lr = std::log(num) - S.weight.log_rho(x);
        }
        if (first || lr > est.log_value) {
            est.log_value = lr;
            est.argmax = x;
            first = false;
        }
    }
    if (S.norm_scan) {
        auto [lv, arg] = S.norm_scan(t);
        if (lv > est.log_value) {
            est.log_value = lv;
            est.argmax = vec1(arg);
            est.from_global_scan = true;
        }
    }
    est.value = std::exp(est.log_value);
    return est;
}

// (t, ||P(t)f - f||_rho) along a time ladder
inline std::vector<std::pair<double, double>> strong_continuity_profile(
    const SemigroupOperator& S, const ScalarFn& f, const SampleGrid& grid,
    const std::vector<double>& times) {
    std::vector<std::pair<double, double>> out;
    out.reserve(times.size());
    for (double t : times) {
        ScalarFn resid = [&](const Vec& x) { return S.apply(t, f, x) - f(x); };
        out.emplace_back(t, weighted_norm(resid, S.weight, grid).value);
    }
    return out;
}

// Conjugation onto the space of bounded functions: Q(t)g = P(t)(g rho)/rho.
// An isometry onto the sup-norm picture; Q(t)1 equals P(t)rho/rho.
inline SemigroupOperator to_ell_rho(const SemigroupOperator& S) {
    if (!S.weight.eval) throw BackendCannotEvaluateWeight("missing weight");
    SemigroupOperator Q;
    const WeightFunction rho = S.weight;
    auto conjugate = [rho](const SemigroupOperator::ApplyFn& base) {
        return [rho, base](double t, const ScalarFn& g, const Vec& x) {
            ScalarFn grho = [&g, &rho](const Vec& y) { return g(y) * rho.eval(y); };
            return base(t, grho, x) / rho.eval(x);
        };
    };
    Q.apply = conjugate(S.apply);
    if (S.apply_cheap) Q.apply_cheap = conjugate(S.apply_cheap);
    if (S.std_error) Q.std_error = conjugate(S.std_error);
    if (S.weight_action) {
        auto wa = S.weight_action;
        Q.weight_action = [rho, wa](double t, const Vec& x) {
            return wa(t, x) / rho.eval(x);
        };
    }
    Q.weight = constant_weight(S.weight.dim, 1.0);
    Q.growth = S.growth;
    Q.stochastic = S.stochastic;
    Q.name = S.name + "-ell-rho";
    return Q;
}

}  // namespace flab
