#pragma once

// The five defining properties of a weighted-space operator family, turned
// into grid residuals: P1 identity at t=0, P2 composition law, P3 pointwise
// continuity at 0, P4 bounded operator norms near 0, P5 positivity.  All
// residuals are scaled by rho(x) so one tolerance works across weights.

#include "flab/common.hpp"
#include "flab/grid.hpp"
#include "flab/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace flab {

struct AxiomCheckConfig {
    std::vector<double> times;  // positive; smallest entry drives P3
    double tol = 1e-8;
    double p4_epsilon = 0.1;
    double p4_C = 10.0;
    std::size_t max_p2_pairs = 256;
};

struct AxiomReport {
    double p1_residual = 0.0;
    double p2_residual = 0.0;
    double p3_residual = 0.0;
    double p4_max = 1.0;
    double p5_violation = 0.0;
    std::vector<std::pair<double, double>> p3_trend;                  // (t, residual)
    std::vector<std::tuple<double, double, double>> p4_profile;       // (t, norm, log norm)
    bool verdict_p1 = false, verdict_p2 = false, verdict_p3 = false,
         verdict_p4 = false, verdict_p5 = false;
    double effective_tol = 0.0;  // tol + 3 * max standard error on stochastic backends
    double max_std_error = 0.0;
    bool all_pass() const {
        return verdict_p1 && verdict_p2 && verdict_p3 && verdict_p4 && verdict_p5;
    }
    bool verdict(int k) const {
        switch (k) {
            case 1: return verdict_p1;
            case 2: return verdict_p2;
            case 3: return verdict_p3;
            case 4: return verdict_p4;
            case 5: return verdict_p5;
        }
        throw InvalidParameter("axiom index out of range");
    }
};

namespace detail {

inline double rho_ratio(double value, const WeightFunction& w, const Vec& x) {
    if (!std::isfinite(value)) throw NonFiniteFunctionValue("backend value not finite");
    if (w.log_eval)
        return value == 0.0 ? 0.0 : std::exp(std::log(std::abs(value)) - w.log_eval(x));
    return std::abs(value) / w.eval(x);
}

}  // namespace detail

inline AxiomReport check_axioms(const SemigroupOperator& S,
                                const std::vector<ScalarFn>& fs,
                                const SampleGrid& grid,
                                const AxiomCheckConfig& cfg) {
    if (grid.empty()) throw EmptyGrid("check_axioms over empty grid");
    if (fs.empty()) throw InvalidParameter("check_axioms needs test functions");
    if (cfg.times.empty()) throw InvalidParameter("check_axioms needs a time ladder");
    for (double t : cfg.times)
        if (!(t > 0.0)) throw InvalidParameter("times must be positive");

    std::vector<double> times = cfg.times;
    std::sort(times.begin(), times.end());

    AxiomReport rep;
    const WeightFunction& w = S.weight;
    auto track_se = [&](double t, const ScalarFn& f, const Vec& x) {
        if (S.std_error)
            rep.max_std_error = std::max(
                rep.max_std_error, detail::rho_ratio(S.std_error(t, f, x), w, x));
    };

    // P1: P(0) = Id
    for (const auto& f : fs)
        for (const auto& x : grid.points) {
            rep.p1_residual = std::max(
                rep.p1_residual, detail::rho_ratio(S.apply(0.0, f, x) - f(x), w, x));
            track_se(0.0, f, x);
        }

    // P2: P(t+s) = P(t)P(s), over unordered time pairs (capped)
    std::size_t pair_budget = cfg.max_p2_pairs;
    for (std::size_t i = 0; i < times.size() && pair_budget > 0; ++i) {
        for (std::size_t j = i; j < times.size() && pair_budget > 0; ++j) {
            double s = times[i], t = times[j];
            --pair_budget;
            const auto& inner = S.nested_apply();
            for (const auto& f : fs) {
                ScalarFn Psf = [&](const Vec& y) { return inner(s, f, y); };
                for (const auto& x : grid.points) {
                    double direct = S.apply(t + s, f, x);
                    double composed = S.apply(t, Psf, x);
                    rep.p2_residual = std::max(
                        rep.p2_residual, detail::rho_ratio(direct - composed, w, x));
                    track_se(t + s, f, x);
                }
            }
        }
    }

    // P3: pointwise convergence as t drops to 0; verdict reads the smallest time
    for (double t : times) {
        double r = 0.0;
        for (const auto& f : fs)
            for (const auto& x : grid.points) {
                r = std::max(r, detail::rho_ratio(S.apply(t, f, x) - f(x), w, x));
                track_se(t, f, x);
            }
        rep.p3_trend.emplace_back(t, r);
    }
    rep.p3_residual = rep.p3_trend.front().second;

    // P4: norm profile over (0, epsilon]
    std::vector<double> p4_times;
    for (double t : times)
        if (t <= cfg.p4_epsilon) p4_times.push_back(t);
    if (p4_times.empty() || p4_times.back() < cfg.p4_epsilon)
        p4_times.push_back(cfg.p4_epsilon);
    rep.p4_max = 0.0;
    for (double t : p4_times) {
        auto est = estimate_operator_norm(S, t, grid);
        rep.p4_profile.emplace_back(t, est.value, est.log_value);
        rep.p4_max = std::max(rep.p4_max, est.value);
    }

    // P5: positivity on the nonnegative test functions
    for (const auto& f : fs) {
        bool nonneg = true;
        for (const auto& x : grid.points)
            if (f(x) < 0.0) {
                nonneg = false;
                break;
            }
        if (!nonneg) continue;
        for (double t : times)
            for (const auto& x : grid.points) {
                double v = S.apply(t, f, x);
                if (v < 0.0)
                    rep.p5_violation =
                        std::max(rep.p5_violation, detail::rho_ratio(v, w, x));
                track_se(t, f, x);
            }
    }

    rep.effective_tol = cfg.tol + 3.0 * rep.max_std_error;
    rep.verdict_p1 = rep.p1_residual <= rep.effective_tol;
    rep.verdict_p2 = rep.p2_residual <= rep.effective_tol;
    rep.verdict_p3 = rep.p3_residual <= rep.effective_tol;
    rep.verdict_p4 = rep.p4_max <= cfg.p4_C;
    rep.verdict_p5 = rep.p5_violation <= rep.effective_tol;
    return rep;
}

}  // namespace flab
