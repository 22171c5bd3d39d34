#pragma once

// Weighted sup-norm ||f||_rho = sup |f(x)| / rho(x), evaluated on a grid.

#include "flab/common.hpp"
#include "flab/grid.hpp"
#include "flab/weight.hpp"

#include <cmath>

namespace flab {

struct RhoNormReport {
    double value = 0.0;
    Vec argmax;
    std::size_t grid_size = 0;
};

inline RhoNormReport weighted_norm(const ScalarFn& f, const WeightFunction& w,
                                   const SampleGrid& grid) {
    if (grid.empty()) throw EmptyGrid("weighted_norm over empty grid");
    RhoNormReport rep;
    rep.grid_size = grid.size();
    rep.argmax = grid.points.front();
    bool first = true;
    for (const auto& x : grid.points) {
        double fx = f(x);
        if (!std::isfinite(fx))
            throw NonFiniteFunctionValue("f not finite at a grid point");
        double ratio;
        if (w.log_eval) {
            // huge weights: |f|/rho via exp(log|f| - log rho)
            ratio = fx == 0.0 ? 0.0 : std::exp(std::log(std::abs(fx)) - w.log_eval(x));
        } else {
            ratio = std::abs(fx) / w.eval(x);
        }
        if (first || ratio > rep.value) {
            rep.value = ratio;
            rep.argmax = x;
            first = false;
        }
    }
    return rep;
}

inline double sup_norm(const ScalarFn& f, const SampleGrid& grid) {
    if (grid.empty()) throw EmptyGrid("sup_norm over empty grid");
    double m = 0.0;
    for (const auto& x : grid.points) {
        double fx = f(x);
        if (!std::isfinite(fx))
            throw NonFiniteFunctionValue("f not finite at a grid point");
        m = std::max(m, std::abs(fx));
    }
    return m;
}

}  // namespace flab
