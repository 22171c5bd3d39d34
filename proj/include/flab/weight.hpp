#pragma once

// Admissible weight functions rho: E -> (0, inf).  Coercive weights supply a
// box B(R) containing every sublevel set {rho <= R}; that is what makes the
// sublevel sets compact and grid searches meaningful.

#include "flab/common.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace flab {

struct Box {
    Vec lo, hi;
    bool contains(const Vec& x) const {
        for (int i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }
};

struct WeightFunction {
    int dim = 1;
    ScalarFn eval;                         // rho(x), strictly positive
    ScalarFn log_eval;                     // optional: log rho(x) for huge weights
    double inf_rho = 1.0;                  // inf over E, must be > 0
    bool coercive = true;                  // sublevel sets bounded
    std::function<Box(double)> box_for;    // B(R) with {rho <= R} inside, if coercive
    bool non_coercive_product_warning = false;

    double operator()(const Vec& x) const { return eval(x); }
    double log_rho(const Vec& x) const {
        return log_eval ? log_eval(x) : std::log(eval(x));
    }
};

// rho(x) = 1 + |x|^2
inline WeightFunction quadratic_weight(int dim = 1) {
    WeightFunction w;
    w.dim = dim;
    w.eval = [](const Vec& x) { return 1.0 + x.squaredNorm(); };
    w.inf_rho = 1.0;
    w.coercive = true;
    w.box_for = [dim](double R) {
        double r = R > 1.0 ? std::sqrt(R - 1.0) : 0.0;
        Box b;
        b.lo = Vec::Constant(dim, -r);
        b.hi = Vec::Constant(dim, r);
        return b;
    };
    return w;
}

// rho(x) = exp(|x|^2); eval overflows quickly, callers should prefer log_rho
inline WeightFunction exp_quadratic_weight(int dim = 1) {
    WeightFunction w;
    w.dim = dim;
    w.eval = [](const Vec& x) { return std::exp(x.squaredNorm()); };
    w.log_eval = [](const Vec& x) { return x.squaredNorm(); };
    w.inf_rho = 1.0;
    w.coercive = true;
    w.box_for = [dim](double R) {
        double r = R > 1.0 ? std::sqrt(std::log(R)) : 0.0;
        Box b;
        b.lo = Vec::Constant(dim, -r);
        b.hi = Vec::Constant(dim, r);
        return b;
    };
    return w;
}

inline WeightFunction constant_weight(int dim = 1, double c = 1.0) {
    if (!(c > 0.0)) throw InvalidParameter("constant weight must be positive");
    WeightFunction w;
    w.dim = dim;
    w.eval = [c](const Vec&) { return c; };
    w.inf_rho = c;
    w.coercive = false;  // sublevel sets are everything or nothing
    return w;
}

// rho(x1,...,xn) = rho_1(x1) ... rho_n(xn) on the product space.
// Coercivity of the product needs every factor bounded below by 1; factors
// with inf_rho < 1 only earn a warning flag, the product is still a weight.
inline WeightFunction product_weight(const std::vector<WeightFunction>& parts) {
    if (parts.empty()) throw InvalidParameter("product of zero weights");
    int dim = 0;
    bool all_coercive = true, warn = false, have_log = true;
    double inf = 1.0;
    for (const auto& p : parts) {
        dim += p.dim;
        all_coercive = all_coercive && p.coercive && p.box_for != nullptr;
        if (p.inf_rho < 1.0) warn = true;
        if (!p.log_eval) have_log = false;
        inf *= p.inf_rho;
    }
    auto split_apply = [parts](const Vec& x, bool log_space) {
        double acc = log_space ? 0.0 : 1.0;
        int off = 0;
        for (const auto& p : parts) {
            Vec xi = x.segment(off, p.dim);
            if (log_space)
                acc += p.log_eval ? p.log_eval(xi) : std::log(p.eval(xi));
            else
                acc *= p.eval(xi);
            off += p.dim;
        }
        return acc;
    };
    WeightFunction w;
    w.dim = dim;
    w.eval = [split_apply](const Vec& x) { return split_apply(x, false); };
    if (have_log) w.log_eval = [split_apply](const Vec& x) { return split_apply(x, true); };
    w.inf_rho = inf;
    w.coercive = all_coercive && !warn;
    w.non_coercive_product_warning = warn;
    if (w.coercive) {
        // with every rho_i >= 1: {prod rho_i <= R} is inside prod {rho_i <= R}
        w.box_for = [parts, dim](double R) {
            Box b;
            b.lo = Vec(dim);
            b.hi = Vec(dim);
            int off = 0;
            for (const auto& p : parts) {
                Box bi = p.box_for(R);
                b.lo.segment(off, p.dim) = bi.lo;
                b.hi.segment(off, p.dim) = bi.hi;
                off += p.dim;
            }
            return b;
        };
    }
    return w;
}

}  // namespace flab
