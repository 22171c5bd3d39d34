#pragma once

// Named backends shared by the CLI and the test suites.  Growth bounds are
// certified by hand: with rho = 1 + x^2,
//   e^{-t}x contraction:  ||P(t)|| = 1                  -> (M, omega) = (1, 0)
//   shift x + t:          1+(x+t)^2 <= 2(1+t^2)(1+x^2) and 1+t^2 <= e^t
//                                                        -> (2, 1)
//   Brownian:             ||P(t)|| = 1 + t <= 2 e^{t/2}  -> (2, 1/2)
//   OU(kappa=1, s=1):     ||P(t)|| = 1 + (1-e^{-2t})/2 <= 3/2
//                                                        -> (3/2, 0)
//   gbm(mu, s):           ||P(t)|| <= e^{(2 mu + s^2) t} -> (1, max(0, 2 mu + s^2))

#include "flab/chain.hpp"
#include "flab/diffusion.hpp"
#include "flab/diffusion_spec.hpp"
#include "flab/extended.hpp"
#include "flab/polynomial.hpp"
#include "flab/semigroup.hpp"
#include "flab/transport.hpp"
#include "flab/weight.hpp"

#include <cmath>
#include <string>

namespace flab {

inline Semiflow contraction_flow() {
    return flow_from_map(
        1, [](double t, const Vec& x) { return Vec(std::exp(-t) * x); }, "contraction");
}

inline Semiflow shift_flow() {
    return flow_from_map(
        1, [](double t, const Vec& x) { return Vec(x.array() + t); }, "shift");
}

inline SemigroupOperator transport_contraction_semigroup() {
    return transport_semigroup(contraction_flow(), quadratic_weight(1),
                               GrowthBound{1.0, 0.0});
}

inline SemigroupOperator shift_semigroup() {
    return transport_semigroup(shift_flow(), quadratic_weight(1), GrowthBound{2.0, 1.0});
}

inline SemigroupOperator bm_moment_semigroup(int degree = 2) {
    GeneratorMatrix gen = generator_from_diffusion(brownian_spec(), degree);
    return moment_semigroup(gen, quadratic_weight(1), GrowthBound{2.0, 0.5});
}

inline SemigroupOperator ou_moment_semigroup(double kappa = 1.0, double s_vol = 1.0,
                                             int degree = 2) {
    GeneratorMatrix gen = generator_from_diffusion(ou_spec(kappa, s_vol), degree);
    // the certified constant is exact only for kappa = s = 1; stay safe otherwise
    GrowthBound g = (kappa == 1.0 && s_vol == 1.0) ? GrowthBound{1.5, 0.0}
                                                   : GrowthBound{2.0, s_vol * s_vol};
    return moment_semigroup(gen, quadratic_weight(1), g);
}

inline SemigroupOperator bm_mc_semigroup(const McBackendConfig& cfg) {
    return mc_semigroup(brownian_spec(), quadratic_weight(1), cfg, GrowthBound{2.0, 0.5});
}

inline SemigroupOperator ou_mc_semigroup(const McBackendConfig& cfg, double kappa = 1.0,
                                         double s_vol = 1.0) {
    GrowthBound g = (kappa == 1.0 && s_vol == 1.0) ? GrowthBound{1.5, 0.0}
                                                   : GrowthBound{2.0, s_vol * s_vol};
    return mc_semigroup(ou_spec(kappa, s_vol), quadratic_weight(1), cfg, g);
}

inline DiffusionSpec diffusion_preset(const std::string& name, double kappa = 1.0,
                                      double s_vol = 1.0, double mu = 0.05) {
    if (name == "bm") return brownian_spec();
    if (name == "ou") return ou_spec(kappa, s_vol);
    if (name == "gbm") return gbm_spec(mu, s_vol);
    throw InvalidParameter("unknown diffusion preset '" + name + "'");
}

// standard bounded-growth test functions on the quadratic-weight line
inline std::vector<ScalarFn> standard_test_functions() {
    return {
        [](const Vec& x) { return 1.0; },
        [](const Vec& x) { return x[0]; },
        [](const Vec& x) { return x[0] * x[0]; },
        [](const Vec& x) { return 1.0 + x[0] * x[0]; },
    };
}

// bounded test functions for integer-state backends
inline std::vector<ScalarFn> bounded_test_functions() {
    return {
        [](const Vec& x) { return x[0] == 0.0 ? 1.0 : 0.0; },
        [](const Vec& x) { return 1.0 / (1.0 + x[0]); },
        [](const Vec& x) { return std::sin(x[0]); },
    };
}

}  // namespace flab
