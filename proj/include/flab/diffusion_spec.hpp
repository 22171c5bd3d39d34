#pragma once

// Ito diffusion descriptions: callable drift/volatility for simulation plus,
// when the coefficients are polynomial (drift degree <= 1, sigma sigma^T
// degree <= 2), the exact coefficient view the moment machinery needs.

#include "flab/basis.hpp"
#include "flab/common.hpp"

#include <optional>
#include <string>

namespace flab {

struct PolyCoefficients {
    std::vector<Poly> drift;                  // entry i: mu_i, degree <= 1
    std::vector<std::vector<Poly>> sigma_sq;  // entry (i,j): (sigma sigma^T)_ij, degree <= 2
};

struct DiffusionSpec {
    int dim = 1;
    VectorFn drift;    // mu(x)
    MatrixFn sigma;    // volatility matrix, d x d
    // scalar fast path used by the simulator when dim == 1
    std::function<double(double)> drift1, sigma1;
    std::optional<PolyCoefficients> poly;
    std::string name;
};

namespace detail {

inline DiffusionSpec scalar_spec(std::function<double(double)> mu,
                                 std::function<double(double)> sig, std::string name) {
    DiffusionSpec s;
    s.dim = 1;
    s.drift1 = mu;
    s.sigma1 = sig;
    s.drift = [mu](const Vec& x) { return vec1(mu(x[0])); };
    s.sigma = [sig](const Vec& x) {
        Mat m(1, 1);
        m(0, 0) = sig(x[0]);
        return m;
    };
    s.name = std::move(name);
    return s;
}

}  // namespace detail

// dX = sigma dW
inline DiffusionSpec brownian_spec(double sigma = 1.0) {
    DiffusionSpec s = detail::scalar_spec([](double) { return 0.0; },
                                          [sigma](double) { return sigma; }, "bm");
    PolyCoefficients pc;
    pc.drift = {Poly::constant(1, 0.0)};
    pc.sigma_sq = {{Poly::constant(1, sigma * sigma)}};
    s.poly = pc;
    return s;
}

// dX = -kappa X dt + s dW
inline DiffusionSpec ou_spec(double kappa = 1.0, double s_vol = 1.0) {
    DiffusionSpec s = detail::scalar_spec([kappa](double x) { return -kappa * x; },
                                          [s_vol](double) { return s_vol; }, "ou");
    PolyCoefficients pc;
    pc.drift = {Poly::variable(1, 0, -kappa)};
    pc.sigma_sq = {{Poly::constant(1, s_vol * s_vol)}};
    s.poly = pc;
    return s;
}

// dX = mu X dt + s X dW
inline DiffusionSpec gbm_spec(double mu = 0.05, double s_vol = 0.2) {
    DiffusionSpec s = detail::scalar_spec([mu](double x) { return mu * x; },
                                          [s_vol](double x) { return s_vol * x; }, "gbm");
    PolyCoefficients pc;
    pc.drift = {Poly::variable(1, 0, mu)};
    Poly x2 = Poly::variable(1, 0) * Poly::variable(1, 0);
    pc.sigma_sq = {{x2 * (s_vol * s_vol)}};
    s.poly = pc;
    return s;
}

}  // namespace flab
