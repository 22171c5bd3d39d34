#pragma once

// Moment calculus for polynomial-preserving diffusions: the action of the
// generator on monomials of total degree <= m is a finite matrix, so moments
// evolve by a matrix exponential and the semigroup is exact up to expm error.

#include "flab/basis.hpp"
#include "flab/common.hpp"
#include "flab/diffusion_spec.hpp"
#include "flab/expm.hpp"
#include "flab/grid.hpp"
#include "flab/semigroup.hpp"

#include <cmath>
#include <memory>

namespace flab {

struct GeneratorMatrix {
    MonomialBasis basis;
    // column j holds the coefficients of A(basis_j) in the basis, so
    // coefficient vectors evolve by c(t) = expm(t * entries) c(0)
    Mat entries;
};

inline GeneratorMatrix generator_from_diffusion(const DiffusionSpec& spec, int max_degree) {
    if (!spec.poly)
        throw NotPolynomialCoefficients(spec.name + " carries no coefficient data");
    const auto& pc = *spec.poly;
    if (static_cast<int>(pc.drift.size()) != spec.dim ||
        static_cast<int>(pc.sigma_sq.size()) != spec.dim)
        throw DimensionMismatch("coefficient arrays do not match dim");
    for (const auto& mu_i : pc.drift)
        if (mu_i.degree() > 1)
            throw NotPolynomialCoefficients("drift degree exceeds 1");
    for (const auto& row : pc.sigma_sq)
        for (const auto& q : row)
            if (q.degree() > 2)
                throw NotPolynomialCoefficients("sigma sigma^T degree exceeds 2");

    GeneratorMatrix gen;
    gen.basis = monomial_basis(spec.dim, max_degree);
    const int n = static_cast<int>(gen.basis.size());
    gen.entries = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        Poly m = poly_from_coefficients(gen.basis, Vec::Unit(n, j));
        Poly img;
        img.dim = spec.dim;
        for (int i = 0; i < spec.dim; ++i) {
            img = img + pc.drift[static_cast<std::size_t>(i)] * m.derivative(i);
            for (int k = 0; k < spec.dim; ++k)
                img = img + pc.sigma_sq[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                                m.derivative(i).derivative(k) * 0.5;
        }
        gen.entries.col(j) = img.coefficients(gen.basis);
    }
    return gen;
}

// E_x[p(X_t)] for p given by basis coefficients
inline double moment_apply(const GeneratorMatrix& gen, double t, const Vec& coeffs,
                           const Vec& x) {
    if (coeffs.size() != gen.entries.cols())
        throw DimensionMismatch("coefficient vector does not match basis");
    Vec ct = t == 0.0 ? coeffs : Vec(expm(gen.entries, t) * coeffs);
    return gen.basis.eval(ct, x);
}

namespace detail {

// Chebyshev points of the first kind on [-1, 1], tensorized; sets of
// different per-axis order interleave and never share a point
inline std::vector<Vec> chebyshev_tensor(int dim, int per_axis) {
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(per_axis);
    std::vector<Vec> pts;
    pts.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        Vec p(dim);
        for (int d = 0; d < dim; ++d) {
            p[d] = per_axis == 1
                       ? 0.0
                       : std::cos(M_PI * (2.0 * idx[static_cast<std::size_t>(d)] + 1.0) /
                                  (2.0 * per_axis));
        }
        pts.push_back(p);
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] < per_axis) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
    }
    return pts;
}

// interpolation bridge: recover basis coefficients of a polynomial function
// from its values on a fixed Chebyshev tensor grid (exact up to roundoff for
// polynomials of total degree <= m)
struct CoefficientResolver {
    MonomialBasis basis;
    std::vector<Vec> nodes;
    Eigen::ColPivHouseholderQR<Mat> qr;

    explicit CoefficientResolver(const MonomialBasis& b) : basis(b) {
        nodes = chebyshev_tensor(basis.dim, basis.max_degree + 1);
        Mat V(static_cast<int>(nodes.size()), static_cast<int>(basis.size()));
        for (int r = 0; r < V.rows(); ++r)
            for (int c = 0; c < V.cols(); ++c)
                V(r, c) = basis.eval_monomial(static_cast<std::size_t>(c),
                                              nodes[static_cast<std::size_t>(r)]);
        qr.compute(V);
    }

    Vec resolve(const ScalarFn& f) const {
        Vec y(static_cast<int>(nodes.size()));
        for (int r = 0; r < y.size(); ++r) {
            y[r] = f(nodes[static_cast<std::size_t>(r)]);
            if (!std::isfinite(y[r]))
                throw NonFiniteFunctionValue("function not finite at resolver node");
        }
        return qr.solve(y);
    }
};

}  // namespace detail

// Semigroup view of the moment calculus.  apply() resolves the test function
// onto the monomial basis by interpolation, so it is exact for polynomials of
// total degree <= m and silently projects anything else.
inline SemigroupOperator moment_semigroup(const GeneratorMatrix& gen,
                                          const WeightFunction& w,
                                          std::optional<GrowthBound> growth = {}) {
    if (w.dim != gen.basis.dim) throw DimensionMismatch("weight/basis dim mismatch");
    auto resolver = std::make_shared<detail::CoefficientResolver>(gen.basis);
    auto genp = std::make_shared<GeneratorMatrix>(gen);
    SemigroupOperator S;
    S.weight = w;
    S.apply = [resolver, genp](double t, const ScalarFn& f, const Vec& x) {
        return moment_apply(*genp, t, resolver->resolve(f), x);
    };
    S.apply_cheap = S.apply;
    // weight action only if rho itself sits in the basis; probe on a
    // Chebyshev set disjoint from the fit nodes, where the fit interpolates
    // any function exactly regardless of membership
    Vec rho_coeffs = resolver->resolve(w.eval);
    double resid = 0.0;
    for (const auto& nd : detail::chebyshev_tensor(gen.basis.dim, gen.basis.max_degree + 2))
        resid = std::max(resid,
                         std::abs(gen.basis.eval(rho_coeffs, nd) - w.eval(nd)) /
                             std::max(1.0, std::abs(w.eval(nd))));
    if (resid <= 1e-9) {
        S.weight_action = [resolver, genp, rho_coeffs](double t, const Vec& x) {
            return moment_apply(*genp, t, rho_coeffs, x);
        };
    }
    S.growth = growth;
    S.name = "moment";
    return S;
}

struct GrowthBoundReport {
    double op_norm = 0.0;      // induced 2-norm of the generator matrix
    double C = 1.0;
    double max_ratio = 0.0;    // max over grid/times of E_x[rho]/ (C e^{t|A|} rho(x))
    double max_slack = 0.0;    // max_ratio - 1 when positive
    bool verdict = false;
};

// E_x[rho(X_t)] <= C e^{t ||A||} rho(x) with rho resolved into the basis
inline GrowthBoundReport check_growth_bound(const GeneratorMatrix& gen,
                                            const WeightFunction& w,
                                            const SampleGrid& grid,
                                            const std::vector<double>& times,
                                            double C = 1.0) {
    if (grid.empty()) throw EmptyGrid("check_growth_bound over empty grid");
    detail::CoefficientResolver resolver(gen.basis);
    Vec rho_coeffs = resolver.resolve(w.eval);
    GrowthBoundReport rep;
    rep.C = C;
    rep.op_norm = operator_norm2(gen.entries);
    for (double t : times) {
        Vec ct = expm(gen.entries, t) * rho_coeffs;
        for (const auto& x : grid.points) {
            double lhs = gen.basis.eval(ct, x);
            double rhs = C * std::exp(t * rep.op_norm) * w.eval(x);
            rep.max_ratio = std::max(rep.max_ratio, lhs / rhs);
        }
    }
    rep.max_slack = std::max(0.0, rep.max_ratio - 1.0);
    rep.verdict = rep.max_ratio <= 1.0 + 1e-12;
    return rep;
}

struct AffineMomentGate {
    bool tails_finite = false;
    bool killing_linear_part_zero = false;
    bool admissible = false;
};

// gate for extending moment formulas to affine jump models: every listed
// outer-tail moment must be finite and the killing rate must be constant
inline AffineMomentGate affine_moment_condition_check(const std::vector<double>& tail_moments,
                                                      double killing_linear_part) {
    AffineMomentGate g;
    g.tails_finite = true;
    for (double m : tail_moments)
        if (!std::isfinite(m)) g.tails_finite = false;
    g.killing_linear_part_zero = killing_linear_part == 0.0;
    g.admissible = g.tails_finite && g.killing_linear_part_zero;
    return g;
}

}  // namespace flab
