#pragma once

// The change-of-measure picture: divide the weight out of a quasi-contractive
// family to land on a contraction on bounded functions, realised on the
// diffusion side by a drift correction plus state-dependent killing, and the
// path-space identity tying expectations under the two measures together.

#include "flab/common.hpp"
#include "flab/diffusion.hpp"
#include "flab/diffusion_spec.hpp"
#include "flab/grid.hpp"
#include "flab/rng.hpp"
#include "flab/semigroup.hpp"

#include <cmath>
#include <optional>

namespace flab {

// Q(t)f = exp(-omega t) P(t)(f rho) / rho; contraction on bounded functions
// whenever P is quasi-contractive with rate omega and constant 1
inline SemigroupOperator q_semigroup(const SemigroupOperator& S, double omega) {
    SemigroupOperator Q = to_ell_rho(S);
    auto discount = [omega](SemigroupOperator::ApplyFn base) {
        return [omega, base](double t, const ScalarFn& f, const Vec& x) {
            return std::exp(-omega * t) * base(t, f, x);
        };
    };
    Q.apply = discount(Q.apply);
    if (Q.apply_cheap) Q.apply_cheap = discount(Q.apply_cheap);
    if (Q.std_error) Q.std_error = discount(Q.std_error);
    if (Q.weight_action) {
        auto wa = Q.weight_action;
        Q.weight_action = [omega, wa](double t, const Vec& x) {
            return std::exp(-omega * t) * wa(t, x);
        };
    }
    if (Q.growth) Q.growth = GrowthBound{Q.growth->M, Q.growth->omega - omega};
    Q.name = S.name + "-q";
    return Q;
}

// weight with the derivatives the drift correction needs
struct SmoothWeight {
    WeightFunction w;
    VectorFn grad;
    MatrixFn hess;
};

inline SmoothWeight smooth_quadratic_weight(int dim = 1) {
    SmoothWeight sw;
    sw.w = quadratic_weight(dim);
    sw.grad = [](const Vec& x) { return Vec(2.0 * x); };
    sw.hess = [dim](const Vec&) { return Mat(2.0 * Mat::Identity(dim, dim)); };
    return sw;
}

struct KilledDiffusion {
    DiffusionSpec base;      // original dynamics
    DiffusionSpec tilted;    // drift mu + sigma sigma^T grad(rho)/rho, same sigma
    ScalarFn c_prime;        // killing rate before discounting
    ScalarFn c_eff;          // c_prime - omega, must be <= 0
    double omega = 0.0;
    double max_c_eff = 0.0;  // max of c_eff over the check grid
};

// Drift correction and killing rate induced by the weight:
//   mu'_i = mu_i + sum_j (sigma sigma^T)_ij d_j rho / rho
//   c'    = (grad rho . mu + 1/2 sum_ij (sigma sigma^T)_ij d_i d_j rho) / rho
// The tilted process killed at rate omega - c' represents Q on path space.
inline KilledDiffusion killed_diffusion_params(const DiffusionSpec& spec,
                                               const SmoothWeight& sw, double omega,
                                               const SampleGrid& check_grid,
                                               double tol = 1e-10) {
    if (sw.w.dim != spec.dim) throw DimensionMismatch("weight/diffusion dim mismatch");
    KilledDiffusion kd;
    kd.base = spec;
    kd.omega = omega;
    auto drift = spec.drift;
    auto sigma = spec.sigma;
    auto rho = sw.w.eval;
    auto grad = sw.grad;
    auto hess = sw.hess;
    VectorFn tilted_drift = [drift, sigma, rho, grad](const Vec& x) {
        Mat a = sigma(x);
        return Vec(drift(x) + (a * a.transpose()) * grad(x) / rho(x));
    };
    kd.tilted = spec;
    kd.tilted.name = spec.name + "-tilted";
    kd.tilted.drift = tilted_drift;
    kd.tilted.poly.reset();  // the correction is not polynomial in general
    if (spec.dim == 1) {
        kd.tilted.drift1 = [tilted_drift](double x) { return tilted_drift(vec1(x))[0]; };
        kd.tilted.sigma1 = spec.sigma1;
    } else {
        kd.tilted.drift1 = nullptr;
        kd.tilted.sigma1 = nullptr;
    }
    kd.c_prime = [drift, sigma, rho, grad, hess](const Vec& x) {
        Mat a = sigma(x);
        Mat aat = a * a.transpose();
        double second = 0.5 * (aat.cwiseProduct(hess(x))).sum();
        return (grad(x).dot(drift(x)) + second) / rho(x);
    };
    auto cp = kd.c_prime;
    kd.c_eff = [cp, omega](const Vec& x) { return cp(x) - omega; };
    kd.max_c_eff = -std::numeric_limits<double>::infinity();
    for (const auto& x : check_grid.points)
        kd.max_c_eff = std::max(kd.max_c_eff, kd.c_eff(x));
    if (kd.max_c_eff > tol)
        throw QuasiContractionViolated("c' - omega positive on the sample grid");
    return kd;
}

struct KilledSnapshots {
    int dim = 1;
    std::size_t n_paths = 0;
    double dt = 0.0;
    std::vector<long long> snap_steps;       // ascending
    std::vector<std::vector<double>> states;  // [snap][path*dim]; dead paths hold NaN
    std::vector<std::uint8_t> alive_at_end;
    std::size_t survivors = 0;

    bool alive(std::size_t snap, std::size_t path) const {
        return std::isfinite(states[snap][path * static_cast<std::size_t>(dim)]);
    }
    Vec state(std::size_t snap, std::size_t path) const {
        Vec v(dim);
        for (int d = 0; d < dim; ++d)
            v[d] = states[snap][path * static_cast<std::size_t>(dim) +
                                static_cast<std::size_t>(d)];
        return v;
    }
};

// Tilted dynamics with per-step thinning: at each step the path dies with
// probability 1 - exp(c_eff(X_k) dt) read from its own uniform stream, and a
// dead path stays dead (cemetery).  Snapshot states of dead paths are NaN.
inline KilledSnapshots simulate_killed(const KilledDiffusion& kd, const Vec& x0, double T,
                                       double dt, std::size_t n_paths, std::uint64_t seed,
                                       const std::vector<double>& snapshot_times) {
    long long n_steps = snap_steps(T, dt);
    KilledSnapshots out;
    out.dim = kd.tilted.dim;
    out.n_paths = n_paths;
    out.dt = dt;
    std::vector<double> ts = snapshot_times;
    std::sort(ts.begin(), ts.end());
    for (double t : ts) {
        long long k = flab::snap_steps(t, dt);
        if (k > n_steps) throw InvalidParameter("snapshot beyond horizon");
        out.snap_steps.push_back(k);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.states.assign(out.snap_steps.size(),
                      std::vector<double>(n_paths * static_cast<std::size_t>(out.dim), nan));
    out.alive_at_end.assign(n_paths, 0);
    const auto& spec = kd.tilted;
    const auto c_eff = kd.c_eff;
    parallel_for(n_paths, [&](std::size_t p) {
        const double sqdt = std::sqrt(dt);
        Vec x = x0;
        bool alive = true;
        std::size_t si = 0;
        auto record = [&](long long k) {
            while (si < out.snap_steps.size() && out.snap_steps[si] == k) {
                if (alive)
                    for (int d = 0; d < out.dim; ++d)
                        out.states[si][p * static_cast<std::size_t>(out.dim) +
                                       static_cast<std::size_t>(d)] = x[d];
                ++si;
            }
        };
        record(0);
        for (long long k = 0; k < n_steps && alive; ++k) {
            double c = c_eff(x);
            if (c > 0.0) c = 0.0;  // guarded upstream; thinning needs c <= 0
            double u = uniform_at(seed, p, static_cast<std::uint64_t>(k), 0, kStreamKill);
            if (u < -std::expm1(c * dt)) {
                alive = false;
            } else {
                if (spec.dim == 1 && spec.drift1 && spec.sigma1) {
                    double z = normal_at(seed, p, static_cast<std::uint64_t>(k), 0);
                    x[0] += spec.drift1(x[0]) * dt + spec.sigma1(x[0]) * sqdt * z;
                } else {
                    Vec z(spec.dim);
                    for (int d = 0; d < spec.dim; ++d)
                        z[d] = normal_at(seed, p, static_cast<std::uint64_t>(k),
                                         static_cast<std::uint32_t>(d));
                    x += spec.drift(x) * dt + spec.sigma(x) * (sqdt * z);
                }
                if (!x.allFinite()) alive = false;
            }
            record(k + 1);
        }
        // snapshots after death record nothing (NaN = cemetery)
        while (si < out.snap_steps.size()) record(out.snap_steps[si]);
        if (alive) out.alive_at_end[p] = 1;
    });
    for (std::size_t p = 0; p < n_paths; ++p)
        if (out.alive_at_end[p]) ++out.survivors;
    return out;
}

// cylinder functional: state comparisons at finitely many times
struct CylinderIndicator {
    struct Term {
        double time = 0.0;
        int coord = 0;
        bool greater = true;  // X_time[coord] > threshold, else <=
        double threshold = 0.0;
    };
    enum class Mode { All, Any };
    std::vector<Term> terms;
    Mode mode = Mode::All;
    std::string label;

    std::vector<double> times() const {
        std::vector<double> ts;
        for (const auto& t : terms) ts.push_back(t.time);
        return ts;
    }
    bool eval_states(const std::vector<Vec>& states_at_terms) const {
        bool acc = mode == Mode::All;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            double v = states_at_terms[i][terms[i].coord];
            bool hit = terms[i].greater ? v > terms[i].threshold : v <= terms[i].threshold;
            acc = mode == Mode::All ? (acc && hit) : (acc || hit);
        }
        return acc;
    }
};

struct RnEquivalenceRow {
    std::string label;
    double lhs = 0.0, lhs_se = 0.0;  // killed-path probability (alive at T and in A)
    double rhs = 0.0, rhs_se = 0.0;  // discounted reweighted probability under mu
    bool pass = false;               // |lhs - rhs| <= 3 (lhs_se + rhs_se)
};

struct RnEquivalenceReport {
    std::vector<RnEquivalenceRow> rows;
    double survival = 0.0;  // alive fraction at T in the killed run
    bool all_pass = true;
};

// Both sides of the measure-equivalence identity, estimated on independent
// ensembles: killed paths on the left, weight-reweighted plain paths with
// the exp(-omega T) discount on the right.
inline RnEquivalenceReport rn_equivalence_check(const KilledDiffusion& kd,
                                                const WeightFunction& w, const Vec& x0,
                                                double T, double dt, std::size_t n_paths,
                                                std::uint64_t seed,
                                                const std::vector<CylinderIndicator>& inds) {
    std::vector<double> all_times{T};
    for (const auto& ind : inds)
        for (double t : ind.times()) all_times.push_back(t);
    std::sort(all_times.begin(), all_times.end());
    all_times.erase(std::unique(all_times.begin(), all_times.end()), all_times.end());
    for (double t : all_times)
        if (t > T) throw InvalidParameter("indicator time beyond horizon");

    std::uint64_t seed_l = derive_seed(seed, 0x4C45ull);
    std::uint64_t seed_r = derive_seed(seed, 0x5249ull);
    KilledSnapshots killed =
        simulate_killed(kd, x0, T, dt, n_paths, seed_l, all_times);
    PathEnsemble plain = simulate_paths(kd.base, x0, T, dt, n_paths, seed_r);

    auto snap_of = [&](double t) {
        for (std::size_t i = 0; i < all_times.size(); ++i)
            if (all_times[i] == t) return i;
        throw InvalidParameter("missing snapshot");
    };
    std::size_t snap_T = snap_of(T);
    long long steps_T = snap_steps(T, dt);

    RnEquivalenceReport rep;
    rep.survival = static_cast<double>(killed.survivors) / static_cast<double>(n_paths);
    double rho_x0 = w.eval(x0);
    double disc = std::exp(-kd.omega * T);

    for (const auto& ind : inds) {
        RnEquivalenceRow row;
        row.label = ind.label;
        // left: killed ensemble, event requires survival through T
        double suml = 0.0;
        for (std::size_t p = 0; p < n_paths; ++p) {
            if (!killed.alive(snap_T, p)) continue;
            std::vector<Vec> states;
            states.reserve(ind.terms.size());
            bool ok = true;
            for (const auto& term : ind.terms) {
                std::size_t si = snap_of(term.time);
                if (!killed.alive(si, p)) {
                    ok = false;  // defensive; death is absorbing so alive at T implies all
                    break;
                }
                states.push_back(killed.state(si, p));
            }
            if (ok && ind.eval_states(states)) suml += 1.0;
        }
        double n = static_cast<double>(n_paths);
        row.lhs = suml / n;
        row.lhs_se = std::sqrt(std::max(0.0, row.lhs * (1.0 - row.lhs)) / n);
        // right: plain ensemble, indicator times read off stored snapshots
        double sum = 0.0, sumsq = 0.0;
        std::size_t used = 0;
        for (std::size_t p = 0; p < n_paths; ++p) {
            if (!plain.valid_at(p, steps_T)) continue;
            std::vector<Vec> states;
            states.reserve(ind.terms.size());
            for (const auto& term : ind.terms)
                states.push_back(plain.state_vec(p, snap_steps(term.time, dt)));
            double v = 0.0;
            if (ind.eval_states(states))
                v = disc * w.eval(plain.state_vec(p, steps_T)) / rho_x0;
            sum += v;
            sumsq += v * v;
            ++used;
        }
        double nu = static_cast<double>(used);
        row.rhs = sum / nu;
        double var = std::max(0.0, (sumsq - nu * row.rhs * row.rhs) / std::max(1.0, nu - 1.0));
        row.rhs_se = std::sqrt(var / nu);
        row.pass = std::abs(row.lhs - row.rhs) <= 3.0 * (row.lhs_se + row.rhs_se);
        rep.rows.push_back(row);
        rep.all_pass = rep.all_pass && row.pass;
    }
    return rep;
}

}  // namespace flab
