#pragma once

// Euler-Maruyama path engine with counter-based noise: every path/step draw
// is addressed by (seed, path, step, slot), so ensembles are bitwise
// reproducible for any worker count and any evaluation order.

#include "flab/common.hpp"
#include "flab/diffusion_spec.hpp"
#include "flab/grid.hpp"
#include "flab/rng.hpp"
#include "flab/semigroup.hpp"
#include "flab/weight.hpp"

#include <cmath>
#include <cstring>
#include <optional>

namespace flab {

inline long long snap_steps(double T, double dt, bool strict = true) {
    if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");
    if (T < 0.0) throw InvalidParameter("horizon must be nonnegative");
    long long n = std::llround(T / dt);
    if (strict && std::abs(n * dt - T) > 1e-12 * std::max(1.0, std::abs(T)))
        throw StepMismatch("dt does not divide the horizon");
    return n;
}

struct PathEnsemble {
    int dim = 1;
    std::size_t n_paths = 0;
    long long n_steps = 0;  // snapshots per path = n_steps + 1
    double dt = 0.0;
    Vec x0;
    std::uint64_t seed = 0;
    std::vector<double> states;              // [path][snapshot][dim]
    std::vector<std::int64_t> first_bad_step;  // -1 when the path stayed finite

    double state(std::size_t p, long long k, int d) const {
        return states[(p * static_cast<std::size_t>(n_steps + 1) +
                       static_cast<std::size_t>(k)) * static_cast<std::size_t>(dim) +
                      static_cast<std::size_t>(d)];
    }
    Vec state_vec(std::size_t p, long long k) const {
        Vec v(dim);
        for (int d = 0; d < dim; ++d) v[d] = state(p, k, d);
        return v;
    }
    bool valid_at(std::size_t p, long long k) const {
        return first_bad_step[p] < 0 || k < first_bad_step[p];
    }
};

namespace detail {

// one Euler-Maruyama path; visitor(step, state) sees every snapshot 0..n
// returns the first step at which the state went non-finite, or -1
template <typename Visitor>
long long em_path(const DiffusionSpec& spec, const Vec& x0, double dt, long long n_steps,
                  std::uint64_t seed, std::uint64_t path, Visitor&& visit) {
    const double sqdt = std::sqrt(dt);
    if (spec.dim == 1 && spec.drift1 && spec.sigma1) {
        double x = x0[0];
        visit(0, &x);
        for (long long k = 0; k < n_steps; ++k) {
            double z = normal_at(seed, path, static_cast<std::uint64_t>(k), 0);
            x += spec.drift1(x) * dt + spec.sigma1(x) * sqdt * z;
            if (!std::isfinite(x)) {
                for (long long r = k; r < n_steps; ++r) visit(r + 1, nullptr);
                return k + 1;
            }
            visit(k + 1, &x);
        }
        return -1;
    }
    Vec x = x0;
    Vec z(spec.dim);
    visit(0, x.data());
    for (long long k = 0; k < n_steps; ++k) {
        for (int d = 0; d < spec.dim; ++d)
            z[d] = normal_at(seed, path, static_cast<std::uint64_t>(k),
                             static_cast<std::uint32_t>(d));
        x += spec.drift(x) * dt + spec.sigma(x) * (sqdt * z);
        if (!x.allFinite()) {
            for (long long r = k; r < n_steps; ++r) visit(r + 1, nullptr);
            return k + 1;
        }
        visit(k + 1, x.data());
    }
    return -1;
}

inline std::uint64_t hash_state(const Vec& x) {
    std::uint64_t h = 0x243F6A8885A308D3ull;
    for (int i = 0; i < x.size(); ++i) {
        std::uint64_t bits;
        double v = x[i];
        std::memcpy(&bits, &v, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

}  // namespace detail

inline PathEnsemble simulate_paths(const DiffusionSpec& spec, const Vec& x0, double T,
                                   double dt, std::size_t n_paths, std::uint64_t seed) {
    if (x0.size() != spec.dim) throw DimensionMismatch("x0 dimension mismatch");
    if (n_paths == 0) throw InvalidParameter("need at least one path");
    if (spec.dim > 8) throw InvalidParameter("path storage supports dim <= 8");
    PathEnsemble e;
    e.dim = spec.dim;
    e.n_paths = n_paths;
    e.n_steps = snap_steps(T, dt);
    e.dt = dt;
    e.x0 = x0;
    e.seed = seed;
    e.states.assign(n_paths * static_cast<std::size_t>(e.n_steps + 1) *
                        static_cast<std::size_t>(spec.dim),
                    0.0);
    e.first_bad_step.assign(n_paths, -1);
    parallel_for(n_paths, [&](std::size_t p) {
        double* row = &e.states[p * static_cast<std::size_t>(e.n_steps + 1) *
                                static_cast<std::size_t>(spec.dim)];
        double last[8] = {0};
        e.first_bad_step[p] = detail::em_path(
            spec, x0, dt, e.n_steps, seed, p, [&](long long k, const double* xs) {
                double* dst = row + static_cast<std::size_t>(k) *
                                        static_cast<std::size_t>(spec.dim);
                if (xs) {
                    for (int d = 0; d < spec.dim; ++d) last[d] = dst[d] = xs[d];
                } else {
                    for (int d = 0; d < spec.dim; ++d) dst[d] = last[d];
                }
            });
    });
    return e;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_used = 0;
    std::size_t n_flagged = 0;
};

// mean of f over path states at snapshot k, flagged paths excluded
inline McEstimate mc_mean_at(const PathEnsemble& e, const ScalarFn& f, long long k) {
    if (k < 0 || k > e.n_steps) throw InvalidParameter("snapshot out of range");
    McEstimate est;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        if (!e.valid_at(p, k)) {
            ++est.n_flagged;
            continue;
        }
        double v = f(e.state_vec(p, k));
        sum += v;
        sumsq += v * v;
        ++est.n_used;
    }
    if (est.n_used == 0) throw NonFiniteFunctionValue("all paths flagged");
    double n = static_cast<double>(est.n_used);
    est.mean = sum / n;
    double var = std::max(0.0, (sumsq - n * est.mean * est.mean) / std::max(1.0, n - 1.0));
    est.std_error = std::sqrt(var / n);
    return est;
}

// lean per-call estimate: no path storage, one running state per path
inline McEstimate mc_estimate(const DiffusionSpec& spec, const Vec& x0, double T, double dt,
                              std::size_t n_paths, std::uint64_t seed, const ScalarFn& f) {
    long long n_steps = snap_steps(T, dt, false);
    std::vector<double> vals(n_paths);
    std::vector<std::uint8_t> bad(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t p) {
        Vec xk(spec.dim);
        long long flagged = detail::em_path(spec, x0, dt, n_steps, seed, p,
                                            [&](long long, const double* xs) {
                                                if (xs)
                                                    for (int d = 0; d < spec.dim; ++d)
                                                        xk[d] = xs[d];
                                            });
        if (flagged >= 0) {
            bad[p] = 1;
            return;
        }
        vals[p] = f(xk);
    });
    McEstimate est;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        if (bad[p]) {
            ++est.n_flagged;
            continue;
        }
        sum += vals[p];
        sumsq += vals[p] * vals[p];
        ++est.n_used;
    }
    if (est.n_used == 0) throw NonFiniteFunctionValue("all paths flagged");
    double n = static_cast<double>(est.n_used);
    est.mean = sum / n;
    double var = std::max(0.0, (sumsq - n * est.mean * est.mean) / std::max(1.0, n - 1.0));
    est.std_error = std::sqrt(var / n);
    return est;
}

struct McBackendConfig {
    double dt = 1e-3;
    std::size_t n_paths = 100000;
    std::size_t n_paths_nested = 512;  // used for inner functions in compositions
    std::uint64_t seed = 1;
};

// Monte Carlo semigroup: P(t)f(x) estimated from a fresh ensemble started at
// x.  The ensemble seed is derived from (t-in-steps, x), so each (t, x) pair
// reads its own fixed noise regardless of call order.
inline SemigroupOperator mc_semigroup(const DiffusionSpec& spec, const WeightFunction& w,
                                      const McBackendConfig& cfg,
                                      std::optional<GrowthBound> growth = {}) {
    if (w.dim != spec.dim) throw DimensionMismatch("weight/diffusion dim mismatch");
    SemigroupOperator S;
    S.weight = w;
    S.stochastic = true;
    S.name = "mc:" + spec.name;
    auto run = [spec, cfg](double t, const ScalarFn& f, const Vec& x,
                           std::size_t n_paths) {
        long long steps = snap_steps(t, cfg.dt, false);
        std::uint64_t sub = derive_seed(cfg.seed, static_cast<std::uint64_t>(steps),
                                        detail::hash_state(x));
        return mc_estimate(spec, x, steps * cfg.dt, cfg.dt, n_paths, sub, f);
    };
    S.apply = [run, cfg](double t, const ScalarFn& f, const Vec& x) {
        return run(t, f, x, cfg.n_paths).mean;
    };
    S.apply_cheap = [run, cfg](double t, const ScalarFn& f, const Vec& x) {
        return run(t, f, x, cfg.n_paths_nested).mean;
    };
    S.std_error = [run, cfg](double t, const ScalarFn& f, const Vec& x) {
        return run(t, f, x, cfg.n_paths).std_error;
    };
    S.weight_action = [run, cfg, w](double t, const Vec& x) {
        return run(t, w.eval, x, cfg.n_paths).mean;
    };
    S.growth = growth;
    return S;
}

struct SupermartingaleRow {
    double t = 0.0;
    Vec x0;
    double lhs = 0.0;        // estimate of E[exp(-omega t) rho(X_t)]
    double std_error = 0.0;
    double rho_x0 = 0.0;
    bool pass = false;       // lhs <= rho(x0) + 3 SE
};

struct SupermartingaleReport {
    std::vector<SupermartingaleRow> rows;
    double worst_margin = 0.0;  // most negative value of rho(x0) + 3 SE - lhs
    bool all_pass = true;
};

// discounted weight along paths should not drift upward when M = 1
inline SupermartingaleReport supermartingale_check(const DiffusionSpec& spec,
                                                   const WeightFunction& w, double omega,
                                                   const std::vector<Vec>& x0s,
                                                   const std::vector<double>& times,
                                                   double dt, std::size_t n_paths,
                                                   std::uint64_t seed) {
    SupermartingaleReport rep;
    std::vector<double> ts = times;
    std::sort(ts.begin(), ts.end());
    double T = ts.back();
    std::vector<long long> snap;
    for (double t : ts) snap.push_back(snap_steps(t, dt));
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& x0 : x0s) {
        std::uint64_t sub = derive_seed(seed, 0xF00Dull, detail::hash_state(x0));
        // one ensemble per start point; read the requested times off it
        std::vector<std::vector<double>> vals(
            ts.size(), std::vector<double>(n_paths, 0.0));
        parallel_for(n_paths, [&](std::size_t p) {
            Vec xk(spec.dim);
            std::size_t si = 0;
            detail::em_path(
                spec, x0, dt, snap.back(), sub, p, [&](long long k, const double* xs) {
                    if (xs)
                        for (int d = 0; d < spec.dim; ++d) xk[d] = xs[d];
                    while (si < snap.size() && snap[si] == k) {
                        // post-blowup snapshots read NaN and drop out below
                        vals[si][p] = xs ? w.eval(xk)
                                         : std::numeric_limits<double>::quiet_NaN();
                        ++si;
                    }
                });
        });
        for (std::size_t si = 0; si < ts.size(); ++si) {
            double sum = 0.0, sumsq = 0.0;
            std::size_t used = 0;
            for (std::size_t p = 0; p < n_paths; ++p) {
                double v = std::exp(-omega * ts[si]) * vals[si][p];
                if (!std::isfinite(v)) continue;
                sum += v;
                sumsq += v * v;
                ++used;
            }
            if (used == 0) throw NonFiniteFunctionValue("all paths flagged");
            SupermartingaleRow row;
            row.t = ts[si];
            row.x0 = x0;
            double n = static_cast<double>(used);
            row.lhs = sum / n;
            double var = std::max(0.0, (sumsq - n * row.lhs * row.lhs) /
                                           std::max(1.0, n - 1.0));
            row.std_error = std::sqrt(var / n);
            row.rho_x0 = w.eval(x0);
            double margin = row.rho_x0 + 3.0 * row.std_error - row.lhs;
            row.pass = margin >= 0.0;
            rep.rows.push_back(row);
            rep.worst_margin = std::min(rep.worst_margin, margin);
            rep.all_pass = rep.all_pass && row.pass;
        }
    }
    if (rep.rows.empty()) rep.worst_margin = 0.0;
    return rep;
}

// tail sanity: fraction of endpoints beyond k sample deviations, with the
// binomial standard error of that fraction
inline std::pair<double, double> tail_fraction(const PathEnsemble& e, double k_sigma) {
    McEstimate m = mc_mean_at(e, [](const Vec& x) { return x[0]; }, e.n_steps);
    McEstimate m2 = mc_mean_at(e, [](const Vec& x) { return x[0] * x[0]; }, e.n_steps);
    double sd = std::sqrt(std::max(0.0, m2.mean - m.mean * m.mean));
    std::size_t count = 0, used = 0;
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        if (!e.valid_at(p, e.n_steps)) continue;
        ++used;
        if (std::abs(e.state(p, e.n_steps, 0) - m.mean) > k_sigma * sd) ++count;
    }
    double frac = used ? static_cast<double>(count) / used : 0.0;
    double se = used ? std::sqrt(frac * (1.0 - frac) / used) : 0.0;
    return {frac, se};
}

}  // namespace flab
