#pragma once

// A continuous-time chain on the nonnegative integers under the weight
// rho(n) = exp(n^2), built so that pointwise continuity at t=0 holds state by
// state while the weighted operator norms blow up as t drops to 0: the mass
// an odd state n pushes to n+1 is tiny, but rho(n+1)/rho(n) = exp(2n+1)
// grows faster, and the supremum over n diverges.  rho(27) already overflows
// a double, so every weighted quantity here lives in log space.
//
// Rates: odd n: n -> n+1 at n^alpha exp(-n), n -> 0 at n^alpha (1 - exp(-n));
// even n >= 2: n -> 0 at (n-1)^alpha; 0 absorbing.  Closed-form transitions
// follow from the three-state structure (matching consecutive diagonal rates
// make the (n, n+1) entry exactly linear in t times the diagonal decay).

#include "flab/common.hpp"
#include "flab/semigroup.hpp"
#include "flab/weight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace flab {

struct ParityChain {
    double alpha = 2.0;
    long long n_max = 100000;  // scan horizon for supremum lower bounds
};

inline ParityChain build_chain(double alpha = 2.0, long long n_max = 100000) {
    if (!(alpha >= 1.0)) throw InvalidRate("alpha must be >= 1");
    if (n_max < 3) throw InvalidRate("n_max must be >= 3");
    return ParityChain{alpha, n_max};
}

inline double chain_rate(const ParityChain& c, long long n, long long m) {
    if (n < 0 || m < 0) throw InvalidParameter("negative state");
    if (n == 0) return 0.0;
    if (n % 2 == 1) {
        double base = std::pow(static_cast<double>(n), c.alpha);
        if (m == n) return -base;
        if (m == n + 1) return base * std::exp(-static_cast<double>(n));
        if (m == 0) return base * (1.0 - std::exp(-static_cast<double>(n)));
        return 0.0;
    }
    double base = std::pow(static_cast<double>(n - 1), c.alpha);
    if (m == n) return -base;
    if (m == 0) return base;
    return 0.0;
}

// closed-form transition probabilities out of n; complement goes to 0
inline std::map<long long, double> transition_row(const ParityChain& c, long long n,
                                                  double t) {
    if (t < 0.0) throw InvalidParameter("t must be >= 0");
    if (n < 0) throw InvalidParameter("negative state");
    std::map<long long, double> row;
    if (t == 0.0 || n == 0) {
        row[n] = 1.0;
        return row;
    }
    if (n % 2 == 1) {
        double lam = std::pow(static_cast<double>(n), c.alpha);
        double diag = std::exp(-lam * t);
        double up = std::exp(-static_cast<double>(n)) * lam * t * diag;
        row[n] = diag;
        row[n + 1] = up;
        row[0] = 1.0 - diag - up;
    } else {
        double lam = std::pow(static_cast<double>(n - 1), c.alpha);
        row[n] = std::exp(-lam * t);
        row[0] = 1.0 - row[n];
    }
    return row;
}

// log of the piece of P(t)rho(n)/rho(n) carried by the n -> n+1 jump:
//   n + 1 + alpha ln n + ln t - n^alpha t
inline double chain_up_log_term(const ParityChain& c, long long n, double t) {
    double nd = static_cast<double>(n);
    return nd + 1.0 + c.alpha * std::log(nd) + std::log(t) - std::pow(nd, c.alpha) * t;
}

struct ChainSup {
    double log_value = 0.0;
    double value = 0.0;  // exp(log_value); +inf if it overflows
    long long argmax_n = 1;
    bool truncation_suspect = false;  // argmax hit the scan horizon
};

// s(t) = sup over odd n of rho(n+1) p_{n,n+1}(t) / rho(n), by log-space scan
inline ChainSup s_of_t(const ParityChain& c, double t) {
    if (!(t > 0.0)) throw InvalidParameter("s(t) needs t > 0");
    ChainSup out;
    out.log_value = -std::numeric_limits<double>::infinity();
    long long last_odd = 1;
    for (long long n = 1; n <= c.n_max; n += 2) {
        last_odd = n;
        double lv = chain_up_log_term(c, n, t);
        if (lv > out.log_value) {
            out.log_value = lv;
            out.argmax_n = n;
        }
    }
    out.truncation_suspect = out.argmax_n == last_odd;
    out.value = std::exp(out.log_value);
    return out;
}

struct BlowupRow {
    double t = 0.0;
    double log_s = 0.0;
    double s = 0.0;
    long long argmax_n = 1;
    bool truncation_suspect = false;
};

struct BlowupTable {
    std::vector<BlowupRow> rows;          // in the given time order
    bool monotone_increasing = false;     // s grows strictly as t decreases
    bool any_truncation_suspect = false;
};

inline BlowupTable p4_blowup_table(const ParityChain& c, std::vector<double> ts) {
    if (ts.empty()) throw InvalidParameter("need at least one time");
    std::sort(ts.begin(), ts.end(), std::greater<double>());
    BlowupTable table;
    table.monotone_increasing = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : ts) {
        ChainSup s = s_of_t(c, t);
        BlowupRow row{t, s.log_value, s.value, s.argmax_n, s.truncation_suspect};
        table.rows.push_back(row);
        if (!(s.log_value > prev)) table.monotone_increasing = false;
        prev = s.log_value;
        table.any_truncation_suspect |= s.truncation_suspect;
    }
    return table;
}

// central-difference residual of the forward equation d/dt p = p A on the
// states reachable from n (one-sided at t = 0)
inline double forward_equation_residual(const ParityChain& c, long long n, double t,
                                        double h = 1e-6) {
    if (!(h > 0.0)) throw InvalidParameter("h must be positive");
    std::vector<long long> reach{0, n};
    if (n % 2 == 1) reach.push_back(n + 1);
    auto row_at = [&](double s) { return transition_row(c, n, s); };
    auto get = [](const std::map<long long, double>& row, long long m) {
        auto it = row.find(m);
        return it == row.end() ? 0.0 : it->second;
    };
    std::map<long long, double> lo, hi, mid = row_at(t);
    double denom;
    if (t >= h) {
        lo = row_at(t - h);
        hi = row_at(t + h);
        denom = 2.0 * h;
    } else {
        lo = row_at(t);
        hi = row_at(t + h);
        denom = h;
    }
    double worst = 0.0;
    for (long long j : reach) {
        double dp = (get(hi, j) - get(lo, j)) / denom;
        double pa = 0.0;
        for (long long k : reach) pa += get(mid, k) * chain_rate(c, k, j);
        worst = std::max(worst, std::abs(dp - pa));
    }
    return worst;
}

struct WitnessRow {
    double t = 0.0;
    double log_bound = 0.0;
    double bound = 0.0;  // +inf if the log overflows
};

// lower bound for || P(t) f - f ||_rho with the unit-norm witness
// f = rho(n0+1) 1_{n0+1}: the bound is p_{n0,n0+1}(t) rho(n0+1)/rho(n0)
inline std::vector<WitnessRow> strong_continuity_failure_witness(
    const ParityChain& c, long long n0, const std::vector<double>& ts) {
    if (n0 % 2 != 1 || n0 < 1) throw InvalidParameter("witness needs odd n0 >= 1");
    std::vector<WitnessRow> out;
    for (double t : ts) {
        if (!(t > 0.0)) throw InvalidParameter("witness times must be positive");
        WitnessRow row;
        row.t = t;
        row.log_bound = chain_up_log_term(c, n0, t);
        row.bound = std::exp(row.log_bound);
        out.push_back(row);
    }
    return out;
}

// integer states embedded as 1-vectors so the generic axiom battery applies;
// the norm scan hook feeds the global supremum that no finite grid can see
inline SemigroupOperator chain_semigroup(const ParityChain& c) {
    SemigroupOperator S;
    S.weight = exp_quadratic_weight(1);
    ParityChain chain = c;
    auto to_n = [](const Vec& x) {
        long long n = std::llround(x[0]);
        if (n < 0 || std::abs(x[0] - static_cast<double>(n)) > 1e-9)
            throw InvalidParameter("chain states are nonnegative integers");
        return n;
    };
    S.apply = [chain, to_n](double t, const ScalarFn& f, const Vec& x) {
        double acc = 0.0;
        for (const auto& [m, p] : transition_row(chain, to_n(x), t))
            acc += p * f(vec1(static_cast<double>(m)));
        return acc;
    };
    S.apply_cheap = S.apply;
    S.log_weight_action = [chain, to_n](double t, const Vec& x) {
        // log sum of p_{n,m} exp(m^2) by log-sum-exp
        double lmax = -std::numeric_limits<double>::infinity();
        std::vector<double> logs;
        for (const auto& [m, p] : transition_row(chain, to_n(x), t)) {
            if (p <= 0.0) continue;
            double lv = std::log(p) + static_cast<double>(m) * static_cast<double>(m);
            logs.push_back(lv);
            lmax = std::max(lmax, lv);
        }
        double acc = 0.0;
        for (double lv : logs) acc += std::exp(lv - lmax);
        return lmax + std::log(acc);
    };
    S.norm_scan = [chain](double t) {
        ChainSup s = s_of_t(chain, t);
        return std::make_pair(s.log_value, static_cast<double>(s.argmax_n));
    };
    S.name = "chain";
    return S;
}

}  // namespace flab
