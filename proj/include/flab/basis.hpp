#pragma once

// Monomial basis of polynomials of total degree <= m in d variables, in
// graded lexicographic order: degree ascending, and inside one degree the
// exponent tuples in lexicographic descending order.  d=1, m=2 reads
// (1, x, x^2); d=2, m=2 reads (1, x1, x2, x1^2, x1*x2, x2^2).  All moment
// matrices use this ordering, so it is part of the on-disk format.

#include "flab/common.hpp"

#include <map>
#include <numeric>
#include <vector>

namespace flab {

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& a) {
    return std::accumulate(a.begin(), a.end(), 0);
}

inline bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
    int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a > b;  // lexicographic descending within a degree
}

struct MonomialBasis {
    int dim = 1;
    int max_degree = 0;
    std::vector<MultiIndex> exponents;

    std::size_t size() const { return exponents.size(); }

    int index_of(const MultiIndex& a) const {
        for (std::size_t i = 0; i < exponents.size(); ++i)
            if (exponents[i] == a) return static_cast<int>(i);
        return -1;
    }

    double eval_monomial(std::size_t i, const Vec& x) const {
        double v = 1.0;
        for (int d = 0; d < dim; ++d)
            for (int k = 0; k < exponents[i][d]; ++k) v *= x[d];
        return v;
    }

    double eval(const Vec& coeffs, const Vec& x) const {
        double v = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (coeffs[static_cast<int>(i)] != 0.0)
                v += coeffs[static_cast<int>(i)] * eval_monomial(i, x);
        return v;
    }
};

inline MonomialBasis monomial_basis(int dim, int max_degree) {
    if (dim < 1 || max_degree < 0) throw InvalidParameter("bad basis parameters");
    MonomialBasis b;
    b.dim = dim;
    b.max_degree = max_degree;
    MultiIndex a(dim, 0);
    // enumerate all tuples with entries <= max_degree, filter by total degree
    while (true) {
        if (total_degree(a) <= max_degree) b.exponents.push_back(a);
        int i = dim - 1;
        while (i >= 0 && a[i] == max_degree) a[i--] = 0;
        if (i < 0) break;
        ++a[i];
    }
    std::sort(b.exponents.begin(), b.exponents.end(), graded_lex_less);
    return b;
}

// sparse polynomial over multi-indices; enough arithmetic for generators
struct Poly {
    int dim = 1;
    std::map<MultiIndex, double> terms;

    static Poly constant(int dim, double c) {
        Poly p;
        p.dim = dim;
        if (c != 0.0) p.terms[MultiIndex(dim, 0)] = c;
        return p;
    }
    static Poly variable(int dim, int which, double coef = 1.0) {
        Poly p;
        p.dim = dim;
        MultiIndex a(dim, 0);
        a[which] = 1;
        if (coef != 0.0) p.terms[a] = coef;
        return p;
    }

    int degree() const {
        int d = 0;
        for (const auto& [a, c] : terms)
            if (c != 0.0) d = std::max(d, total_degree(a));
        return terms.empty() ? 0 : d;
    }

    void add_term(const MultiIndex& a, double c) {
        if (c == 0.0) return;
        auto it = terms.find(a);
        if (it == terms.end())
            terms[a] = c;
        else if ((it->second += c) == 0.0)
            terms.erase(it);
    }

    Poly operator+(const Poly& o) const {
        Poly r = *this;
        for (const auto& [a, c] : o.terms) r.add_term(a, c);
        return r;
    }

    Poly operator*(double s) const {
        Poly r;
        r.dim = dim;
        if (s != 0.0)
            for (const auto& [a, c] : terms) r.terms[a] = c * s;
        return r;
    }

    Poly operator*(const Poly& o) const {
        Poly r;
        r.dim = dim;
        for (const auto& [a, ca] : terms)
            for (const auto& [b, cb] : o.terms) {
                MultiIndex s(dim);
                for (int i = 0; i < dim; ++i) s[i] = a[i] + b[i];
                r.add_term(s, ca * cb);
            }
        return r;
    }

    Poly derivative(int axis) const {
        Poly r;
        r.dim = dim;
        for (const auto& [a, c] : terms) {
            if (a[axis] == 0) continue;
            MultiIndex b = a;
            --b[axis];
            r.add_term(b, c * a[axis]);
        }
        return r;
    }

    double eval(const Vec& x) const {
        double v = 0.0;
        for (const auto& [a, c] : terms) {
            double m = c;
            for (int d = 0; d < dim; ++d)
                for (int k = 0; k < a[d]; ++k) m *= x[d];
            v += m;
        }
        return v;
    }

    // coefficient vector in a graded-lex basis; throws if a term falls outside
    Vec coefficients(const MonomialBasis& basis) const {
        Vec c = Vec::Zero(static_cast<int>(basis.size()));
        for (const auto& [a, v] : terms) {
            int i = basis.index_of(a);
            if (i < 0) throw UnsupportedDegree("polynomial term outside basis");
            c[i] = v;
        }
        return c;
    }
};

inline Poly poly_from_coefficients(const MonomialBasis& basis, const Vec& coeffs) {
    Poly p;
    p.dim = basis.dim;
    for (std::size_t i = 0; i < basis.size(); ++i)
        p.add_term(basis.exponents[i], coeffs[static_cast<int>(i)]);
    return p;
}

}  // namespace flab
