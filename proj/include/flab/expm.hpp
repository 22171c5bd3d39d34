#pragma once

// Dense matrix exponential, scaling-and-squaring with diagonal Pade
// approximants (degrees 3/5/7/9/13 chosen from the 1-norm).  Aimed at the
// small graded-triangular generator matrices used here; relative accuracy
// around 1e-12 for well-conditioned inputs.

#include "flab/common.hpp"

#include <cmath>

namespace flab {

namespace detail {

inline Mat pade_uv_solve(const Mat& U, const Mat& V) {
    // (V - U) X = (V + U)
    return (V - U).partialPivLu().solve(V + U);
}

inline Mat expm_pade_small(const Mat& A, const std::vector<double>& b) {
    int n = static_cast<int>(A.rows());
    Mat I = Mat::Identity(n, n);
    Mat A2 = A * A;
    Mat even = b[0] * I;
    Mat odd = b[1] * I;
    Mat P = I;
    for (std::size_t k = 2; k + 1 < b.size(); k += 2) {
        P = P * A2;
        even += b[k] * P;
        odd += b[k + 1] * P;
    }
    Mat U = A * odd;
    return pade_uv_solve(U, even);
}

}  // namespace detail

inline Mat expm(const Mat& A) {
    if (A.rows() != A.cols()) throw NonSquareMatrix("expm needs a square matrix");
    const int n = static_cast<int>(A.rows());
    if (n == 0) return Mat(0, 0);
    if (!A.allFinite()) throw NonFiniteFunctionValue("expm of non-finite matrix");
    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) return Mat::Identity(n, n);

    static const std::vector<double> b3 = {120, 60, 12, 1};
    static const std::vector<double> b5 = {30240, 15120, 3360, 420, 30, 1};
    static const std::vector<double> b7 = {17297280, 8648640, 1995840, 277200,
                                           25200, 1512, 56, 1};
    static const std::vector<double> b9 = {17643225600., 8821612800., 2075673600.,
                                           302702400., 30270240., 2162160.,
                                           110880., 3960., 90., 1.};
    if (norm1 < 1.495585217958292e-2) return detail::expm_pade_small(A, b3);
    if (norm1 < 2.539398330063230e-1) return detail::expm_pade_small(A, b5);
    if (norm1 < 9.504178996162932e-1) return detail::expm_pade_small(A, b7);
    if (norm1 < 2.097847961257068e0) return detail::expm_pade_small(A, b9);

    const double theta13 = 5.371920351148152e0;
    int squarings = 0;
    Mat As = A;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
        As /= std::ldexp(1.0, squarings);
    }
    static const double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                               1187353796428800., 129060195264000., 10559470521600.,
                               670442572800., 33522128640., 1323241920., 40840800.,
                               960960., 16380., 182., 1.};
    Mat I = Mat::Identity(n, n);
    Mat A2 = As * As;
    Mat A4 = A2 * A2;
    Mat A6 = A4 * A2;
    Mat U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                  b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
            b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    Mat R = detail::pade_uv_solve(U, V);
    for (int k = 0; k < squarings; ++k) R = R * R;
    return R;
}

inline Mat expm(const Mat& A, double t) { return expm(Mat(t * A)); }

// induced 2-norm by power iteration on A^T A (deterministic start vector)
inline double operator_norm2(const Mat& A, int max_iter = 500, double tol = 1e-12) {
    if (A.rows() == 0 || A.cols() == 0) return 0.0;
    Mat B = A.transpose() * A;
    Vec v = Vec::Ones(B.cols());
    for (int i = 0; i < B.cols(); ++i) v[i] += 1e-3 * std::sin(i + 1.0);  // break symmetry
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vec w = B * v;
        double nl = w.norm();
        if (nl == 0.0) return 0.0;
        w /= nl;
        if (std::abs(nl - lambda) <= tol * std::max(1.0, nl) && it > 2) {
            lambda = nl;
            break;
        }
        lambda = nl;
        v = w;
    }
    return std::sqrt(lambda);
}

}  // namespace flab
