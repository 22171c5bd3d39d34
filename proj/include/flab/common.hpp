#pragma once

// Shared aliases, error types and the worker-pool helper used across flab.

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace flab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;
using MatrixFn = std::function<Mat(const Vec&)>;

inline Vec vec1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}

inline Vec vec2(double x, double y) {
    Vec v(2);
    v[0] = x;
    v[1] = y;
    return v;
}

// ---- errors ------------------------------------------------------------

struct FlabError : std::runtime_error {
    explicit FlabError(const std::string& what) : std::runtime_error(what) {}
};

#define FLAB_DEFINE_ERROR(Name)                                              \
    struct Name : FlabError {                                                \
        explicit Name(const std::string& what) : FlabError(#Name ": " + what) {} \
    }

FLAB_DEFINE_ERROR(EmptyGrid);
FLAB_DEFINE_ERROR(NonFiniteFunctionValue);
FLAB_DEFINE_ERROR(DimensionMismatch);
FLAB_DEFINE_ERROR(IllConditionedFit);
FLAB_DEFINE_ERROR(BackendCannotEvaluateWeight);
FLAB_DEFINE_ERROR(BetaBelowGrowthBound);
FLAB_DEFINE_ERROR(QuadratureUnstable);
FLAB_DEFINE_ERROR(StepMismatch);
FLAB_DEFINE_ERROR(NotPolynomialCoefficients);
FLAB_DEFINE_ERROR(UnsupportedDegree);
FLAB_DEFINE_ERROR(NonSquareMatrix);
FLAB_DEFINE_ERROR(QuasiContractionViolated);
FLAB_DEFINE_ERROR(InvalidRate);
FLAB_DEFINE_ERROR(InvalidParameter);
FLAB_DEFINE_ERROR(ConfigInvalid);

#undef FLAB_DEFINE_ERROR

// ---- worker pool -------------------------------------------------------

// FLAB_THREADS caps the number of workers; results must not depend on the
// worker count, so chunks are assigned statically and each job writes only
// its own output slots.
inline std::size_t max_workers() {
    if (const char* env = std::getenv("FLAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

template <typename Fn>  // Fn: void(std::size_t index)
void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t workers = std::min(max_workers(), n ? n : std::size_t{1});
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace flab
