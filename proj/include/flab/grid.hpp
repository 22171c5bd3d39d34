#pragma once

// Finite sample grids standing in for the state space E in sup-type norms.

#include "flab/common.hpp"
#include "flab/weight.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace flab {

enum class GridProvenance { Lattice, UserPoints, QuasiRandom };

struct SampleGrid {
    int dim = 1;
    GridProvenance provenance = GridProvenance::UserPoints;
    std::vector<Vec> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    void validate() const {
        if (points.empty()) throw EmptyGrid("sample grid has no points");
        for (const auto& p : points)
            if (p.size() != dim) throw DimensionMismatch("grid point dim mismatch");
        for (std::size_t i = 0; i + 1 < points.size(); ++i)
            for (std::size_t j = i + 1; j < points.size(); ++j)
                if (points[i] == points[j])
                    throw InvalidParameter("duplicate grid point");
    }
};

inline SampleGrid grid_from_points(std::vector<Vec> pts) {
    SampleGrid g;
    if (pts.empty()) throw EmptyGrid("no points supplied");
    g.dim = static_cast<int>(pts.front().size());
    g.provenance = GridProvenance::UserPoints;
    g.points = std::move(pts);
    return g;
}

// uniform lattice with n[i] points along axis i (endpoints included)
inline SampleGrid lattice_grid(const Vec& lo, const Vec& hi, const std::vector<int>& n) {
    int dim = static_cast<int>(lo.size());
    if (hi.size() != dim || static_cast<int>(n.size()) != dim)
        throw DimensionMismatch("lattice bounds/count dim mismatch");
    std::size_t total = 1;
    for (int c : n) {
        if (c < 1) throw InvalidParameter("lattice needs >=1 point per axis");
        total *= static_cast<std::size_t>(c);
    }
    SampleGrid g;
    g.dim = dim;
    g.provenance = GridProvenance::Lattice;
    g.points.reserve(total);
    std::vector<int> idx(dim, 0);
    for (std::size_t k = 0; k < total; ++k) {
        Vec p(dim);
        for (int i = 0; i < dim; ++i)
            p[i] = n[i] == 1 ? lo[i] : lo[i] + (hi[i] - lo[i]) * idx[i] / (n[i] - 1);
        g.points.push_back(p);
        for (int i = dim - 1; i >= 0; --i) {
            if (++idx[i] < n[i]) break;
            idx[i] = 0;
        }
    }
    return g;
}

inline SampleGrid lattice_grid_1d(double lo, double hi, int n) {
    return lattice_grid(vec1(lo), vec1(hi), {n});
}

namespace detail {

inline double halton(std::uint64_t i, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    for (std::uint64_t k = i + 1; k > 0; k /= base) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(k % base);
    }
    return r;
}

}  // namespace detail

// low-discrepancy points in a box (Halton, first dims use bases 2,3,5,7,11,13)
inline SampleGrid quasi_random_grid(const Box& box, std::size_t count) {
    static const std::uint64_t bases[] = {2, 3, 5, 7, 11, 13};
    int dim = static_cast<int>(box.lo.size());
    if (dim > 6) throw InvalidParameter("quasi-random grid supports dim <= 6");
    if (count == 0) throw EmptyGrid("quasi-random grid with zero points");
    SampleGrid g;
    g.dim = dim;
    g.provenance = GridProvenance::QuasiRandom;
    g.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vec p(dim);
        for (int d = 0; d < dim; ++d)
            p[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * detail::halton(i, bases[d]);
        g.points.push_back(p);
    }
    return g;
}

}  // namespace flab
