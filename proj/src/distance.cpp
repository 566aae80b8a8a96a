#include "desne/distance.hpp"

#include "desne/error.hpp"
#include "desne/parallel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace desne {

std::vector<double> row_norms(const Matrix& m) {
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (double x : m.row(i)) acc += x * x;
        out[i] = acc;
    }
    return out;
}

Matrix gram(const Matrix& m, std::size_t tile, int threads) {
    if (tile < 1) throw std::invalid_argument("gram: tile must be >= 1");
    const std::size_t n = m.rows();
    const std::size_t d = m.cols();
    Matrix out(n, n);
    const std::size_t nblocks = (n + tile - 1) / tile;
    // Only blocks on or above the diagonal are computed; the mirror copy is
    // bitwise identical because each entry is the same fixed-order sum.
    parallel_for(nblocks, threads, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t bi = b0; bi < b1; ++bi) {
            const std::size_t i0 = bi * tile;
            const std::size_t i1 = std::min(n, i0 + tile);
            for (std::size_t bj = bi; bj < nblocks; ++bj) {
                const std::size_t j0 = bj * tile;
                const std::size_t j1 = std::min(n, j0 + tile);
                for (std::size_t i = i0; i < i1; ++i) {
                    const double* ri = m.data() + i * d;
                    for (std::size_t j = std::max(i, j0); j < j1; ++j) {
                        const double* rj = m.data() + j * d;
                        double acc = 0.0;
                        for (std::size_t k = 0; k < d; ++k) acc += ri[k] * rj[k];
                        out(i, j) = acc;
                        out(j, i) = acc;
                    }
                }
            }
        }
    });
    return out;
}

DistanceMatrix assemble_sq_dist(const std::vector<double>& norms, const Matrix& g) {
    const std::size_t n = norms.size();
    if (g.rows() != n || g.cols() != n) {
        throw std::invalid_argument("assemble_sq_dist: norms/gram size mismatch");
    }
    DistanceMatrix dm;
    dm.n = n;
    dm.d2 = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                dm.d2(i, j) = 0.0;
                continue;
            }
            double v = norms[i] + norms[j] - 2.0 * g(i, j);
            if (v < -1e-6) {
                throw InternalError("assemble_sq_dist: cancellation beyond tolerance at (" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    "): " + std::to_string(v));
            }
            dm.d2(i, j) = v < 0.0 ? 0.0 : v;
        }
    }
    return dm;
}

DistanceMatrix pairwise_sq_dist(const Matrix& m, std::size_t tile, int threads) {
    return assemble_sq_dist(row_norms(m), gram(m, tile, threads));
}

DistanceMatrix pairwise_sq_dist_naive(const Matrix& m) {
    const std::size_t n = m.rows();
    const std::size_t d = m.cols();
    DistanceMatrix dm;
    dm.n = n;
    dm.d2 = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                double diff = m(i, k) - m(j, k);
                acc += diff * diff;
            }
            dm.d2(i, j) = acc;
            dm.d2(j, i) = acc;
        }
    }
    return dm;
}

} // namespace desne
