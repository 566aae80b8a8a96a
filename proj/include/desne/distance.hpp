#pragma once

#include "desne/matrix.hpp"

#include <cstddef>
#include <vector>

namespace desne {

// Squared Euclidean distances between all sample pairs. Symmetric,
// zero diagonal, no negative entries (round-off is clamped). Owns
// 8*N^2 bytes; the CLI refuses N above its cap for this reason.
struct DistanceMatrix {
    Matrix d2;
    std::size_t n = 0;
};

// out[i] = sum_k m(i,k)^2
std::vector<double> row_norms(const Matrix& m);

// m * m^T computed in tile x tile output blocks (default 64, the width of
// one processing-element row). Each entry is a fixed-order sum over k, so
// the result is bit-identical for every tile size and worker count.
Matrix gram(const Matrix& m, std::size_t tile = 64, int threads = 1);

// Assembles d2[i][j] = norms[i] + norms[j] - 2*g[i][j] from the two
// matrix products, clamping round-off in [-1e-6, 0) to zero. Anything
// below -1e-6 indicates catastrophic cancellation and throws
// InternalError. The diagonal is forced to zero.
DistanceMatrix assemble_sq_dist(const std::vector<double>& norms, const Matrix& g);

// Decomposed pairwise squared distances: row_norms + gram + assembly.
DistanceMatrix pairwise_sq_dist(const Matrix& m, std::size_t tile = 64, int threads = 1);

// Direct O(N^2 D) per-pair loop. Reference semantics, used as the oracle
// for the decomposed path.
DistanceMatrix pairwise_sq_dist_naive(const Matrix& m);

} // namespace desne
