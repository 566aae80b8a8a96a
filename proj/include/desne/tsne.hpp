#pragma once

#include "desne/kernels.hpp"
#include "desne/matrix.hpp"
#include "desne/perplexity.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace desne {

struct TsneConfig {
    int dims = 2;
    int iterations = 1000;
    double learning_rate = 200.0;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    int momentum_switch_iter = 250;
    double early_exaggeration_factor = 4.0;
    int early_exaggeration_iters = 100;
    double init_std = 1e-2;
    std::uint64_t seed = 0;

    void validate() const;
    // Canonical key=value rendering of every field, used for hashing.
    std::string canonical() const;
};

struct Embedding {
    Matrix y;
    std::uint64_t seed = 0;
    std::string config_hash;
};

// Student-t kernel state at one layout: w_ij = 1/(1 + ||y_i - y_j||^2)
// off-diagonal, z = sum of all w, q = w/z.
struct LowDimAffinity {
    Matrix q;
    Matrix w;
    double z = 0.0;
    std::size_t n = 0;
};

LowDimAffinity low_dim_affinities(const Matrix& y, const ScalarMath& math = {},
                                  int threads = 1);

// sum_{i != j} p log(p/q); p entries at or below 1e-12 are skipped.
double kl_divergence(const AffinityMatrix& p, const LowDimAffinity& q,
                     const ScalarMath& math = {});

// grad_i = 4 * sum_j (p_ij - q_ij)(y_i - y_j) w_ij with the cached kernel.
Matrix kl_gradient(const AffinityMatrix& p, const LowDimAffinity& qc, const Matrix& y,
                   int threads = 1);

struct LossTrace {
    std::vector<double> kl_per_iteration;
    int iterations = 0;
    int exaggeration_end = 0;
};

// Called after each update with the re-centered layout and the KL that was
// recorded for the iteration. Used by tests and trace dumps.
using IterationObserver = std::function<void(int iter, const Matrix& y, double kl)>;

// Momentum gradient descent on the KL objective. The first
// early_exaggeration_iters iterations optimize factor*p (no
// renormalization); the trace always records KL against the true p.
// Deterministic for a fixed seed and any worker count.
std::pair<Embedding, LossTrace> run_tsne(const AffinityMatrix& p, const TsneConfig& cfg,
                                         const ScalarMath& math = {}, int threads = 1,
                                         const IterationObserver& observer = {});

} // namespace desne
