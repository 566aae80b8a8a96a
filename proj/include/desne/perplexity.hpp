#pragma once

#include "desne/distance.hpp"
#include "desne/kernels.hpp"
#include "desne/matrix.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace desne {

// Differential-evolution settings. Defaults follow the published algorithm:
// F = 0.5, CR = 0.7, pop 30, 10000 iterations, eps 1e-10, bounds
// [1e-20, 1000]. eps is treated as a convergence stop (the listing declares
// it but never branches on it).
struct DEConfig {
    double f_weight = 0.5;
    double cr = 0.7;
    int pop_size = 30;
    long max_iter = 10000;
    double epsilon = 1e-10;
    double lb = 1e-20;
    double ub = 1000.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DEResult {
    double best_individual = 0.0;
    double best_error = 0.0;
    long evals = 0;
};

// Differential evolution over a scalar genome: uniform init on [lb, ub];
// per generation and individual, mutant a + F*(b - c) from three distinct
// partners, clipped to bounds; whole-individual crossover with probability
// CR; greedy selection on |f(x) - target|. Stops early once the best error
// drops to cfg.epsilon. NaN objective values lose every comparison, so
// such points are never selected.
DEResult de_optimize(const std::function<double(double)>& objective, double target,
                     const DEConfig& cfg);

// One row of conditional affinities: out[j] = exp(-d2[j]/(2 sigma^2))
// normalized over k != self, computed with max-subtraction so adding a
// constant to the row cancels exactly. out[self] = 0.
std::vector<double> conditional_row(std::span<const double> d2_row, std::size_t self,
                                    double sigma, const ScalarMath& math = {});

// 2^H with H = -sum p*log2(p); zero entries contribute nothing.
double row_perplexity(std::span<const double> p_row, const ScalarMath& math = {});

// Perplexity of row `self` at bandwidth sigma, via the stabilized
// conditional_row. Used to validate solutions.
double row_perplexity_at(std::span<const double> d2_row, std::size_t self, double sigma,
                         const ScalarMath& math = {});

// Direct-formula perplexity without the max-subtraction guard: the
// objective every sigma search evaluates. Bandwidths small enough to
// underflow the whole kernel return NaN, which the searches treat as a
// rejected point; this keeps the optimizers out of the degenerate
// perplexity-1 plateau, where the stabilized evaluator is exactly flat
// and would strand them. Where both are finite the two evaluations agree
// to ~1e-12.
double row_perplexity_direct(std::span<const double> d2_row, std::size_t self, double sigma,
                             const ScalarMath& math = {});

// A search outcome: the chosen bandwidth and the achieved-perplexity gap
// |perplexity(sigma) - target| at that bandwidth, measured with the
// stabilized evaluator so it is always finite.
struct SigmaResult {
    double sigma = 0.0;
    double error = 0.0;
    long evals = 0;
};

// Classic bisection on sigma over [lb, ub], assuming perplexity grows with
// sigma. Stops at the usual convergence tolerance on |perplexity - target|
// or after max_rounds halvings, whichever comes first, and returns the
// midpoint plus its error. Rows where bisection misbehaves (unreachable
// targets, degenerate evaluations pushing the bounds the wrong way) are
// reported as-is, not repaired.
SigmaResult binary_search_sigma(std::span<const double> d2_row, std::size_t self,
                                double target, int max_rounds = 64, double tol = 1e-6,
                                const ScalarMath& math = {}, double lb = 1e-20,
                                double ub = 1000.0);

// Simulated annealing over log sigma: T0 = 1, geometric cooling at 0.95,
// 2000 steps, Gaussian proposals scaled by the temperature (floored so the
// walk keeps moving late). Returns the best visited point.
SigmaResult anneal_sigma(std::span<const double> d2_row, std::size_t self, double target,
                         std::uint64_t seed, int steps = 2000, const ScalarMath& math = {},
                         double lb = 1e-20, double ub = 1000.0);

// Symmetrized joint affinities p_ij with unit total mass.
struct AffinityMatrix {
    Matrix p;
    std::size_t n = 0;
};

// p_ij = (p_{j|i} + p_{i|j}) / (2N), zero diagonal, floored at `floor`
// before a final renormalization to total 1. Each input row must sum to 1
// over j != i within 1e-6.
AffinityMatrix joint_affinities(const Matrix& conditional, double floor = 1e-12);

enum class Optimizer { kBinarySearch, kDifferentialEvolution, kSimulatedAnnealing };

Optimizer parse_optimizer(const std::string& name);
std::string optimizer_name(Optimizer o);

// Per-row bandwidths with the achieved-perplexity error of each row.
struct SigmaVector {
    std::vector<double> sigma;
    std::vector<double> per_row_error;
    std::vector<long> evals;
    std::string optimizer_tag;

    double mean_error() const;
};

// Solves every row independently with the chosen optimizer. Rows may run
// concurrently; row r uses seed cfg.seed ^ r, so the outcome is identical
// for any worker count. Rows whose distances are all equal have constant
// perplexity N-1; they are reported with that error directly instead of
// burning a full optimizer run.
SigmaVector solve_sigmas(const DistanceMatrix& d2, double target, Optimizer opt,
                         const DEConfig& cfg, int threads = 1, const ScalarMath& math = {});

// Stacks conditional_row for every row into the N x N matrix feeding
// joint_affinities.
Matrix conditional_matrix(const DistanceMatrix& d2, const SigmaVector& sigmas,
                          int threads = 1, const ScalarMath& math = {});

} // namespace desne
