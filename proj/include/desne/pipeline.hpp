#pragma once

#include "desne/dataset.hpp"
#include "desne/grid.hpp"
#include "desne/kernels.hpp"
#include "desne/perplexity.hpp"
#include "desne/tsne.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace desne {

// Everything the sample pipeline needs beyond the dataset itself.
struct SampleConfig {
    NormalizeMode normalize_mode = NormalizeMode::kUnitRange;
    double perplexity = 15.0;
    Optimizer optimizer = Optimizer::kDifferentialEvolution;
    DEConfig de{};
    TsneConfig tsne{};
    int grid_cells = 32;
    double keeping_ratio = 0.1;
    bool per_class = false;
    std::uint64_t seed = 0;
    std::size_t tile = 64;
    int threads = 1;
    ScalarMath math{};
};

struct SampleResult {
    CoresetSelection selection;
    Matrix embedding;             // N x 2, original row order
    std::vector<int> labels;      // from the dataset
    double mean_perplexity_error = 0.0;
    double final_kl = 0.0;
    std::size_t nonempty_cells = 0;
    std::size_t covered_cells = 0; // non-empty cells contributing >= 1 sample
    LossTrace trace;               // per-class mode keeps the largest class's trace
};

// distances -> sigma search -> joint affinities -> t-SNE -> grid ->
// quotas -> per-cell sampling. With per_class set, the whole chain runs
// independently per label (bounding the N^2 stages by the class size) and
// the per-class targets are themselves allocated by largest remainder so
// the total still equals round(KR * N).
SampleResult run_sample_pipeline(const DatasetMatrix& dataset, const SampleConfig& cfg);

} // namespace desne
