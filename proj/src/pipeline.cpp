#include "desne/pipeline.hpp"

#include "desne/distance.hpp"
#include "desne/error.hpp"
#include "desne/rng.hpp"
#include "desne/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace desne {

namespace {

struct StageResult {
    CoresetSelection selection; // indices local to the stage input
    Matrix embedding;
    double error_sum = 0.0;
    double final_kl = 0.0;
    std::size_t nonempty_cells = 0;
    std::size_t covered_cells = 0;
    LossTrace trace;
};

// One full embed+grid+sample chain over a (sub)dataset.
StageResult run_stage(const Matrix& data, const SampleConfig& cfg, std::uint64_t stage_seed,
                      long target, const std::string& source_id) {
    StageResult out;

    DistanceMatrix d2 = pairwise_sq_dist(data, cfg.tile, cfg.threads);

    DEConfig de = cfg.de;
    de.seed = stage_seed;
    SigmaVector sigmas =
        solve_sigmas(d2, cfg.perplexity, cfg.optimizer, de, cfg.threads, cfg.math);
    out.error_sum = std::accumulate(sigmas.per_row_error.begin(), sigmas.per_row_error.end(), 0.0);

    AffinityMatrix p =
        joint_affinities(conditional_matrix(d2, sigmas, cfg.threads, cfg.math));

    TsneConfig tc = cfg.tsne;
    tc.seed = stage_seed;
    auto [embedding, trace] = run_tsne(p, tc, cfg.math, cfg.threads);
    out.embedding = std::move(embedding.y);
    out.final_kl = trace.kl_per_iteration.back();
    out.trace = std::move(trace);

    GridSpec spec = GridSpec::cover(out.embedding, cfg.grid_cells);
    CellAssignment assign = grid_partition(out.embedding, spec);
    std::map<int, int> quotas = allocate_quotas_target(assign, target);
    out.selection = sample_cells(assign, quotas, stage_seed, cfg.keeping_ratio, source_id);

    out.nonempty_cells = assign.occupancy.size();
    for (const auto& [cell, quota] : quotas) {
        if (quota > 0) ++out.covered_cells;
    }
    return out;
}

Matrix take_rows(const Matrix& data, const std::vector<int>& rows) {
    Matrix out(rows.size(), data.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < data.cols(); ++k) {
            out(i, k) = data(static_cast<std::size_t>(rows[i]), k);
        }
    }
    return out;
}

} // namespace

SampleResult run_sample_pipeline(const DatasetMatrix& dataset, const SampleConfig& cfg) {
    dataset.validate();
    const DatasetMatrix normalized = normalize(dataset, cfg.normalize_mode);
    const std::size_t n = normalized.n();
    const long target = selection_target(cfg.keeping_ratio, n);
    if (target < 1) {
        throw DataError("keeping ratio " + format_g17(cfg.keeping_ratio) + " selects 0 of " +
                        std::to_string(n) + " samples");
    }

    SampleResult result;
    result.labels = normalized.labels;

    if (!cfg.per_class) {
        StageResult stage =
            run_stage(normalized.data, cfg, cfg.seed, target, normalized.source_id);
        result.selection = std::move(stage.selection);
        result.embedding = std::move(stage.embedding);
        result.mean_perplexity_error = stage.error_sum / static_cast<double>(n);
        result.final_kl = stage.final_kl;
        result.nonempty_cells = stage.nonempty_cells;
        result.covered_cells = stage.covered_cells;
        result.trace = std::move(stage.trace);
        result.selection.validate(n);
        return result;
    }

    // Per-class: group rows by label, run one stage per class, and split
    // the global target across classes by largest remainder so the merged
    // selection still counts round(KR * N).
    std::map<int, std::vector<int>> classes;
    for (std::size_t i = 0; i < n; ++i) {
        classes[normalized.labels[i]].push_back(static_cast<int>(i));
    }
    std::vector<std::size_t> counts;
    counts.reserve(classes.size());
    for (const auto& [label, rows] : classes) counts.push_back(rows.size());
    std::vector<long> class_targets = apportion_largest_remainder(counts, target);

    result.embedding = Matrix(n, 2);
    result.selection.keeping_ratio = cfg.keeping_ratio;
    result.selection.seed = cfg.seed;
    result.selection.source_id = normalized.source_id;

    double error_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t kl_rows = 0;
    std::size_t largest_class = 0;
    std::size_t ci = 0;
    for (const auto& [label, rows] : classes) {
        const long class_target = class_targets[ci++];
        const std::uint64_t class_seed =
            mix_seed(cfg.seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(label) + 1));
        if (rows.size() < 2) {
            // A singleton class cannot be embedded; it is either kept whole
            // or skipped, depending on its target.
            if (class_target >= 1) {
                result.selection.indices.push_back(rows[0]);
                result.selection.cell_of[rows[0]] = 0;
            }
            continue;
        }
        if (class_target < 1) continue;

        SampleConfig sub = cfg;
        sub.per_class = false;
        StageResult stage = run_stage(take_rows(normalized.data, rows), sub, class_seed,
                                      class_target, normalized.source_id);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            result.embedding(static_cast<std::size_t>(rows[i]), 0) = stage.embedding(i, 0);
            result.embedding(static_cast<std::size_t>(rows[i]), 1) = stage.embedding(i, 1);
        }
        for (int local : stage.selection.indices) {
            int global = rows[static_cast<std::size_t>(local)];
            result.selection.indices.push_back(global);
            result.selection.cell_of[global] = stage.selection.cell_of.at(local);
        }
        error_sum += stage.error_sum;
        kl_sum += stage.final_kl * static_cast<double>(rows.size());
        kl_rows += rows.size();
        result.nonempty_cells += stage.nonempty_cells;
        result.covered_cells += stage.covered_cells;
        if (rows.size() > largest_class) {
            largest_class = rows.size();
            result.trace = std::move(stage.trace);
        }
    }
    std::sort(result.selection.indices.begin(), result.selection.indices.end());
    result.mean_perplexity_error = error_sum / static_cast<double>(n);
    result.final_kl = kl_rows ? kl_sum / static_cast<double>(kl_rows) : 0.0;
    result.selection.validate(n);
    return result;
}

} // namespace desne
