#include "desne/grid.hpp"

#include "desne/error.hpp"
#include "desne/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace desne {

GridSpec GridSpec::cover(const Matrix& y, int cells_per_axis) {
    if (y.cols() != 2) throw std::invalid_argument("grid: embedding must be 2-D");
    if (y.rows() == 0) throw std::invalid_argument("grid: empty embedding");
    GridSpec spec;
    spec.cells_per_axis = cells_per_axis;
    for (std::size_t k = 0; k < 2; ++k) {
        double lo = y(0, k), hi = y(0, k);
        for (std::size_t i = 1; i < y.rows(); ++i) {
            lo = std::min(lo, y(i, k));
            hi = std::max(hi, y(i, k));
        }
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        spec.bounds[k] = {lo, hi};
    }
    spec.validate();
    return spec;
}

void GridSpec::validate() const {
    if (cells_per_axis < 1) throw std::invalid_argument("grid: cells_per_axis must be >= 1");
    for (const auto& [lo, hi] : bounds) {
        if (!(lo < hi)) throw std::invalid_argument("grid: bounds must satisfy min < max");
    }
}

CellAssignment grid_partition(const Matrix& y, const GridSpec& spec) {
    spec.validate();
    if (y.cols() != 2) throw std::invalid_argument("grid_partition: embedding must be 2-D");
    const std::size_t n = y.rows();
    const int g = spec.cells_per_axis;

    CellAssignment out;
    out.cells_per_axis = g;
    out.cell_of.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int idx[2];
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& [lo, hi] = spec.bounds[k];
            double t = (y(i, k) - lo) / (hi - lo) * static_cast<double>(g);
            int c = static_cast<int>(std::floor(t));
            idx[k] = std::clamp(c, 0, g - 1); // points at the max bound land in the last cell
        }
        out.cell_of[i] = idx[0] + idx[1] * g;
    }

    // Canonical member order: by coordinates, index as tie-break. Sampling
    // then picks the same coordinate multiset no matter how the input rows
    // were ordered.
    for (std::size_t i = 0; i < n; ++i) {
        out.occupancy[out.cell_of[i]].push_back(static_cast<int>(i));
    }
    for (auto& [cell, members] : out.occupancy) {
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            if (y(a, 0) != y(b, 0)) return y(a, 0) < y(b, 0);
            if (y(a, 1) != y(b, 1)) return y(a, 1) < y(b, 1);
            return a < b;
        });
    }
    return out;
}

long selection_target(double keeping_ratio, std::size_t n) {
    if (!(keeping_ratio > 0.0 && keeping_ratio <= 1.0)) {
        throw std::invalid_argument("keeping_ratio must be in (0, 1]");
    }
    return std::lround(keeping_ratio * static_cast<double>(n));
}

std::vector<long> apportion_largest_remainder(const std::vector<std::size_t>& counts,
                                              long target) {
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (target < 1) throw std::invalid_argument("apportion: target must be >= 1");
    if (target > static_cast<long>(total)) {
        throw std::invalid_argument("apportion: target exceeds total count");
    }

    std::vector<long> quotas(counts.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders; // (-remainder, group)
    long assigned = 0;
    const double ratio = static_cast<double>(target) / static_cast<double>(total);
    for (std::size_t g = 0; g < counts.size(); ++g) {
        double share = ratio * static_cast<double>(counts[g]);
        quotas[g] = static_cast<long>(std::floor(share));
        assigned += quotas[g];
        remainders.emplace_back(-(share - std::floor(share)), g);
    }
    std::sort(remainders.begin(), remainders.end()); // largest first, ties to earlier group

    long leftover = target - assigned;
    for (const auto& [neg_rem, g] : remainders) {
        if (leftover <= 0) break;
        if (quotas[g] < static_cast<long>(counts[g])) {
            ++quotas[g];
            --leftover;
        }
    }
    // Floating-point remainders can in principle leave a straggler; fill it
    // from any group with spare capacity, earliest first.
    for (std::size_t g = 0; leftover > 0 && g < counts.size(); ++g) {
        while (leftover > 0 && quotas[g] < static_cast<long>(counts[g])) {
            ++quotas[g];
            --leftover;
        }
    }
    if (leftover != 0) throw InternalError("apportion: could not hit target");
    return quotas;
}

std::map<int, int> allocate_quotas_target(const CellAssignment& assign, long target) {
    std::vector<std::size_t> counts;
    std::vector<int> cells;
    counts.reserve(assign.occupancy.size());
    for (const auto& [cell, members] : assign.occupancy) {
        cells.push_back(cell);
        counts.push_back(members.size());
    }
    std::vector<long> q = apportion_largest_remainder(counts, target);
    std::map<int, int> quotas;
    for (std::size_t g = 0; g < cells.size(); ++g) {
        quotas[cells[g]] = static_cast<int>(q[g]);
    }
    return quotas;
}

std::map<int, int> allocate_quotas(const CellAssignment& assign, double keeping_ratio) {
    return allocate_quotas_target(assign, selection_target(keeping_ratio, assign.n_points()));
}

CoresetSelection sample_cells(const CellAssignment& assign, const std::map<int, int>& quotas,
                              std::uint64_t seed, double keeping_ratio,
                              const std::string& source_id) {
    CoresetSelection sel;
    sel.keeping_ratio = keeping_ratio;
    sel.seed = seed;
    sel.source_id = source_id;

    for (const auto& [cell, quota] : quotas) {
        if (quota == 0) continue;
        auto it = assign.occupancy.find(cell);
        if (it == assign.occupancy.end() ||
            quota > static_cast<int>(it->second.size())) {
            throw InternalError("sample_cells: quota exceeds occupancy in cell " +
                                std::to_string(cell));
        }
        std::vector<int> members = it->second;
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cell)));
        // Partial Fisher-Yates: the first `quota` slots are the draw.
        for (int k = 0; k < quota; ++k) {
            std::size_t j = static_cast<std::size_t>(k) + rng.index(members.size() - k);
            std::swap(members[k], members[j]);
        }
        for (int k = 0; k < quota; ++k) {
            sel.indices.push_back(members[k]);
            sel.cell_of[members[k]] = cell;
        }
    }
    std::sort(sel.indices.begin(), sel.indices.end());
    sel.validate(assign.n_points());
    return sel;
}

} // namespace desne
