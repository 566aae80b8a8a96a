#pragma once

#include "desne/dataset.hpp"
#include "desne/matrix.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace desne {

struct GridSpec {
    int cells_per_axis = 32;
    std::array<std::pair<double, double>, 2> bounds{{{0.0, 1.0}, {0.0, 1.0}}};

    // Bounds covering every embedded point; a collapsed axis (max == min)
    // is expanded by +-0.5.
    static GridSpec cover(const Matrix& y, int cells_per_axis = 32);

    void validate() const;
};

struct CellAssignment {
    int cells_per_axis = 0;
    std::vector<int> cell_of;                  // per point, ix + iy * G
    std::map<int, std::vector<int>> occupancy; // cell id -> members

    std::size_t n_points() const { return cell_of.size(); }
};

// Assigns each 2-D point to the cell floor((v - min)/(max - min) * G),
// clamped into [0, G-1] per axis. Members of each cell are stored sorted
// by (y0, y1, index), so the per-cell sampling order depends only on the
// point coordinates, not on the input order.
CellAssignment grid_partition(const Matrix& y, const GridSpec& spec);

// Largest-remainder apportionment of `target` units across groups with the
// given sizes: floor(target * size / total) per group, the rest by largest
// fractional remainder with ties going to the earlier group. No group
// exceeds its size.
std::vector<long> apportion_largest_remainder(const std::vector<std::size_t>& counts,
                                              long target);

// Proportional quotas hitting `target` exactly: floor(target * |cell| / N)
// per cell, then the remaining by largest fractional remainder (ties to
// lower cell id). Never exceeds a cell's occupancy.
std::map<int, int> allocate_quotas_target(const CellAssignment& assign, long target);

// Same with target = round(keeping_ratio * N).
std::map<int, int> allocate_quotas(const CellAssignment& assign, double keeping_ratio);

// Draws quota_c members per cell with a seeded partial Fisher-Yates
// shuffle; the cell stream seed mixes (seed, cell id), so cells can be
// sampled concurrently and the merged, ascending-sorted selection is
// independent of scheduling and of input point order.
CoresetSelection sample_cells(const CellAssignment& assign, const std::map<int, int>& quotas,
                              std::uint64_t seed, double keeping_ratio,
                              const std::string& source_id);

long selection_target(double keeping_ratio, std::size_t n);

} // namespace desne
