#pragma once

#include "desne/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace desne {

enum class DatasetFormat { kCifarBinary, kRawF32, kCsv };
enum class NormalizeMode { kUnitRange, kStandardize, kNone };

DatasetFormat parse_format(const std::string& name);
NormalizeMode parse_normalize(const std::string& name);

// A loaded dataset: one flattened sample per row, values already scaled
// into [0,1] for byte-pixel sources. labels[i] is -1 when the source
// carries no label. Immutable once built; safe to share across workers.
struct DatasetMatrix {
    Matrix data;
    std::vector<int> labels;       // length N, -1 where absent
    std::vector<std::size_t> dims; // (h, w, c) for images, (d,) for tabular
    std::string source_id;

    std::size_t n() const { return data.rows(); }
    std::size_t d() const { return data.cols(); }
    bool has_labels() const;
    void validate() const;
};

// cifar-binary: records of [1 label byte][32*32*3 pixel bytes], pixels
//   scaled by 1/255.
// raw-f32: little-endian float payload described by a sidecar JSON header
//   at <path>.json with fields {n, d, dims, endianness}.
// csv: one sample per row; csv_labels selects an integer label in the
//   final column.
DatasetMatrix load_dataset(const std::filesystem::path& path, DatasetFormat format,
                           bool csv_labels = false);

DatasetMatrix normalize(const DatasetMatrix& m, NormalizeMode mode);

// Writes <path> (float32 payload) plus the <path>.json sidecar header.
// Loading the pair back reproduces the matrix bit-exactly when the input
// came from float32 data.
void save_raw_f32(const DatasetMatrix& m, const std::filesystem::path& path);

// The selected subset: strictly increasing indices into the source
// dataset, the grid cell each came from, and the sampling parameters.
struct CoresetSelection {
    std::vector<int> indices;
    double keeping_ratio = 0.0;
    std::map<int, int> cell_of; // selected index -> grid cell id
    std::uint64_t seed = 0;
    std::string source_id;

    void validate(std::size_t n_total) const;
};

// Extra keys echoed into manifests by the CLI.
struct ManifestExtras {
    std::vector<std::pair<std::string, std::string>> config; // key order preserved
    std::string config_hash;
};

// JSON manifest with sorted keys and %.17g float text; two writes of the
// same selection produce byte-identical files.
void write_selection(const CoresetSelection& sel, const std::filesystem::path& path,
                     const ManifestExtras& extras = {});
CoresetSelection read_selection(const std::filesystem::path& path);

} // namespace desne
