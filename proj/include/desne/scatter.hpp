#pragma once

#include "desne/matrix.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace desne {

// Embedding table: "index,label,y0,y1" rows after a config-hash comment.
void write_embedding_csv(const std::filesystem::path& path, const Matrix& y,
                         const std::vector<int>& labels, const std::string& config_hash);

struct EmbeddingTable {
    Matrix y;
    std::vector<int> labels;
};

EmbeddingTable read_embedding_csv(const std::filesystem::path& path);

// Scatter table: embedding rows plus a 0/1 selected column.
void write_scatter_csv(const std::filesystem::path& path, const Matrix& y,
                       const std::vector<int>& labels, const std::vector<bool>& selected,
                       const std::string& config_hash);

// Static SVG scatter: unselected points in blue, selected points drawn on
// top in orange. Output bytes are deterministic.
void write_scatter_svg(const std::filesystem::path& path, const Matrix& y,
                       const std::vector<bool>& selected, const std::string& config_hash);

} // namespace desne
