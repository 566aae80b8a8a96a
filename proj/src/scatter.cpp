#include "desne/scatter.hpp"

#include "desne/error.hpp"
#include "desne/util.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace desne {

void write_embedding_csv(const std::filesystem::path& path, const Matrix& y,
                         const std::vector<int>& labels, const std::string& config_hash) {
    if (y.cols() != 2 || labels.size() != y.rows()) {
        throw std::invalid_argument("write_embedding_csv: shape mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "# config_hash=" << config_hash << "\n";
    out << "index,label,y0,y1\n";
    for (std::size_t i = 0; i < y.rows(); ++i) {
        out << i << "," << labels[i] << "," << format_g17(y(i, 0)) << "," << format_g17(y(i, 1))
            << "\n";
    }
    if (!out) throw DataError("short write: " + path.string());
}

EmbeddingTable read_embedding_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding: " + path.string());
    EmbeddingTable t;
    std::vector<std::array<double, 2>> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("index,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4) {
            throw DataError("embedding csv: expected 4 cells at line " + std::to_string(lineno));
        }
        try {
            t.labels.push_back(std::stoi(cells[1]));
            pts.push_back({std::stod(cells[2]), std::stod(cells[3])});
        } catch (const std::exception&) {
            throw DataError("embedding csv: bad value at line " + std::to_string(lineno));
        }
    }
    if (pts.empty()) throw DataError("embedding csv: no rows in " + path.string());
    t.y = Matrix(pts.size(), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        t.y(i, 0) = pts[i][0];
        t.y(i, 1) = pts[i][1];
    }
    return t;
}

void write_scatter_csv(const std::filesystem::path& path, const Matrix& y,
                       const std::vector<int>& labels, const std::vector<bool>& selected,
                       const std::string& config_hash) {
    if (y.cols() != 2 || labels.size() != y.rows() || selected.size() != y.rows()) {
        throw std::invalid_argument("write_scatter_csv: shape mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "# config_hash=" << config_hash << "\n";
    out << "index,label,y0,y1,selected\n";
    for (std::size_t i = 0; i < y.rows(); ++i) {
        out << i << "," << labels[i] << "," << format_g17(y(i, 0)) << "," << format_g17(y(i, 1))
            << "," << (selected[i] ? 1 : 0) << "\n";
    }
    if (!out) throw DataError("short write: " + path.string());
}

void write_scatter_svg(const std::filesystem::path& path, const Matrix& y,
                       const std::vector<bool>& selected, const std::string& config_hash) {
    if (y.cols() != 2 || selected.size() != y.rows()) {
        throw std::invalid_argument("write_scatter_svg: shape mismatch");
    }
    const double size = 640.0;
    const double margin = 20.0;
    double lo[2], hi[2];
    for (std::size_t k = 0; k < 2; ++k) {
        lo[k] = hi[k] = y(0, k);
        for (std::size_t i = 1; i < y.rows(); ++i) {
            lo[k] = std::min(lo[k], y(i, k));
            hi[k] = std::max(hi[k], y(i, k));
        }
        if (lo[k] == hi[k]) {
            lo[k] -= 0.5;
            hi[k] += 0.5;
        }
    }
    auto px = [&](double v, std::size_t k) {
        double t = (v - lo[k]) / (hi[k] - lo[k]);
        if (k == 1) t = 1.0 - t; // SVG y grows downward
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", margin + t * (size - 2.0 * margin));
        return std::string(buf);
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
          "viewBox=\"0 0 640 640\">\n";
    os << "<!-- config_hash=" << config_hash << " -->\n";
    os << "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < y.rows(); ++i) {
        if (selected[i]) continue;
        os << "<circle cx=\"" << px(y(i, 0), 0) << "\" cy=\"" << px(y(i, 1), 1)
           << "\" r=\"2\" fill=\"#1f77b4\" fill-opacity=\"0.55\"/>\n";
    }
    for (std::size_t i = 0; i < y.rows(); ++i) {
        if (!selected[i]) continue;
        os << "<circle class=\"selected\" cx=\"" << px(y(i, 0), 0) << "\" cy=\""
           << px(y(i, 1), 1) << "\" r=\"3\" fill=\"#ff7f0e\"/>\n";
    }
    os << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << os.str();
    if (!out) throw DataError("short write: " + path.string());
}

} // namespace desne
