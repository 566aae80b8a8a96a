#include "desne/dataset.hpp"

#include "desne/error.hpp"
#include "desne/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace desne {

namespace {

constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarChannels = 3;
constexpr std::size_t kCifarPixels = kCifarSide * kCifarSide * kCifarChannels;
constexpr std::size_t kCifarRecord = 1 + kCifarPixels;

std::vector<char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return bytes;
}

DatasetMatrix load_cifar_binary(const std::filesystem::path& path) {
    std::vector<char> bytes = read_all(path);
    if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
        throw DataError("cifar-binary: file size " + std::to_string(bytes.size()) +
                        " is not a multiple of the " + std::to_string(kCifarRecord) +
                        "-byte record");
    }
    const std::size_t n = bytes.size() / kCifarRecord;
    DatasetMatrix m;
    m.data = Matrix(n, kCifarPixels);
    m.labels.assign(n, -1);
    m.dims = {kCifarSide, kCifarSide, kCifarChannels};
    m.source_id = path.filename().string();
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec =
            reinterpret_cast<const unsigned char*>(bytes.data()) + i * kCifarRecord;
        m.labels[i] = rec[0];
        for (std::size_t k = 0; k < kCifarPixels; ++k) {
            m.data(i, k) = static_cast<double>(rec[1 + k]) / 255.0;
        }
    }
    m.validate();
    return m;
}

DatasetMatrix load_raw_f32(const std::filesystem::path& path) {
    std::filesystem::path header_path = path;
    header_path += ".json";
    std::ifstream hin(header_path);
    if (!hin) throw DataError("raw-f32: missing sidecar header " + header_path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hin);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("raw-f32: bad header " + header_path.string() + ": " + e.what());
    }
    if (!header.contains("n") || !header.contains("d")) {
        throw DataError("raw-f32: header must declare n and d");
    }
    const std::size_t n = header["n"].get<std::size_t>();
    const std::size_t d = header["d"].get<std::size_t>();
    if (header.value("endianness", "little") != "little") {
        throw DataError("raw-f32: only little-endian payloads are supported");
    }

    std::vector<char> bytes = read_all(path);
    if (bytes.size() != n * d * sizeof(float)) {
        throw DataError("raw-f32: header declares " + std::to_string(n * d * sizeof(float)) +
                        " payload bytes, file has " + std::to_string(bytes.size()));
    }
    static_assert(std::endian::native == std::endian::little,
                  "raw-f32 loader assumes a little-endian host");

    DatasetMatrix m;
    m.data = Matrix(n, d);
    m.labels.assign(n, -1);
    if (header.contains("dims")) {
        for (const auto& v : header["dims"]) m.dims.push_back(v.get<std::size_t>());
    } else {
        m.dims = {d};
    }
    m.source_id = path.filename().string();
    const float* f = reinterpret_cast<const float*>(bytes.data());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) m.data(i, k) = static_cast<double>(f[i * d + k]);
    }
    m.validate();
    return m;
}

DatasetMatrix load_csv(const std::filesystem::path& path, bool csv_labels) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &pos);
            } catch (const std::exception&) {
                throw DataError("csv: non-numeric cell '" + cell + "' at line " +
                                std::to_string(lineno));
            }
            while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
            if (pos != cell.size()) {
                throw DataError("csv: non-numeric cell '" + cell + "' at line " +
                                std::to_string(lineno));
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError("csv: row " + std::to_string(lineno) + " has " +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("csv: no rows in " + path.string());
    const std::size_t width = rows.front().size();
    if (csv_labels && width < 2) throw DataError("csv: label column requires at least 2 columns");
    const std::size_t d = csv_labels ? width - 1 : width;

    DatasetMatrix m;
    m.data = Matrix(rows.size(), d);
    m.labels.assign(rows.size(), -1);
    m.dims = {d};
    m.source_id = path.filename().string();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) m.data(i, k) = rows[i][k];
        if (csv_labels) m.labels[i] = static_cast<int>(std::lround(rows[i][width - 1]));
    }
    m.validate();
    return m;
}

} // namespace

DatasetFormat parse_format(const std::string& name) {
    if (name == "cifar-binary") return DatasetFormat::kCifarBinary;
    if (name == "raw-f32") return DatasetFormat::kRawF32;
    if (name == "csv") return DatasetFormat::kCsv;
    throw DataError("unknown dataset format: " + name);
}

NormalizeMode parse_normalize(const std::string& name) {
    if (name == "unit-range") return NormalizeMode::kUnitRange;
    if (name == "per-feature-standardize") return NormalizeMode::kStandardize;
    if (name == "none") return NormalizeMode::kNone;
    throw DataError("unknown normalize mode: " + name);
}

bool DatasetMatrix::has_labels() const {
    return std::any_of(labels.begin(), labels.end(), [](int l) { return l >= 0; });
}

void DatasetMatrix::validate() const {
    if (n() < 2) throw DataError("dataset must have at least 2 samples, got " +
                                 std::to_string(n()));
    if (d() < 1) throw DataError("dataset must have at least 1 feature");
    if (!data.all_finite()) throw DataError("dataset contains non-finite values");
    if (labels.size() != n()) throw DataError("label count does not match sample count");
}

DatasetMatrix load_dataset(const std::filesystem::path& path, DatasetFormat format,
                           bool csv_labels) {
    switch (format) {
        case DatasetFormat::kCifarBinary: return load_cifar_binary(path);
        case DatasetFormat::kRawF32: return load_raw_f32(path);
        case DatasetFormat::kCsv: return load_csv(path, csv_labels);
    }
    throw DataError("unknown dataset format");
}

DatasetMatrix normalize(const DatasetMatrix& m, NormalizeMode mode) {
    if (mode == NormalizeMode::kNone) return m;
    DatasetMatrix out = m;
    const std::size_t n = m.n();
    const std::size_t d = m.d();
    if (mode == NormalizeMode::kUnitRange) {
        double lo = m.data(0, 0), hi = m.data(0, 0);
        for (double v : m.data.values()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi) return out; // constant data maps to itself
        const double scale = 1.0 / (hi - lo);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) out.data(i, k) = (m.data(i, k) - lo) * scale;
        }
        return out;
    }
    // Per-feature standardization; constant columns collapse to zero.
    for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += m.data(i, k);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = m.data(i, k) - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        if (var == 0.0) {
            for (std::size_t i = 0; i < n; ++i) out.data(i, k) = 0.0;
        } else {
            const double inv_sd = 1.0 / std::sqrt(var);
            for (std::size_t i = 0; i < n; ++i) out.data(i, k) = (m.data(i, k) - mean) * inv_sd;
        }
    }
    return out;
}

void save_raw_f32(const DatasetMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    std::vector<float> buf(m.n() * m.d());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = static_cast<float>(m.data.values()[i]);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw DataError("short write: " + path.string());
    out.close();

    std::ostringstream header;
    header << "{\"d\":" << m.d() << ",\"dims\":[";
    for (std::size_t i = 0; i < m.dims.size(); ++i) {
        header << (i ? "," : "") << m.dims[i];
    }
    header << "],\"endianness\":\"little\",\"n\":" << m.n() << "}\n";
    std::filesystem::path header_path = path;
    header_path += ".json";
    std::ofstream hout(header_path, std::ios::binary);
    if (!hout) throw DataError("cannot write file: " + header_path.string());
    hout << header.str();
}

void CoresetSelection::validate(std::size_t n_total) const {
    if (!(keeping_ratio > 0.0 && keeping_ratio <= 1.0)) {
        throw DataError("keeping_ratio must be in (0, 1]");
    }
    long expect = std::lround(keeping_ratio * static_cast<double>(n_total));
    if (static_cast<long>(indices.size()) != expect) {
        throw InternalError("selection size " + std::to_string(indices.size()) +
                            " does not match round(KR*N) = " + std::to_string(expect));
    }
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= n_total) {
            throw InternalError("selection index out of range");
        }
        if (i > 0 && indices[i] <= indices[i - 1]) {
            throw InternalError("selection indices not strictly increasing");
        }
    }
}

void write_selection(const CoresetSelection& sel, const std::filesystem::path& path,
                     const ManifestExtras& extras) {
    // Hand-rendered JSON: alphabetical keys, %.17g floats, no whitespace.
    // Byte-identical output for identical selections.
    std::ostringstream os;
    os << "{\"cells\":[";
    for (std::size_t i = 0; i < sel.indices.size(); ++i) {
        auto it = sel.cell_of.find(sel.indices[i]);
        os << (i ? "," : "") << (it == sel.cell_of.end() ? -1 : it->second);
    }
    os << "]";
    if (!extras.config.empty()) {
        os << ",\"config\":{";
        for (std::size_t i = 0; i < extras.config.size(); ++i) {
            os << (i ? "," : "") << nlohmann::json(extras.config[i].first).dump() << ":"
               << nlohmann::json(extras.config[i].second).dump();
        }
        os << "}";
    }
    if (!extras.config_hash.empty()) {
        os << ",\"config_hash\":" << nlohmann::json(extras.config_hash).dump();
    }
    os << ",\"indices\":[";
    for (std::size_t i = 0; i < sel.indices.size(); ++i) {
        os << (i ? "," : "") << sel.indices[i];
    }
    os << "],\"keeping_ratio\":" << format_g17(sel.keeping_ratio) << ",\"seed\":" << sel.seed
       << ",\"source_id\":" << nlohmann::json(sel.source_id).dump() << "}\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << os.str();
    if (!out) throw DataError("short write: " + path.string());
}

CoresetSelection read_selection(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad manifest " + path.string() + ": " + e.what());
    }
    CoresetSelection sel;
    try {
        sel.indices = j.at("indices").get<std::vector<int>>();
        sel.keeping_ratio = j.at("keeping_ratio").get<double>();
        sel.seed = j.at("seed").get<std::uint64_t>();
        sel.source_id = j.at("source_id").get<std::string>();
        const auto& cells = j.at("cells");
        if (cells.size() != sel.indices.size()) {
            throw DataError("manifest cells/indices length mismatch");
        }
        for (std::size_t i = 0; i < sel.indices.size(); ++i) {
            sel.cell_of[sel.indices[i]] = cells[i].get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad manifest " + path.string() + ": " + e.what());
    }
    return sel;
}

} // namespace desne
