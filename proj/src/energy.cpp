#include "desne/energy.hpp"

#include "desne/error.hpp"
#include "desne/util.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace desne {

void EnergyCoefficients::validate() const {
    if (!(e_pcb_pj > 0.0) || !(e_nm_pj > 0.0)) {
        throw std::invalid_argument("energy coefficients must be positive");
    }
    if (!(e_nm_pj < e_pcb_pj)) {
        throw std::invalid_argument("near-memory energy must be below PCB energy");
    }
}

void TransferScenario::validate() const {
    if (!(keeping_ratio > 0.0 && keeping_ratio <= 1.0)) {
        throw std::invalid_argument("keeping_ratio must be in (0, 1]");
    }
    if (dataset_bits == 0) throw std::invalid_argument("dataset_bits must be positive");
    for (double p : {pcb_full_passes, nm_full_passes, kept_pcb_passes}) {
        if (!(std::isfinite(p) && p >= 0.0)) {
            throw std::invalid_argument("pass counts must be finite and >= 0");
        }
    }
}

double scenario_energy(const TransferScenario& s, const EnergyCoefficients& c) {
    s.validate();
    c.validate();
    const double bits = static_cast<double>(s.dataset_bits);
    const double pj = bits * (s.pcb_full_passes * c.e_pcb_pj + s.nm_full_passes * c.e_nm_pj +
                              s.kept_pcb_passes * s.keeping_ratio * c.e_pcb_pj);
    return pj * 1e-12; // pJ -> J
}

TransferMethod parse_method(const std::string& name) {
    if (name == "nms") return TransferMethod::kNms;
    if (name == "dq") return TransferMethod::kDq;
    if (name == "nessa") return TransferMethod::kNessa;
    throw DataError("unknown transfer method: " + name);
}

std::string method_name(TransferMethod m) {
    switch (m) {
        case TransferMethod::kNms: return "nms";
        case TransferMethod::kDq: return "dq";
        case TransferMethod::kNessa: return "nessa";
    }
    return "?";
}

TransferScenario preset(TransferMethod method, double keeping_ratio,
                        std::uint64_t dataset_bits, const PresetPasses& passes) {
    TransferScenario s;
    s.keeping_ratio = keeping_ratio;
    s.dataset_bits = dataset_bits;
    s.kept_pcb_passes = passes.kept_pcb;
    switch (method) {
        case TransferMethod::kNms:
            s.nm_full_passes = passes.nms_nm;
            break;
        case TransferMethod::kDq:
            s.pcb_full_passes = passes.dq_pcb;
            break;
        case TransferMethod::kNessa:
            s.pcb_full_passes = passes.nessa_pcb;
            break;
    }
    s.validate();
    return s;
}

std::vector<EnergyRow> compare(const std::vector<TransferMethod>& methods,
                               const std::vector<double>& keeping_ratios,
                               std::uint64_t dataset_bits, const EnergyCoefficients& c,
                               const PresetPasses& passes) {
    if (methods.empty() || keeping_ratios.empty()) {
        throw std::invalid_argument("compare: methods and keeping ratios must be non-empty");
    }
    std::vector<EnergyRow> rows;
    rows.reserve(methods.size() * keeping_ratios.size());
    for (double kr : keeping_ratios) {
        const double nms_energy =
            scenario_energy(preset(TransferMethod::kNms, kr, dataset_bits, passes), c);
        for (TransferMethod m : methods) {
            EnergyRow row;
            row.method = method_name(m);
            row.keeping_ratio = kr;
            row.energy_j = scenario_energy(preset(m, kr, dataset_bits, passes), c);
            row.ratio_vs_nms = row.energy_j / nms_energy;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string energy_report_csv(const std::vector<EnergyRow>& rows,
                              const std::string& config_hash) {
    std::ostringstream os;
    os << "# config_hash=" << config_hash << "\n";
    os << "method,keeping_ratio,energy_j,ratio_vs_nms\n";
    for (const auto& r : rows) {
        os << r.method << "," << format_g17(r.keeping_ratio) << "," << format_g17(r.energy_j)
           << "," << format_g17(r.ratio_vs_nms) << "\n";
    }
    return os.str();
}

std::string energy_report_json(const std::vector<EnergyRow>& rows,
                               const std::string& config_hash) {
    std::ostringstream os;
    os << "{\"config_hash\":\"" << config_hash << "\",\"rows\":[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        os << (i ? "," : "") << "{\"energy_j\":" << format_g17(r.energy_j)
           << ",\"keeping_ratio\":" << format_g17(r.keeping_ratio) << ",\"method\":\""
           << r.method << "\",\"ratio_vs_nms\":" << format_g17(r.ratio_vs_nms) << "}";
    }
    os << "]}\n";
    return os.str();
}

} // namespace desne
