#include "desne/energy.hpp"
#include "desne/error.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>

using namespace desne;

TEST_CASE("scenario_energy basics") {
    EnergyCoefficients c;
    TransferScenario zero;
    zero.dataset_bits = 1000;
    CHECK(scenario_energy(zero, c) == 0.0);

    TransferScenario one_pass;
    one_pass.pcb_full_passes = 1.0;
    one_pass.dataset_bits = 8'000'000'000ULL;
    CHECK(scenario_energy(one_pass, c) == doctest::Approx(0.08).epsilon(1e-12));
}

TEST_CASE("nms preset costs 0.05 + KR PCB-pass equivalents") {
    EnergyCoefficients c;
    const std::uint64_t bits = 1'000'000;
    TransferScenario nms = preset(TransferMethod::kNms, 0.1, bits);
    double one_pcb_pass = static_cast<double>(bits) * c.e_pcb_pj * 1e-12;
    CHECK(scenario_energy(nms, c) / one_pcb_pass == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("published ratio intervals at the three keeping ratios") {
    // Each computed ratio must land within 1% of the midpoint of the
    // published interval.
    EnergyCoefficients c;
    const std::uint64_t bits = 50000ULL * 3072 * 8;
    auto ratio = [&](TransferMethod m, double kr) {
        return scenario_energy(preset(m, kr, bits), c) /
               scenario_energy(preset(TransferMethod::kNms, kr, bits), c);
    };
    auto within_1pct = [](double value, double mid) {
        return std::fabs(value - mid) <= 0.01 * mid;
    };
    CHECK(within_1pct(ratio(TransferMethod::kDq, 0.1), 0.5 * (7.29 + 7.34)));
    CHECK(within_1pct(ratio(TransferMethod::kDq, 0.2), 0.5 * (4.79 + 4.82)));
    CHECK(within_1pct(ratio(TransferMethod::kDq, 0.3), 0.5 * (3.72 + 3.73)));
    CHECK(within_1pct(ratio(TransferMethod::kNessa, 0.1), 0.5 * (73.91 + 74.04)));
    CHECK(within_1pct(ratio(TransferMethod::kNessa, 0.2), 0.5 * (44.71 + 44.95)));
    CHECK(within_1pct(ratio(TransferMethod::kNessa, 0.3), 0.5 * (32.30 + 32.36)));
}

TEST_CASE("compare report shape and self ratio") {
    EnergyCoefficients c;
    std::vector<EnergyRow> rows =
        compare({TransferMethod::kDq, TransferMethod::kNessa}, {0.1, 0.2, 0.3}, 1'000'000, c);
    CHECK(rows.size() == 6);

    std::vector<EnergyRow> self = compare({TransferMethod::kNms}, {0.2}, 1'000'000, c);
    CHECK(self[0].ratio_vs_nms == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ratios are invariant to dataset size and coefficient scaling") {
    EnergyCoefficients c;
    EnergyCoefficients scaled{c.e_pcb_pj * 3.0, c.e_nm_pj * 3.0};
    for (double kr : {0.1, 0.25, 0.6}) {
        auto small = compare({TransferMethod::kDq}, {kr}, 1'000, c);
        auto large = compare({TransferMethod::kDq}, {kr}, 2'000'000'000, c);
        auto hot = compare({TransferMethod::kDq}, {kr}, 1'000, scaled);
        CHECK(small[0].ratio_vs_nms == doctest::Approx(large[0].ratio_vs_nms).epsilon(1e-12));
        CHECK(small[0].ratio_vs_nms == doctest::Approx(hot[0].ratio_vs_nms).epsilon(1e-12));
    }
}

TEST_CASE("the advantage shrinks as the keeping ratio grows") {
    EnergyCoefficients c;
    for (TransferMethod m : {TransferMethod::kDq, TransferMethod::kNessa}) {
        double prev = 1e300;
        for (double kr : {0.1, 0.2, 0.3, 0.5, 0.9}) {
            auto rows = compare({m}, {kr}, 1'000'000, c);
            CHECK(rows[0].ratio_vs_nms < prev);
            prev = rows[0].ratio_vs_nms;
        }
    }
}

TEST_CASE("scenario_energy is linear in each pass count") {
    EnergyCoefficients c;
    TransferScenario base;
    base.dataset_bits = 123456;
    base.keeping_ratio = 0.2;
    base.pcb_full_passes = 2.0;
    base.nm_full_passes = 3.0;
    base.kept_pcb_passes = 1.0;
    double e0 = scenario_energy(base, c);

    TransferScenario bumped = base;
    bumped.pcb_full_passes += 1.0;
    double one_pcb = static_cast<double>(base.dataset_bits) * c.e_pcb_pj * 1e-12;
    CHECK(scenario_energy(bumped, c) - e0 == doctest::Approx(one_pcb).epsilon(1e-12));

    bumped = base;
    bumped.nm_full_passes += 2.0;
    double one_nm = static_cast<double>(base.dataset_bits) * c.e_nm_pj * 1e-12;
    CHECK(scenario_energy(bumped, c) - e0 == doctest::Approx(2.0 * one_nm).epsilon(1e-12));

    bumped = base;
    bumped.kept_pcb_passes += 1.0;
    CHECK(scenario_energy(bumped, c) - e0 ==
          doctest::Approx(one_pcb * base.keeping_ratio).epsilon(1e-12));
}

TEST_CASE("pass-count overrides feed through") {
    EnergyCoefficients c;
    PresetPasses passes;
    passes.nessa_pcb = 200.0;
    auto rows = compare({TransferMethod::kNessa}, {0.1}, 1'000'000, c, passes);
    CHECK(rows[0].ratio_vs_nms == doctest::Approx(200.1 / 0.15).epsilon(1e-9));
}

TEST_CASE("bad inputs are rejected") {
    CHECK_THROWS_AS(parse_method("fancy"), DataError);
    EnergyCoefficients swapped{0.5, 10.0};
    TransferScenario s = preset(TransferMethod::kDq, 0.1, 1000);
    CHECK_THROWS_AS(scenario_energy(s, swapped), std::invalid_argument);
    EnergyCoefficients c;
    CHECK_THROWS_AS(compare({}, {0.1}, 1000, c), std::invalid_argument);
}

TEST_CASE("reports embed the config hash") {
    EnergyCoefficients c;
    auto rows = compare({TransferMethod::kDq}, {0.1}, 1'000'000, c);
    std::string csv = energy_report_csv(rows, "cafe");
    CHECK(csv.find("# config_hash=cafe\n") == 0);
    CHECK(csv.find("method,keeping_ratio,energy_j,ratio_vs_nms") != std::string::npos);
    std::string json = energy_report_json(rows, "cafe");
    CHECK(json.find("\"config_hash\":\"cafe\"") != std::string::npos);
}
