// Regenerates the bundled stress scenarios under scenarios/ and prints the
// headline numbers of each run for eyeballing.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lsd/scenario.hpp"
#include "lsd/sim.hpp"

using namespace lsd;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    std::printf("wrote %s\n", path.string().c_str());
}

sim::ScenarioConfig shell(const std::string& name) {
    sim::ScenarioConfig cfg;
    cfg.name = name;
    cfg.pool = sim::default_pool();
    cfg.initial_dump_steth = Fixed::from_int(170000);
    return cfg;
}

scenario::CohortSpec leverage_spec() {
    scenario::CohortSpec spec;
    spec.count = 442;
    spec.cohort = sim::Cohort::Leverage;
    spec.rng_seed = 20240601;
    spec.principal_median = 170.0;
    spec.principal_sigma = 1.2;
    spec.loop_size_coupling = 0.333;
    spec.tight_fraction = 0.12;
    spec.tight_hf_min = 1.02;
    spec.tight_hf_max = 1.09;
    spec.hf_min = 1.27;
    spec.hf_max = 1.62;
    spec.safe_positions = 2;
    spec.id_prefix = "lev";
    return spec;
}

scenario::CohortSpec ordinary_spec() {
    scenario::CohortSpec spec;
    spec.count = 442;
    spec.cohort = sim::Cohort::Ordinary;
    spec.rng_seed = 20240603;
    spec.principal_median = 25.0;
    spec.principal_sigma = 1.0;
    spec.hf_min = 1.02;
    spec.hf_max = 2.00;
    spec.safe_positions = 20;
    spec.id_prefix = "ord";
    return spec;
}

scenario::CohortSpec sq4_leverage_spec() {
    scenario::CohortSpec spec;
    spec.count = 120;
    spec.cohort = sim::Cohort::Leverage;
    spec.rng_seed = 20240604;
    spec.principal_median = 80.0;
    spec.principal_sigma = 0.9;
    spec.loop_size_coupling = 0.333;
    spec.hf_min = 1.13;
    spec.hf_max = 1.28;
    spec.safe_positions = 0;
    spec.id_prefix = "lev";
    return spec;
}

scenario::CohortSpec sq4_ordinary_spec() {
    scenario::CohortSpec spec;
    spec.count = 440;
    spec.cohort = sim::Cohort::Ordinary;
    spec.rng_seed = 20240605;
    spec.principal_median = 120.0;
    spec.principal_sigma = 1.0;
    spec.tight_fraction = 0.12;
    spec.tight_hf_min = 1.02;
    spec.tight_hf_max = 1.10;
    spec.hf_min = 1.11;
    spec.hf_max = 1.45;
    spec.safe_positions = 12;
    spec.id_prefix = "ord";
    return spec;
}

void report(const sim::ScenarioConfig& cfg) {
    const auto result = sim::run_simulation(cfg);
    double collateral = 0, debt = 0;
    for (const auto& p : cfg.positions) {
        collateral += p.collateral_steth.to_double();
        debt += p.debt_eth.to_double();
    }
    std::printf(
        "%-16s pos=%zu (C=%.0f stETH, B=%.0f ETH) p0=%.4f rounds=%zu lev=%u/%u ord=%u/%u "
        "volume=%.0f delev=%.0f terminal=%.4f %s\n",
        cfg.name.c_str(), cfg.positions.size(), collateral, debt,
        result.initial_price.to_double(), result.rounds.size(), result.liquidated_leverage,
        result.positions_leverage, result.liquidated_ordinary, result.positions_ordinary,
        result.total_liquidated_eth.to_double(), result.total_deleverage_repaid_eth.to_double(),
        result.terminal_price.to_double(), sim::to_string(result.termination_reason));
    if (!result.rounds.empty() && result.rounds.front().round == 0 && result.rounds.size() > 1) {
        std::printf("%-16s round-1 liquidatable: lev=%u ord=%u\n", "",
                    result.rounds[1].liquidated_count_leverage,
                    result.rounds[1].liquidated_count_ordinary);
    }
}

} // namespace

int main() {
    fs::create_directories("scenarios");

    auto sq1 = shell("sq1");
    sq1.include_ordinary_cohort = false;
    sq1.positions = scenario::generate_cohort(leverage_spec());

    auto sq2_with = shell("sq2_with_leverage");
    sq2_with.include_ordinary_cohort = false;
    sq2_with.positions = sq1.positions;

    auto sq2_without = shell("sq2_without_leverage");
    sq2_without.include_ordinary_cohort = false;
    auto first_loop = leverage_spec();
    first_loop.first_loop_only = true;
    sq2_without.positions = scenario::generate_cohort(first_loop);

    auto sq3_ordinary = shell("sq3_ordinary_only");
    sq3_ordinary.include_leverage_cohort = false;
    sq3_ordinary.positions = scenario::generate_cohort(ordinary_spec());

    auto sq3_combined = shell("sq3_combined");
    sq3_combined.positions = scenario::generate_cohort(leverage_spec());
    const auto ordinary = scenario::generate_cohort(ordinary_spec());
    sq3_combined.positions.insert(sq3_combined.positions.end(), ordinary.begin(), ordinary.end());

    auto sq4_no_delev = shell("sq4_no_deleverage");
    sq4_no_delev.positions = scenario::generate_cohort(sq4_leverage_spec());
    const auto sq4_ord = scenario::generate_cohort(sq4_ordinary_spec());
    sq4_no_delev.positions.insert(sq4_no_delev.positions.end(), sq4_ord.begin(), sq4_ord.end());

    auto sq4_delev = sq4_no_delev;
    sq4_delev.name = "sq4_deleverage";
    sq4_delev.deleverage_at_round0 = true;

    write("scenarios/sq1.json", scenario::config_to_json(sq1));
    write("scenarios/sq2_with.json", scenario::config_to_json(sq2_with));
    write("scenarios/sq2_without.json", scenario::config_to_json(sq2_without));
    write("scenarios/sq3_ordinary.json", scenario::config_to_json(sq3_ordinary));
    write("scenarios/sq3_combined.json", scenario::config_to_json(sq3_combined));
    write("scenarios/sq4_no_delev.json", scenario::config_to_json(sq4_no_delev));
    write("scenarios/sq4_delev.json", scenario::config_to_json(sq4_delev));

    report(sq1);
    report(sq2_with);
    report(sq2_without);
    report(sq3_ordinary);
    report(sq3_combined);
    report(sq4_no_delev);
    report(sq4_delev);
    return 0;
}
