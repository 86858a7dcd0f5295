// Scenario file IO, deterministic report writers, and the synthetic cohort
// generator used to build bundled stress scenarios.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsd/sim.hpp"

namespace lsd::scenario {

// Scenario JSON with decimal-string amounts; validation failures carry
// JSON-pointer paths.
sim::ScenarioConfig load_config(const std::filesystem::path& path);
sim::ScenarioConfig parse_config(const std::string& text);
std::string config_to_json(const sim::ScenarioConfig& config);

// Per-round CSV: round,price,liq_count_lev,liq_count_ord,liq_volume_eth,
// delev_repaid_eth. Byte-stable for identical results.
std::string rounds_csv(const sim::SimulationResult& result);

// Aligned multi-scenario series on a shared round axis; shorter runs are
// padded with their terminal price and zero activity.
std::string comparison_csv(const sim::ComparisonReport& report);

std::string summary_json(const sim::SimulationResult& result);
std::string comparison_summary_json(const sim::ComparisonReport& report);

// Knobs for one synthetic cohort. Loop counts and amount concentration
// follow the measured shape of leverage stakers: mostly single-loop
// addresses, with deep-loop positions carrying outsized volume.
struct CohortSpec {
    unsigned count = 0;
    sim::Cohort cohort = sim::Cohort::Leverage;
    std::uint64_t rng_seed = 1;
    Fixed ltv = Fixed::parse("0.69");
    Fixed liquidation_threshold = Fixed::parse("0.81");
    double principal_median = 150.0;  // lognormal principal, in ETH
    double principal_sigma = 1.2;     // log-space spread
    // Deeper loopers run bigger books: principal scales by (1 + c*loops).
    double loop_size_coupling = 0.0;
    // Seed HFs (marked at price 1) draw from a main band plus an optional
    // tight near-liquidation band.
    double hf_min = 1.02;
    double hf_max = 1.60;
    double tight_fraction = 0.0;
    double tight_hf_min = 1.02;
    double tight_hf_max = 1.09;
    unsigned safe_positions = 0;  // near-debtless outliers that survive anything
    // Ordinary cohorts and "no leverage adopted" variants keep only the
    // first deposit/borrow of each draw.
    bool first_loop_only = false;
    std::string id_prefix = "pos";
};

std::vector<sim::SimPosition> generate_cohort(const CohortSpec& spec);

} // namespace lsd::scenario
