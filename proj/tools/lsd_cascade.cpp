// lsd-cascade: leverage-staking analytics, event-log detection, pool
// calibration, and cascading-liquidation stress simulation.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lsd/amm.hpp"
#include "lsd/analytics.hpp"
#include "lsd/detect.hpp"
#include "lsd/errors.hpp"
#include "lsd/events.hpp"
#include "lsd/manifest.hpp"
#include "lsd/scenario.hpp"
#include "lsd/sim.hpp"

namespace {

using namespace lsd;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

bool strict_mode() {
    const char* env = std::getenv("LSD_CASCADE_STRICT");
    return env != nullptr && std::string(env) == "1";
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
}

fs::path prepare_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir + ": " + ec.message());
    }
    return dir;
}

struct AnalyzeArgs {
    std::string principal;
    unsigned loops = 0;
    std::string ltv, lt;
    std::optional<std::uint64_t> block;
    std::string params_csv = "data/aave_params.csv";
    std::string p_aave_t0 = "1", p_aave_tc, p_secondary = "1";
    std::string mode = "direct";
    std::string staking_apr = "0.036", deposit_apr = "0", borrow_apr = "0";
    std::string json_out;
};

int cmd_analyze(const AnalyzeArgs& args) {
    analytics::AaveRiskParams params;
    if (!args.ltv.empty() || !args.lt.empty()) {
        if (args.ltv.empty() || args.lt.empty()) {
            throw ValidationError("--ltv and --lt go together");
        }
        if (args.block) {
            throw ValidationError("give either --ltv/--lt or --block, not both");
        }
        params.ltv = Fixed::parse(args.ltv);
        params.liquidation_threshold = Fixed::parse(args.lt);
    } else if (args.block) {
        params = analytics::ParamsSchedule::load_csv(args.params_csv).at_block(*args.block);
    } else {
        throw ValidationError("risk parameters required: --ltv/--lt or --block");
    }
    params.validate();

    analytics::PriceFrame prices;
    prices.p_aave_t0 = Fixed::parse(args.p_aave_t0);
    prices.p_aave_tc = Fixed::parse(args.p_aave_tc.empty() ? args.p_aave_t0 : args.p_aave_tc);
    prices.p_secondary_t0 = Fixed::parse(args.p_secondary);
    if (args.mode == "direct") {
        prices.market_mode = analytics::MarketMode::Direct;
    } else if (args.mode == "indirect") {
        prices.market_mode = analytics::MarketMode::Indirect;
    } else {
        throw ValidationError("--mode must be direct or indirect");
    }

    analytics::RateSet rates;
    rates.staking_apr = Fixed::parse(args.staking_apr);
    rates.deposit_apr = Fixed::parse(args.deposit_apr);
    rates.borrow_apr = Fixed::parse(args.borrow_apr);

    const Fixed principal = Fixed::parse(args.principal);
    const auto schedule = analytics::build_schedule(principal, args.loops, params, prices);
    const auto hf = analytics::health_factor(schedule, params, prices);
    const auto apr = analytics::net_apr(schedule, rates, params, prices);
    const Fixed drop = analytics::max_price_drop(params);
    const Fixed ratio = mul_div(params.ltv, prices.p_aave_t0, prices.market_price());
    std::optional<Fixed> limit;
    if (ratio < Fixed::one()) {
        limit = analytics::multiplier_limit(params, prices);
    }

    std::printf("leverage staking schedule (%s market)\n", args.mode.c_str());
    std::printf("  principal            %s ETH\n", schedule.principal.str().c_str());
    std::printf("  loops                %u\n", schedule.n_loops);
    std::printf("  ltv / lt             %s / %s\n", params.ltv.str().c_str(),
                params.liquidation_threshold.str().c_str());
    std::printf("  loop ratio           %s\n", ratio.str().c_str());
    std::printf("  total invested  (A)  %s ETH\n", schedule.total_invested.str().c_str());
    std::printf("  total collateral (C) %s stETH\n", schedule.total_collateral.str().c_str());
    std::printf("  total debt      (B)  %s ETH\n", schedule.total_debt.str().c_str());
    std::printf("  multiplier           %s\n", schedule.multiplier.str().c_str());
    std::printf("  multiplier limit     %s\n",
                limit ? limit->str().c_str() : "divergent (ratio >= 1)");
    std::printf("  health factor        %s\n", hf ? hf->str().c_str() : "no debt");
    std::printf("  max price drop       %s\n", drop.str().c_str());
    std::printf("  net APR              %s (staking %s + deposit %s - borrow %s)\n",
                apr.net.str().c_str(), apr.staking_component.str().c_str(),
                apr.deposit_component.str().c_str(), apr.borrow_component.str().c_str());

    if (!args.json_out.empty()) {
        ordered_json j;
        j["principal"] = schedule.principal.str();
        j["loops"] = schedule.n_loops;
        j["ltv"] = params.ltv.str();
        j["lt"] = params.liquidation_threshold.str();
        j["loop_ratio"] = ratio.str();
        j["total_invested"] = schedule.total_invested.str();
        j["total_collateral"] = schedule.total_collateral.str();
        j["total_debt"] = schedule.total_debt.str();
        j["multiplier"] = schedule.multiplier.str();
        j["multiplier_limit"] = limit ? ordered_json(limit->str()) : ordered_json(nullptr);
        j["health_factor"] = hf ? ordered_json(hf->str()) : ordered_json(nullptr);
        j["max_price_drop"] = drop.str();
        j["net_apr"] = {{"staking", apr.staking_component.str()},
                        {"deposit", apr.deposit_component.str()},
                        {"borrow", apr.borrow_component.str()},
                        {"net", apr.net.str()}};
        write_file(args.json_out, j.dump(2) + "\n");
    }
    return 0;
}

struct DetectArgs {
    std::string events_path;
    std::string output_dir;
    std::string tolerance = "0.005";
    std::string dust = "0.000000001";
    std::string price = "1";
};

int cmd_detect(const DetectArgs& args) {
    detect::DetectionConfig config;
    config.rel_tolerance = Fixed::parse(args.tolerance);
    config.dust_floor = Fixed::parse(args.dust);
    config.validate();

    const auto parsed = events::parse_events_file(args.events_path, strict_mode());
    for (const auto& issue : parsed.issues) {
        std::fprintf(stderr, "warning: %s line %zu: %s\n", args.events_path.c_str(), issue.line,
                     issue.message.c_str());
    }

    const auto grouped = events::group_by_address(parsed.records);
    const std::string report =
        detect::detection_report_json(grouped, config, Fixed::parse(args.price));

    const fs::path out = prepare_output_dir(args.output_dir);
    write_file(out / "report.json", report);

    cli::RunManifest manifest;
    manifest.command = "detect";
    manifest.input_paths = {args.events_path};
    manifest.output_dir = args.output_dir;
    manifest.parameters = {{"tolerance", config.rel_tolerance.str()},
                           {"dust", config.dust_floor.str()},
                           {"price", Fixed::parse(args.price).str()},
                           {"strict", strict_mode() ? "1" : "0"}};
    manifest.config_checksums = {{args.events_path, cli::checksum_file_hex(args.events_path)}};
    manifest.write();

    std::printf("%zu address(es) analyzed; report at %s\n", grouped.size(),
                (out / "report.json").string().c_str());
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& output_dir) {
    const auto config = scenario::load_config(scenario_path);
    const auto result = sim::run_simulation(config);

    const fs::path out = prepare_output_dir(output_dir);
    write_file(out / "rounds.csv", scenario::rounds_csv(result));
    write_file(out / "summary.json", scenario::summary_json(result));

    cli::RunManifest manifest;
    manifest.command = "simulate";
    manifest.input_paths = {scenario_path};
    manifest.output_dir = output_dir;
    manifest.parameters = {{"scenario", config.name}};
    manifest.config_checksums = {{scenario_path, cli::checksum_file_hex(scenario_path)}};
    manifest.write();

    std::printf("scenario %s: %zu round(s), terminal price %s, liquidated %u+%u, %s\n",
                config.name.c_str(), result.rounds.size(), result.terminal_price.str().c_str(),
                result.liquidated_leverage, result.liquidated_ordinary,
                sim::to_string(result.termination_reason));
    return 0;
}

int cmd_compare(const std::vector<std::string>& scenario_paths, const std::string& output_dir) {
    std::vector<sim::ScenarioConfig> configs;
    configs.reserve(scenario_paths.size());
    for (const auto& path : scenario_paths) {
        configs.push_back(scenario::load_config(path));
    }
    const auto report = sim::compare_scenarios(configs);

    const fs::path out = prepare_output_dir(output_dir);
    write_file(out / "comparison.csv", scenario::comparison_csv(report));
    write_file(out / "comparison.json", scenario::comparison_summary_json(report));

    cli::RunManifest manifest;
    manifest.command = "compare";
    manifest.input_paths = scenario_paths;
    manifest.output_dir = output_dir;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        manifest.parameters["scenario_" + std::to_string(i)] = configs[i].name;
        manifest.config_checksums[scenario_paths[i]] = cli::checksum_file_hex(scenario_paths[i]);
    }
    manifest.write();

    for (const auto& result : report.results) {
        std::printf("%s: terminal price %s, liquidation volume %s ETH, %zu round(s)\n",
                    result.scenario.c_str(), result.terminal_price.str().c_str(),
                    result.total_liquidated_eth.str().c_str(), result.rounds.size());
    }
    return 0;
}

struct CalibrateArgs {
    std::string target;
    std::string reserve_eth = "265972";
    std::string reserve_steth = "266966";
    std::string fee = "0.0004";
    std::string dump = "170000";
    std::string tolerance = "0.005";
    std::string pool_out;
};

int cmd_calibrate(const CalibrateArgs& args) {
    amm::PoolState pool;
    pool.reserve_eth = Fixed::parse(args.reserve_eth);
    pool.reserve_steth = Fixed::parse(args.reserve_steth);
    pool.amplification = Fixed::from_int(50);  // replaced by the search
    pool.fee = Fixed::parse(args.fee);

    const auto result = amm::calibrate_amplification(
        Fixed::parse(args.target), pool, Fixed::parse(args.dump), Fixed::parse(args.tolerance));

    std::printf("amplification     %s\n", result.amplification.str().c_str());
    std::printf("achieved rate     %s\n", result.achieved_rate.str().c_str());
    std::printf("within tolerance  %s\n", result.within_tolerance ? "yes" : "no");

    if (!args.pool_out.empty()) {
        pool.amplification = result.amplification;
        write_file(args.pool_out, pool.to_json() + "\n");
    }
    if (!result.within_tolerance) {
        std::fprintf(stderr, "error: target rate %s unreachable within amplification bounds\n",
                     args.target.c_str());
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Leverage staking analytics and stETH devaluation stress simulator"};
    app.set_version_flag("--version", cli::kToolVersion);
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "Closed-form loop schedule, HF and APR");
    analyze->add_option("--principal", analyze_args.principal, "Principal in ETH")->required();
    analyze->add_option("--loops", analyze_args.loops, "Number of leverage loops");
    analyze->add_option("--ltv", analyze_args.ltv, "Loan-to-value ratio");
    analyze->add_option("--lt", analyze_args.lt, "Liquidation threshold");
    analyze->add_option("--block", analyze_args.block,
                        "Resolve ltv/lt from the historical schedule at this block");
    analyze->add_option("--params-csv", analyze_args.params_csv,
                        "Historical risk-parameter schedule (block,ltv,lt)");
    analyze->add_option("--p-aave-t0", analyze_args.p_aave_t0, "Lender oracle price at entry");
    analyze->add_option("--p-aave-tc", analyze_args.p_aave_tc,
                        "Lender oracle price at evaluation (default: entry price)");
    analyze->add_option("--p-secondary", analyze_args.p_secondary, "Secondary market price");
    analyze->add_option("--mode", analyze_args.mode, "direct or indirect");
    analyze->add_option("--staking-apr", analyze_args.staking_apr, "Staking APR (ratio)");
    analyze->add_option("--deposit-apr", analyze_args.deposit_apr, "Deposit APR (ratio)");
    analyze->add_option("--borrow-apr", analyze_args.borrow_apr, "Borrow APR (ratio)");
    analyze->add_option("--json", analyze_args.json_out, "Also write the schedule as JSON");

    DetectArgs detect_args;
    auto* detect_cmd = app.add_subcommand("detect", "Classify leverage staking in an event log");
    detect_cmd->add_option("--events", detect_args.events_path, "JSON-lines event log")
        ->required();
    detect_cmd->add_option("--output", detect_args.output_dir, "Output directory")->required();
    detect_cmd->add_option("--tolerance", detect_args.tolerance,
                           "Relative amount-matching tolerance");
    detect_cmd->add_option("--dust", detect_args.dust, "Absolute matching floor");
    detect_cmd->add_option("--price", detect_args.price, "stETH price at last withdraw");

    std::string sim_scenario, sim_output;
    auto* simulate = app.add_subcommand("simulate", "Run one stress scenario");
    simulate->add_option("--scenario", sim_scenario, "Scenario JSON")->required();
    simulate->add_option("--output", sim_output, "Output directory")->required();

    std::vector<std::string> compare_scenarios_paths;
    std::string compare_output;
    auto* compare = app.add_subcommand("compare", "Run scenarios side by side");
    compare->add_option("--scenario", compare_scenarios_paths, "Scenario JSON (repeatable)")
        ->required()
        ->expected(-2);
    compare->add_option("--output", compare_output, "Output directory")->required();

    CalibrateArgs calibrate_args;
    auto* calibrate = app.add_subcommand("calibrate", "Fit amplification to a post-dump rate");
    calibrate->add_option("--target", calibrate_args.target, "Target probe rate in (0,1)")
        ->required();
    calibrate->add_option("--reserve-eth", calibrate_args.reserve_eth, "Initial ETH reserve");
    calibrate->add_option("--reserve-steth", calibrate_args.reserve_steth,
                          "Initial stETH reserve");
    calibrate->add_option("--fee", calibrate_args.fee, "Pool fee ratio");
    calibrate->add_option("--dump", calibrate_args.dump, "stETH sale preceding the probe");
    calibrate->add_option("--tolerance", calibrate_args.tolerance, "Acceptable rate deviation");
    calibrate->add_option("--pool-out", calibrate_args.pool_out,
                          "Write the calibrated pool snapshot here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(analyze)) return cmd_analyze(analyze_args);
        if (app.got_subcommand(detect_cmd)) return cmd_detect(detect_args);
        if (app.got_subcommand(simulate)) return cmd_simulate(sim_scenario, sim_output);
        if (app.got_subcommand(compare)) return cmd_compare(compare_scenarios_paths, compare_output);
        if (app.got_subcommand(calibrate)) return cmd_calibrate(calibrate_args);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
