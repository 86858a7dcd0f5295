#include "lsd/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lsd/errors.hpp"

namespace lsd::scenario {
namespace {

using ordered_json = nlohmann::ordered_json;
using json_pointer = ordered_json::json_pointer;

const ordered_json& at_ptr(const ordered_json& j, const std::string& ptr) {
    try {
        return j.at(json_pointer(ptr));
    } catch (const ordered_json::exception&) {
        throw ValidationError(ptr + ": missing or malformed");
    }
}

std::string string_at(const ordered_json& j, const std::string& ptr) {
    const auto& v = at_ptr(j, ptr);
    if (!v.is_string()) {
        throw ValidationError(ptr + ": expected a string");
    }
    return v.get<std::string>();
}

Fixed amount_at(const ordered_json& j, const std::string& ptr) {
    try {
        return Fixed::parse(string_at(j, ptr));
    } catch (const ValidationError& e) {
        throw ValidationError(ptr + ": " + e.what());
    }
}

Fixed amount_or(const ordered_json& j, const std::string& ptr, const char* fallback) {
    if (!j.contains(json_pointer(ptr))) {
        return Fixed::parse(fallback);
    }
    return amount_at(j, ptr);
}

bool bool_or(const ordered_json& j, const std::string& ptr, bool fallback) {
    if (!j.contains(json_pointer(ptr))) return fallback;
    const auto& v = at_ptr(j, ptr);
    if (!v.is_boolean()) {
        throw ValidationError(ptr + ": expected a boolean");
    }
    return v.get<bool>();
}

} // namespace

sim::ScenarioConfig parse_config(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
    }

    sim::ScenarioConfig cfg;
    cfg.name = string_at(j, "/name");
    cfg.pool.reserve_eth = amount_at(j, "/pool/reserve_eth");
    cfg.pool.reserve_steth = amount_at(j, "/pool/reserve_steth");
    cfg.pool.amplification = amount_at(j, "/pool/amplification");
    cfg.pool.fee = amount_at(j, "/pool/fee");
    cfg.initial_dump_steth = amount_or(j, "/initial_dump_steth", "0");
    cfg.include_leverage_cohort = bool_or(j, "/include_leverage_cohort", true);
    cfg.include_ordinary_cohort = bool_or(j, "/include_ordinary_cohort", true);
    cfg.deleverage_at_round0 = bool_or(j, "/deleverage_at_round0", false);

    if (j.contains(json_pointer("/deleverage_unwind"))) {
        const std::string mode = string_at(j, "/deleverage_unwind/mode");
        if (mode == "full") {
            cfg.deleverage_unwind.mode = sim::UnwindMode::Full;
        } else if (mode == "to_target_hf") {
            cfg.deleverage_unwind.mode = sim::UnwindMode::ToTargetHF;
            cfg.deleverage_unwind.target_hf = amount_at(j, "/deleverage_unwind/target");
        } else {
            throw ValidationError("/deleverage_unwind/mode: unknown mode '" + mode + "'");
        }
    }

    if (j.contains(json_pointer("/max_rounds"))) {
        const auto& v = at_ptr(j, "/max_rounds");
        if (!v.is_number_unsigned()) {
            throw ValidationError("/max_rounds: expected an unsigned integer");
        }
        cfg.max_rounds = v.get<unsigned>();
    }

    if (j.contains(json_pointer("/liquidation_order"))) {
        const std::string order = string_at(j, "/liquidation_order");
        if (order == "ascending_hf") {
            cfg.liquidation_order = sim::LiquidationOrder::AscendingHF;
        } else if (order == "descending_hf") {
            cfg.liquidation_order = sim::LiquidationOrder::DescendingHF;
        } else if (order == "by_id") {
            cfg.liquidation_order = sim::LiquidationOrder::ById;
        } else {
            throw ValidationError("/liquidation_order: unknown order '" + order + "'");
        }
    }

    cfg.price_probe_steth = amount_or(j, "/price_probe_steth", "100");

    const auto& positions = at_ptr(j, "/positions");
    if (!positions.is_array()) {
        throw ValidationError("/positions: expected an array");
    }
    cfg.positions.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::string base = "/positions/" + std::to_string(i);
        sim::SimPosition p;
        p.id = string_at(j, base + "/id");
        const std::string cohort = string_at(j, base + "/cohort");
        if (cohort == "leverage") {
            p.cohort = sim::Cohort::Leverage;
        } else if (cohort == "ordinary") {
            p.cohort = sim::Cohort::Ordinary;
        } else {
            throw ValidationError(base + "/cohort: unknown cohort '" + cohort + "'");
        }
        p.collateral_steth = amount_at(j, base + "/collateral_steth");
        p.debt_eth = amount_at(j, base + "/debt_eth");
        p.risk.ltv = amount_at(j, base + "/ltv");
        p.risk.liquidation_threshold = amount_at(j, base + "/lt");
        cfg.positions.push_back(std::move(p));
    }

    cfg.validate();
    return cfg;
}

sim::ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scenario file: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const sim::ScenarioConfig& cfg) {
    ordered_json j;
    j["name"] = cfg.name;
    j["pool"] = {{"reserve_eth", cfg.pool.reserve_eth.str()},
                 {"reserve_steth", cfg.pool.reserve_steth.str()},
                 {"amplification", cfg.pool.amplification.str()},
                 {"fee", cfg.pool.fee.str()}};
    j["initial_dump_steth"] = cfg.initial_dump_steth.str();
    j["include_leverage_cohort"] = cfg.include_leverage_cohort;
    j["include_ordinary_cohort"] = cfg.include_ordinary_cohort;
    j["deleverage_at_round0"] = cfg.deleverage_at_round0;
    if (cfg.deleverage_unwind.mode == sim::UnwindMode::Full) {
        j["deleverage_unwind"] = {{"mode", "full"}};
    } else {
        j["deleverage_unwind"] = {{"mode", "to_target_hf"},
                                  {"target", cfg.deleverage_unwind.target_hf.str()}};
    }
    j["max_rounds"] = cfg.max_rounds;
    j["liquidation_order"] = sim::to_string(cfg.liquidation_order);
    j["price_probe_steth"] = cfg.price_probe_steth.str();
    ordered_json positions = ordered_json::array();
    for (const auto& p : cfg.positions) {
        positions.push_back({{"id", p.id},
                             {"cohort", sim::to_string(p.cohort)},
                             {"collateral_steth", p.collateral_steth.str()},
                             {"debt_eth", p.debt_eth.str()},
                             {"ltv", p.risk.ltv.str()},
                             {"lt", p.risk.liquidation_threshold.str()}});
    }
    j["positions"] = std::move(positions);
    return j.dump(2) + "\n";
}

std::string rounds_csv(const sim::SimulationResult& result) {
    std::string out = "round,price,liq_count_lev,liq_count_ord,liq_volume_eth,delev_repaid_eth\n";
    for (const auto& r : result.rounds) {
        out += std::to_string(r.round);
        out += ',';
        out += r.steth_price.str();
        out += ',';
        out += std::to_string(r.liquidated_count_leverage);
        out += ',';
        out += std::to_string(r.liquidated_count_ordinary);
        out += ',';
        out += r.liquidation_volume_eth.str();
        out += ',';
        out += r.deleverage_repaid_eth.str();
        out += '\n';
    }
    return out;
}

std::string comparison_csv(const sim::ComparisonReport& report) {
    std::string out = "round";
    for (const auto& result : report.results) {
        for (const char* col :
             {"price", "liq_count_lev", "liq_count_ord", "liq_volume_eth", "delev_repaid_eth"}) {
            out += ',';
            out += result.scenario;
            out += '_';
            out += col;
        }
    }
    out += '\n';

    unsigned first = 1, last = 0;
    for (const auto& result : report.results) {
        if (result.rounds.empty()) continue;
        first = std::min(first, result.rounds.front().round);
        last = std::max(last, result.rounds.back().round);
    }

    for (unsigned round = first; round <= last; ++round) {
        out += std::to_string(round);
        for (const auto& result : report.results) {
            const sim::RoundReport* found = nullptr;
            for (const auto& r : result.rounds) {
                if (r.round == round) {
                    found = &r;
                    break;
                }
            }
            if (found) {
                out += ',' + found->steth_price.str();
                out += ',' + std::to_string(found->liquidated_count_leverage);
                out += ',' + std::to_string(found->liquidated_count_ordinary);
                out += ',' + found->liquidation_volume_eth.str();
                out += ',' + found->deleverage_repaid_eth.str();
            } else {
                // Axis padding: terminated runs hold their terminal price
                // with no further activity.
                const Fixed price =
                    (!result.rounds.empty() && round > result.rounds.back().round)
                        ? result.terminal_price
                        : result.initial_price;
                out += ',' + price.str();
                out += ",0,0,0,0";
            }
        }
        out += '\n';
    }
    return out;
}

namespace {

ordered_json result_json(const sim::SimulationResult& result) {
    ordered_json j;
    j["scenario"] = result.scenario;
    j["initial_price"] = result.initial_price.str();
    j["terminal_price"] = result.terminal_price.str();
    j["total_liquidated_eth"] = result.total_liquidated_eth.str();
    j["total_deleverage_repaid_eth"] = result.total_deleverage_repaid_eth.str();
    j["termination_reason"] = sim::to_string(result.termination_reason);
    j["positions_leverage"] = result.positions_leverage;
    j["positions_ordinary"] = result.positions_ordinary;
    j["liquidated_leverage"] = result.liquidated_leverage;
    j["liquidated_ordinary"] = result.liquidated_ordinary;
    ordered_json rounds = ordered_json::array();
    for (const auto& r : result.rounds) {
        rounds.push_back({{"round", r.round},
                          {"steth_price", r.steth_price.str()},
                          {"liquidated_count_leverage", r.liquidated_count_leverage},
                          {"liquidated_count_ordinary", r.liquidated_count_ordinary},
                          {"liquidation_volume_eth", r.liquidation_volume_eth.str()},
                          {"deleverage_repaid_eth", r.deleverage_repaid_eth.str()},
                          {"steth_sold_to_pool", r.steth_sold_to_pool.str()},
                          {"eth_bought_from_pool", r.eth_bought_from_pool.str()},
                          {"pool_exhausted", r.pool_exhausted},
                          {"pool_after",
                           {{"reserve_eth", r.pool_after.reserve_eth.str()},
                            {"reserve_steth", r.pool_after.reserve_steth.str()},
                            {"amplification", r.pool_after.amplification.str()},
                            {"fee", r.pool_after.fee.str()}}}});
    }
    j["rounds"] = std::move(rounds);
    return j;
}

} // namespace

std::string summary_json(const sim::SimulationResult& result) {
    return result_json(result).dump(2) + "\n";
}

std::string comparison_summary_json(const sim::ComparisonReport& report) {
    ordered_json j;
    ordered_json scenarios = ordered_json::array();
    for (const auto& result : report.results) {
        scenarios.push_back(result_json(result));
    }
    j["scenarios"] = std::move(scenarios);
    return j.dump(2) + "\n";
}

namespace {

// Platform-stable draws: derive everything from raw mt19937_64 output so
// regenerated fixtures are bit-identical across standard libraries.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal01(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

unsigned loop_count_from(double u) {
    // Qualitative loop distribution: single loops dominate, deeper loops
    // taper off quickly, and a thin 8..12-loop tail remains.
    static const std::pair<double, unsigned> bands[] = {
        {0.55, 1}, {0.74, 2}, {0.84, 3}, {0.90, 4}, {0.94, 5}, {0.965, 6}, {0.98, 7}};
    for (const auto& [cutoff, n] : bands) {
        if (u < cutoff) return n;
    }
    const unsigned deep = 8 + static_cast<unsigned>((u - 0.98) / 0.02 * 5.0);
    return deep > 12 ? 12 : deep;
}

} // namespace

std::vector<sim::SimPosition> generate_cohort(const CohortSpec& spec) {
    std::mt19937_64 rng(spec.rng_seed);
    analytics::AaveRiskParams risk;
    risk.ltv = spec.ltv;
    risk.liquidation_threshold = spec.liquidation_threshold;
    risk.validate();
    const analytics::PriceFrame seed_prices;  // schedules marked at par

    std::vector<sim::SimPosition> out;
    out.reserve(spec.count);
    for (unsigned i = 0; i < spec.count; ++i) {
        // Fixed draw order keeps first-loop-only variants aligned with their
        // full-leverage counterparts under the same seed.
        const double principal_normal = normal01(rng);
        const double loop_u = uniform01(rng);
        const double band_u = uniform01(rng);
        const double hf_u = uniform01(rng);

        const unsigned loops = loop_count_from(loop_u);
        double principal = spec.principal_median * std::exp(spec.principal_sigma * principal_normal);
        principal *= 1.0 + spec.loop_size_coupling * loops;

        double hf_seed;
        if (band_u < spec.tight_fraction) {
            hf_seed = spec.tight_hf_min + hf_u * (spec.tight_hf_max - spec.tight_hf_min);
        } else {
            hf_seed = spec.hf_min + hf_u * (spec.hf_max - spec.hf_min);
        }
        if (spec.safe_positions > 0 && i >= spec.count - spec.safe_positions) {
            hf_seed = 130.0 + hf_u * 40.0;
        }

        sim::SimPosition pos;
        char id[64];
        std::snprintf(id, sizeof(id), "%s-%04u", spec.id_prefix.c_str(), i);
        pos.id = id;
        pos.cohort = spec.cohort;
        pos.risk = risk;

        const Fixed principal_fx = max(Fixed::parse("0.01"), Fixed::from_double_approx(principal));
        if (spec.cohort == sim::Cohort::Leverage && !spec.first_loop_only) {
            const auto schedule = analytics::build_schedule(principal_fx, loops, risk, seed_prices);
            pos.collateral_steth = schedule.total_collateral;
        } else {
            pos.collateral_steth = principal_fx;
        }
        pos.debt_eth = mul_div(pos.collateral_steth, spec.liquidation_threshold,
                               Fixed::from_double_approx(hf_seed));
        out.push_back(std::move(pos));
    }
    return out;
}

} // namespace lsd::scenario
