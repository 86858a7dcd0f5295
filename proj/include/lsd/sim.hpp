// Cascading-liquidation engine: seeded positions marked against the pool
// price, per-round liquidation sweeps that sell seized collateral back into
// the pool, and the swap-repay-withdraw deleveraging procedure.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsd/amm.hpp"
#include "lsd/analytics.hpp"
#include "lsd/fixed.hpp"

namespace lsd::sim {

enum class Cohort { Leverage, Ordinary };
enum class UnwindMode { Full, ToTargetHF };
enum class LiquidationOrder { AscendingHF, DescendingHF, ById };
enum class Termination { NoLiquidatable, MaxRounds };

const char* to_string(Cohort c);
const char* to_string(Termination t);
const char* to_string(LiquidationOrder o);

struct SimPosition {
    std::string id;
    Cohort cohort = Cohort::Ordinary;
    Fixed collateral_steth;
    Fixed debt_eth;
    analytics::AaveRiskParams risk;
    std::optional<Fixed> hf;  // refreshed against the marked price; no-debt sentinel when empty
    bool liquidated = false;
    bool closed = false;  // exited by full deleverage

    bool live() const { return !liquidated && !closed; }
};

struct DeleverageSpec {
    UnwindMode mode = UnwindMode::Full;
    Fixed target_hf = Fixed::parse("1.1");  // used by ToTargetHF
};

struct ScenarioConfig {
    std::string name;
    amm::PoolState pool;
    Fixed initial_dump_steth;
    std::vector<SimPosition> positions;
    bool include_leverage_cohort = true;
    bool include_ordinary_cohort = true;
    bool deleverage_at_round0 = false;
    DeleverageSpec deleverage_unwind;
    unsigned max_rounds = 1000;
    LiquidationOrder liquidation_order = LiquidationOrder::AscendingHF;
    Fixed price_probe_steth = Fixed::from_int(100);

    void validate() const;
};

// The fork-state stETH-ETH pool with the amplification calibrated against
// the post-dump probe-rate anchor.
amm::PoolState default_pool();

struct RoundReport {
    unsigned round = 0;
    Fixed steth_price;  // marked price used for every HF in this round
    unsigned liquidated_count_leverage = 0;
    unsigned liquidated_count_ordinary = 0;
    Fixed liquidation_volume_eth;  // debt repaid by liquidators
    Fixed deleverage_repaid_eth;
    amm::PoolState pool_after;
    bool pool_exhausted = false;
    // Executed swap legs, for conservation accounting.
    Fixed steth_sold_to_pool;
    Fixed eth_bought_from_pool;
};

struct SimulationResult {
    std::string scenario;
    std::vector<RoundReport> rounds;
    Fixed initial_price;   // marked price right after the initial dump
    Fixed terminal_price;  // last round's marked price
    Fixed total_liquidated_eth;
    Fixed total_deleverage_repaid_eth;
    Termination termination_reason = Termination::NoLiquidatable;
    unsigned positions_leverage = 0;
    unsigned positions_ordinary = 0;
    unsigned liquidated_leverage = 0;
    unsigned liquidated_ordinary = 0;
};

struct DeleverageStep {
    Fixed withdrawn_steth;
    Fixed proceeds_eth;
    Fixed repaid_eth;
    std::optional<Fixed> hf_after_repay;  // empty once the debt is cleared
};

class Engine {
public:
    explicit Engine(ScenarioConfig config);

    const amm::PoolState& pool() const { return pool_; }
    const std::vector<SimPosition>& positions() const { return positions_; }
    Fixed marked_price() const { return marked_price_; }
    bool terminated() const { return terminated_; }
    unsigned rounds_run() const { return round_; }

    // One liquidation round: re-mark the price from the pool, refresh every
    // live HF, liquidate all positions below 1 in the configured order
    // (price held fixed within the round), and sell seized collateral into
    // the pool. A round with zero liquidations terminates the engine.
    RoundReport run_round();

    // Unwinds one leverage position by repeated withdraw-sized tranches:
    // withdraw the collateral slack that keeps HF >= 1 at the marked price,
    // sell it, repay debt with the proceeds. Returns the ETH repaid; a
    // position that cannot proceed (no slack or no proceeds) is left
    // partially unwound.
    Fixed deleverage_position(const std::string& id, const DeleverageSpec& spec,
                              std::vector<DeleverageStep>* steps = nullptr);

    // Round-0 deleveraging sweep over the leverage cohort.
    RoundReport deleverage_cohort_round0(const DeleverageSpec& spec);

private:
    void refresh_health_factors();
    SimPosition& find_position(const std::string& id);

    ScenarioConfig cfg_;
    amm::PoolState pool_;
    std::vector<SimPosition> positions_;
    Fixed marked_price_;
    unsigned round_ = 0;
    bool terminated_ = false;
    Fixed round_steth_sold_;
    Fixed round_eth_bought_;
};

SimulationResult run_simulation(const ScenarioConfig& config);

// Runs each scenario independently; all configs must share the pool seed.
struct ComparisonReport {
    std::vector<SimulationResult> results;
};

ComparisonReport compare_scenarios(const std::vector<ScenarioConfig>& configs);

} // namespace lsd::sim
