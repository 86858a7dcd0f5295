// Closed-form leverage-staking analytics: loop schedules, multiplier,
// health factor, APR decomposition, and the generalized per-loop policy.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lsd/fixed.hpp"

namespace lsd::analytics {

// Lender risk configuration. The protocol always keeps ltv strictly below
// the liquidation threshold; ltv may be zero (no borrowing allowed).
struct AaveRiskParams {
    Fixed ltv;                     // l
    Fixed liquidation_threshold;   // LT
    std::optional<std::uint64_t> effective_from_block;

    void validate() const;
};

enum class MarketMode { Direct, Indirect };

// Price snapshot used by the schedule math. The primary market mints 1:1,
// so p_primary_t0 is pinned at 1; the secondary market floats.
struct PriceFrame {
    Fixed p_primary_t0 = Fixed::one();
    Fixed p_secondary_t0 = Fixed::one();
    Fixed p_aave_t0 = Fixed::one();
    Fixed p_aave_tc = Fixed::one();
    MarketMode market_mode = MarketMode::Direct;

    // p^m: the price at which ETH in hand becomes stETH.
    Fixed market_price() const {
        return market_mode == MarketMode::Direct ? p_primary_t0 : p_secondary_t0;
    }

    void validate() const;
};

// Per-loop participation fractions for the generalized schedule.
// collateral_fractions[k] and borrow_fractions[k] apply to loop k+1;
// restake_fractions has one extra leading entry for the initial stake.
struct LoopPolicy {
    std::vector<Fixed> collateral_fractions;  // c_k
    std::vector<Fixed> borrow_fractions;      // b_k
    std::vector<Fixed> restake_fractions;     // s_k, length >= n_loops + 1
    unsigned n_loops = 0;

    void validate() const;

    static LoopPolicy all_ones(unsigned n_loops);
};

struct LeverageSchedule {
    Fixed principal;          // S
    unsigned n_loops = 0;     // n
    Fixed total_invested;     // A
    Fixed total_collateral;   // C, in stETH
    Fixed total_debt;         // B
    Fixed multiplier;         // A / S
};

struct RateSet {
    Fixed staking_apr;  // r_s
    Fixed deposit_apr;  // r_c
    Fixed borrow_apr;   // r_b

    void validate() const;
};

struct AprBreakdown {
    Fixed staking_component;  // R_s
    Fixed deposit_component;  // R_c
    Fixed borrow_component;   // R_b
    Fixed net;                // R_s + R_c - R_b
};

// One collateral leg for the general health factor: ETH value and its
// liquidation threshold.
struct CollateralLeg {
    Fixed value_eth;
    Fixed liquidation_threshold;
};

// Schedule of an n-loop max-borrow position: the three geometric series in
// the ratio l*p_a/p_m, evaluated in closed form (term summation when the
// ratio is exactly 1).
LeverageSchedule build_schedule(Fixed principal, unsigned n_loops,
                                const AaveRiskParams& params,
                                const PriceFrame& prices);

// Schedule under a per-loop participation policy; reduces to build_schedule
// when every fraction is 1.
LeverageSchedule build_schedule_generalized(Fixed principal, const LoopPolicy& policy,
                                            const AaveRiskParams& params,
                                            const PriceFrame& prices);

// Limit of the multiplier as loops go to infinity: 1 / (1 - l*p_a/p_m).
// Rejects ratios >= 1 (divergent leverage).
Fixed multiplier_limit(const AaveRiskParams& params, const PriceFrame& prices);

// C * p_aave_tc * LT / B. Debt-free schedules have no finite health factor;
// nullopt is the explicit no-debt sentinel.
std::optional<Fixed> health_factor(const LeverageSchedule& schedule,
                                   const AaveRiskParams& params,
                                   const PriceFrame& prices);

// Multi-asset health factor: sum(value_j * LT_j) / sum(debt_j).
// Empty or zero total debt is a domain error.
Fixed general_health_factor(std::span<const CollateralLeg> collaterals,
                            std::span<const Fixed> debts);

// Largest tolerable relative price decline before HF crosses 1: l/LT - 1.
Fixed max_price_drop(const AaveRiskParams& params);

// APR decomposition of a schedule under simple annualized rates.
AprBreakdown net_apr(const LeverageSchedule& schedule, const RateSet& rates,
                     const AaveRiskParams& params, const PriceFrame& prices);

struct ActualAprInputs {
    Fixed total_deposit_steth;
    Fixed total_withdraw_steth;
    Fixed total_borrow_eth;
    Fixed total_repay_eth;
    Fixed steth_price_at_last_withdraw;
    std::uint64_t first_deposit_block = 0;
    std::uint64_t last_withdraw_block = 0;
    // Seconds per block for annualization; 12 matches post-merge slot time.
    unsigned block_time_seconds = 12;
};

// Realized APR from aggregated lifecycle totals, annualized by block span.
Fixed actual_apr(const ActualAprInputs& in);

// Historical (block -> risk params) schedule; lookups take the latest entry
// at or before the query block.
class ParamsSchedule {
public:
    static ParamsSchedule load_csv(const std::filesystem::path& path);

    AaveRiskParams at_block(std::uint64_t block) const;
    const std::vector<AaveRiskParams>& rows() const { return rows_; }

private:
    std::vector<AaveRiskParams> rows_;  // ascending by effective_from_block
};

} // namespace lsd::analytics
