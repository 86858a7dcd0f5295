#include "lsd/analytics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "lsd/errors.hpp"

namespace lsd::analytics {
namespace {

const Fixed kOne = Fixed::one();

Fixed loop_ratio(const AaveRiskParams& params, const PriceFrame& prices) {
    // l * p_a / p_m with a single truncation.
    return mul_div(params.ltv, prices.p_aave_t0, prices.market_price());
}

void require_fraction(Fixed v, const char* what) {
    if (v < Fixed::zero() || v > kOne) {
        throw ValidationError(std::string(what) + " outside [0,1]: " + v.str());
    }
}

} // namespace

void AaveRiskParams::validate() const {
    if (ltv < Fixed::zero()) {
        throw ValidationError("ltv must be nonnegative");
    }
    if (!(ltv < liquidation_threshold)) {
        throw ValidationError("ltv must be strictly below the liquidation threshold (got ltv=" +
                              ltv.str() + ", lt=" + liquidation_threshold.str() + ")");
    }
    if (liquidation_threshold > kOne) {
        throw ValidationError("liquidation threshold must not exceed 1");
    }
}

void PriceFrame::validate() const {
    if (p_primary_t0 != kOne) {
        throw ValidationError("primary market price is 1 by definition");
    }
    if (!p_secondary_t0.is_positive() || !p_aave_t0.is_positive() || !p_aave_tc.is_positive()) {
        throw ValidationError("prices must be strictly positive");
    }
}

void LoopPolicy::validate() const {
    if (collateral_fractions.size() < n_loops || borrow_fractions.size() < n_loops) {
        throw ValidationError("collateral/borrow fraction sequences shorter than loop count");
    }
    if (restake_fractions.size() < static_cast<std::size_t>(n_loops) + 1) {
        throw ValidationError("restake fraction sequence needs n_loops + 1 entries");
    }
    for (Fixed v : collateral_fractions) require_fraction(v, "collateral fraction");
    for (Fixed v : borrow_fractions) require_fraction(v, "borrow fraction");
    for (Fixed v : restake_fractions) require_fraction(v, "restake fraction");
}

LoopPolicy LoopPolicy::all_ones(unsigned n_loops) {
    LoopPolicy p;
    p.n_loops = n_loops;
    p.collateral_fractions.assign(n_loops, kOne);
    p.borrow_fractions.assign(n_loops, kOne);
    p.restake_fractions.assign(static_cast<std::size_t>(n_loops) + 1, kOne);
    return p;
}

void RateSet::validate() const {
    if (staking_apr.is_negative() || deposit_apr.is_negative() || borrow_apr.is_negative()) {
        throw ValidationError("rates must be nonnegative");
    }
}

LeverageSchedule build_schedule(Fixed principal, unsigned n_loops,
                                const AaveRiskParams& params, const PriceFrame& prices) {
    params.validate();
    prices.validate();
    if (!principal.is_positive()) {
        throw ValidationError("principal must be positive");
    }

    const Fixed rho = loop_ratio(params, prices);
    const Fixed pm = prices.market_price();

    LeverageSchedule s;
    s.principal = principal;
    s.n_loops = n_loops;

    if (rho == kOne) {
        // Closed form divides by zero at ratio 1; the series is a plain sum.
        s.total_invested = principal * Fixed::from_int(static_cast<std::int64_t>(n_loops) + 1);
        s.total_collateral =
            (principal * Fixed::from_int(static_cast<std::int64_t>(n_loops))) / pm;
        s.total_debt = principal * Fixed::from_int(static_cast<std::int64_t>(n_loops));
    } else {
        const Fixed rho_n = pow_int(rho, n_loops);
        const Fixed rho_n1 = rho_n * rho;
        const Fixed denom = kOne - rho;
        s.total_invested = mul_div(principal, kOne - rho_n1, denom);
        s.total_collateral = mul_div(principal, kOne - rho_n, denom) / pm;
        s.total_debt = mul_div(principal, rho - rho_n1, denom);
    }
    s.multiplier = s.total_invested / principal;
    return s;
}

LeverageSchedule build_schedule_generalized(Fixed principal, const LoopPolicy& policy,
                                            const AaveRiskParams& params,
                                            const PriceFrame& prices) {
    params.validate();
    prices.validate();
    policy.validate();
    if (!principal.is_positive()) {
        throw ValidationError("principal must be positive");
    }

    const Fixed rho = loop_ratio(params, prices);
    const Fixed pm = prices.market_price();
    const unsigned n = policy.n_loops;

    Fixed invested = Fixed::zero();
    Fixed collateral_num = Fixed::zero();  // C * p_m
    Fixed debt = Fixed::zero();

    Fixed prod_s = kOne;
    Fixed prod_c = kOne;
    Fixed prod_b = kOne;
    Fixed rho_pow = kOne;  // rho^(k-1)

    for (unsigned k = 1; k <= n + 1; ++k) {
        prod_s = prod_s * policy.restake_fractions[k - 1];
        // A term carries fraction products only up to loop k-1.
        invested += principal * prod_s * prod_c * prod_b * rho_pow;
        if (k <= n) {
            prod_c = prod_c * policy.collateral_fractions[k - 1];
            collateral_num += principal * prod_s * prod_c * prod_b * rho_pow;
            prod_b = prod_b * policy.borrow_fractions[k - 1];
            debt += principal * prod_s * prod_c * prod_b * rho_pow * rho;
        }
        rho_pow = rho_pow * rho;
    }

    LeverageSchedule s;
    s.principal = principal;
    s.n_loops = n;
    s.total_invested = invested;
    s.total_collateral = collateral_num / pm;
    s.total_debt = debt;
    s.multiplier = invested / principal;
    return s;
}

Fixed multiplier_limit(const AaveRiskParams& params, const PriceFrame& prices) {
    params.validate();
    prices.validate();
    const Fixed rho = loop_ratio(params, prices);
    if (rho >= kOne) {
        throw ValidationError("leverage diverges: l*p_a/p_m = " + rho.str() + " >= 1");
    }
    return kOne / (kOne - rho);
}

std::optional<Fixed> health_factor(const LeverageSchedule& schedule,
                                   const AaveRiskParams& params, const PriceFrame& prices) {
    params.validate();
    prices.validate();
    if (!schedule.total_debt.is_positive()) {
        return std::nullopt;
    }
    return mul_div(schedule.total_collateral * prices.p_aave_tc,
                   params.liquidation_threshold, schedule.total_debt);
}

Fixed general_health_factor(std::span<const CollateralLeg> collaterals,
                            std::span<const Fixed> debts) {
    Fixed weighted = Fixed::zero();
    for (const auto& leg : collaterals) {
        if (leg.value_eth.is_negative() || leg.liquidation_threshold.is_negative()) {
            throw ValidationError("collateral legs must be nonnegative");
        }
        weighted += leg.value_eth * leg.liquidation_threshold;
    }
    Fixed total_debt = Fixed::zero();
    for (Fixed d : debts) {
        if (d.is_negative()) {
            throw ValidationError("debt legs must be nonnegative");
        }
        total_debt += d;
    }
    if (!total_debt.is_positive()) {
        throw ValidationError("health factor undefined without debt");
    }
    return weighted / total_debt;
}

Fixed max_price_drop(const AaveRiskParams& params) {
    params.validate();
    return params.ltv / params.liquidation_threshold - kOne;
}

AprBreakdown net_apr(const LeverageSchedule& schedule, const RateSet& rates,
                     const AaveRiskParams& params, const PriceFrame& prices) {
    params.validate();
    prices.validate();
    rates.validate();
    if (!schedule.principal.is_positive()) {
        throw ValidationError("schedule principal must be positive");
    }

    const Fixed pm = prices.market_price();

    AprBreakdown out;
    out.staking_component = mul_div(rates.staking_apr, schedule.total_invested, schedule.principal);
    out.deposit_component =
        mul_div(rates.deposit_apr * schedule.total_collateral, pm, schedule.principal);
    if (schedule.total_debt.is_positive()) {
        if (params.ltv.is_zero()) {
            throw ValidationError("schedule has debt but ltv is zero");
        }
        const Fixed denom = schedule.principal * params.ltv * prices.p_aave_t0;
        out.borrow_component = mul_div(rates.borrow_apr * schedule.total_debt, pm, denom);
    } else {
        out.borrow_component = Fixed::zero();
    }
    out.net = out.staking_component + out.deposit_component - out.borrow_component;
    return out;
}

Fixed actual_apr(const ActualAprInputs& in) {
    if (!in.total_deposit_steth.is_positive()) {
        throw ValidationError("actual APR needs a positive total deposit");
    }
    if (in.last_withdraw_block <= in.first_deposit_block) {
        throw ValidationError("last withdraw block must be after first deposit block");
    }
    if (!in.steth_price_at_last_withdraw.is_positive()) {
        throw ValidationError("stETH price must be positive");
    }
    if (in.block_time_seconds == 0) {
        throw ValidationError("block time must be positive");
    }

    const Fixed accrued_steth = in.total_withdraw_steth - in.total_deposit_steth;
    const Fixed accrued_eth = in.total_repay_eth - in.total_borrow_eth;
    const Fixed delta = accrued_steth - accrued_eth / in.steth_price_at_last_withdraw;

    const Fixed blocks_per_year =
        Fixed::from_int(31536000) / Fixed::from_int(in.block_time_seconds);
    const std::uint64_t span = in.last_withdraw_block - in.first_deposit_block;
    const Fixed denom =
        in.total_deposit_steth * Fixed::from_int(static_cast<std::int64_t>(span));
    return mul_div(delta, blocks_per_year, denom);
}

ParamsSchedule ParamsSchedule::load_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("cannot open params schedule: " + path.string());
    }

    ParamsSchedule sched;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "block,ltv,lt") continue;

        std::istringstream row(line);
        std::string block_str, ltv_str, lt_str;
        if (!std::getline(row, block_str, ',') || !std::getline(row, ltv_str, ',') ||
            !std::getline(row, lt_str)) {
            throw ValidationError("malformed params row at line " + std::to_string(line_no) +
                                  ": '" + line + "'");
        }
        AaveRiskParams p;
        try {
            p.effective_from_block = std::stoull(block_str);
        } catch (const std::exception&) {
            throw ValidationError("bad block number at line " + std::to_string(line_no));
        }
        p.ltv = Fixed::parse(ltv_str);
        p.liquidation_threshold = Fixed::parse(lt_str);
        p.validate();
        sched.rows_.push_back(p);
    }
    if (sched.rows_.empty()) {
        throw ValidationError("params schedule is empty: " + path.string());
    }

    std::sort(sched.rows_.begin(), sched.rows_.end(),
              [](const AaveRiskParams& a, const AaveRiskParams& b) {
                  return *a.effective_from_block < *b.effective_from_block;
              });
    for (std::size_t i = 1; i < sched.rows_.size(); ++i) {
        if (*sched.rows_[i].effective_from_block == *sched.rows_[i - 1].effective_from_block) {
            throw ValidationError("duplicate block in params schedule: " +
                                  std::to_string(*sched.rows_[i].effective_from_block));
        }
    }
    return sched;
}

AaveRiskParams ParamsSchedule::at_block(std::uint64_t block) const {
    const AaveRiskParams* best = nullptr;
    for (const auto& row : rows_) {
        if (*row.effective_from_block <= block) {
            best = &row;
        } else {
            break;
        }
    }
    if (best == nullptr) {
        throw ValidationError("no risk parameters in effect at block " + std::to_string(block));
    }
    return *best;
}

} // namespace lsd::analytics
