#include "lsd/sim.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "lsd/errors.hpp"

namespace lsd::sim {
namespace {

using amm::Direction;

std::optional<Fixed> position_hf(const SimPosition& pos, Fixed price) {
    if (!pos.debt_eth.is_positive()) {
        return std::nullopt;
    }
    const analytics::CollateralLeg leg{pos.collateral_steth * price,
                                       pos.risk.liquidation_threshold};
    const Fixed debt = pos.debt_eth;
    return analytics::general_health_factor({&leg, 1}, {&debt, 1});
}

// Smallest collateral that keeps HF >= 1 at the given price, rounded up.
Fixed collateral_floor(const SimPosition& pos, Fixed price) {
    const Fixed denom = price * pos.risk.liquidation_threshold;
    Fixed floor = pos.debt_eth / denom;
    if (floor * denom < pos.debt_eth) {
        floor += Fixed::smallest();
    }
    return floor;
}

} // namespace

const char* to_string(Cohort c) {
    return c == Cohort::Leverage ? "leverage" : "ordinary";
}

const char* to_string(Termination t) {
    return t == Termination::NoLiquidatable ? "no_liquidatable" : "max_rounds";
}

const char* to_string(LiquidationOrder o) {
    switch (o) {
    case LiquidationOrder::AscendingHF: return "ascending_hf";
    case LiquidationOrder::DescendingHF: return "descending_hf";
    case LiquidationOrder::ById: return "by_id";
    }
    return "?";
}

void ScenarioConfig::validate() const {
    pool.validate();
    if (max_rounds < 1) {
        throw ValidationError("max_rounds must be at least 1");
    }
    if (!include_leverage_cohort && !include_ordinary_cohort) {
        throw ValidationError("at least one cohort must be included");
    }
    if (initial_dump_steth.is_negative()) {
        throw ValidationError("initial dump must be nonnegative");
    }
    if (!price_probe_steth.is_positive()) {
        throw ValidationError("price probe must be positive");
    }
    if (deleverage_unwind.mode == UnwindMode::ToTargetHF &&
        deleverage_unwind.target_hf < Fixed::one()) {
        throw ValidationError("deleverage target HF must be at least 1");
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto& p = positions[i];
        if (p.id.empty()) {
            throw ValidationError("/positions/" + std::to_string(i) + "/id: must be nonempty");
        }
        if (!ids.insert(p.id).second) {
            throw ValidationError("duplicate position id: " + p.id);
        }
        if (p.collateral_steth.is_negative() || p.debt_eth.is_negative()) {
            throw ValidationError("/positions/" + std::to_string(i) +
                                  ": collateral and debt must be nonnegative");
        }
        const Fixed cap = Fixed::from_int(1000000000000LL);  // pool math range
        if (p.collateral_steth > cap || p.debt_eth > cap) {
            throw ValidationError("/positions/" + std::to_string(i) +
                                  ": amounts exceed the supported range");
        }
        p.risk.validate();
    }
}

amm::PoolState default_pool() {
    amm::PoolState p;
    p.reserve_eth = Fixed::parse("265972");
    p.reserve_steth = Fixed::parse("266966");
    // Calibrated so that a 170k stETH sale moves the 100-stETH probe rate
    // to 0.9052; reproducible via the calibrate subcommand.
    p.amplification = Fixed::parse("15.042516741203144191");
    p.fee = Fixed::parse("0.0004");
    return p;
}

Engine::Engine(ScenarioConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
    pool_ = cfg_.pool;

    positions_.reserve(cfg_.positions.size());
    for (const auto& p : cfg_.positions) {
        const bool included = (p.cohort == Cohort::Leverage && cfg_.include_leverage_cohort) ||
                              (p.cohort == Cohort::Ordinary && cfg_.include_ordinary_cohort);
        if (included) {
            positions_.push_back(p);
        }
    }

    if (cfg_.initial_dump_steth.is_positive()) {
        pool_ = amm::exchange(pool_, Direction::StethToEth, cfg_.initial_dump_steth).second;
    }
    marked_price_ = amm::spot_rate(pool_, cfg_.price_probe_steth);
    refresh_health_factors();
}

void Engine::refresh_health_factors() {
    for (auto& pos : positions_) {
        if (pos.live()) {
            pos.hf = position_hf(pos, marked_price_);
        } else {
            pos.hf.reset();
        }
    }
}

SimPosition& Engine::find_position(const std::string& id) {
    for (auto& pos : positions_) {
        if (pos.id == id) return pos;
    }
    throw ValidationError("unknown position id: " + id);
}

RoundReport Engine::run_round() {
    if (terminated_) {
        throw ValidationError("engine already terminated");
    }
    ++round_;
    round_steth_sold_ = Fixed::zero();
    round_eth_bought_ = Fixed::zero();

    marked_price_ = amm::spot_rate(pool_, cfg_.price_probe_steth);
    refresh_health_factors();

    RoundReport rep;
    rep.round = round_;
    rep.steth_price = marked_price_;

    std::vector<std::size_t> underwater;
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        const auto& pos = positions_[i];
        if (pos.live() && pos.hf && *pos.hf < Fixed::one()) {
            underwater.push_back(i);
        }
    }
    std::sort(underwater.begin(), underwater.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = positions_[a];
        const auto& pb = positions_[b];
        switch (cfg_.liquidation_order) {
        case LiquidationOrder::AscendingHF:
            return std::tie(*pa.hf, pa.id) < std::tie(*pb.hf, pb.id);
        case LiquidationOrder::DescendingHF:
            return std::tie(*pb.hf, pb.id) < std::tie(*pa.hf, pa.id);
        case LiquidationOrder::ById:
            return pa.id < pb.id;
        }
        return a < b;
    });

    for (std::size_t idx : underwater) {
        auto& pos = positions_[idx];
        // The liquidator repays the entire debt, seizes the entire
        // collateral, and sells it into the pool within the same round.
        if (pos.collateral_steth.is_positive()) {
            try {
                const auto [out, next] =
                    amm::exchange(pool_, Direction::StethToEth, pos.collateral_steth);
                pool_ = next;
                round_steth_sold_ += pos.collateral_steth;
                round_eth_bought_ += out;
            } catch (const NumericError&) {
                rep.pool_exhausted = true;
                break;
            }
        }
        rep.liquidation_volume_eth += pos.debt_eth;
        if (pos.cohort == Cohort::Leverage) {
            ++rep.liquidated_count_leverage;
        } else {
            ++rep.liquidated_count_ordinary;
        }
        pos.liquidated = true;
        pos.collateral_steth = Fixed::zero();
        pos.debt_eth = Fixed::zero();
        pos.hf.reset();
    }

    if (rep.liquidated_count_leverage + rep.liquidated_count_ordinary == 0 &&
        !rep.pool_exhausted) {
        terminated_ = true;
    }

    rep.pool_after = pool_;
    rep.steth_sold_to_pool = round_steth_sold_;
    rep.eth_bought_from_pool = round_eth_bought_;
    return rep;
}

Fixed Engine::deleverage_position(const std::string& id, const DeleverageSpec& spec,
                                  std::vector<DeleverageStep>* steps) {
    SimPosition& pos = find_position(id);
    if (!pos.live()) {
        throw ValidationError("cannot deleverage a closed or liquidated position: " + id);
    }
    if (pos.cohort != Cohort::Leverage) {
        throw ValidationError("only leverage positions deleverage: " + id);
    }
    if (!pos.debt_eth.is_positive()) {
        return Fixed::zero();
    }

    const Fixed price = marked_price_;
    Fixed repaid_total = Fixed::zero();

    for (int iteration = 0; iteration < 10000; ++iteration) {
        if (!pos.debt_eth.is_positive()) break;
        if (spec.mode == UnwindMode::ToTargetHF) {
            const auto hf = position_hf(pos, price);
            if (hf && *hf >= spec.target_hf) break;
        }

        const Fixed slack = pos.collateral_steth - collateral_floor(pos, price);
        if (!slack.is_positive()) break;  // withdrawing any more would breach HF 1

        // Sell only what the remaining debt needs: take the whole slack when
        // its proceeds fall short, otherwise bisect the smallest sufficient
        // tranche.
        Fixed tranche = slack;
        const Fixed full_out = amm::get_dy(pool_, Direction::StethToEth, slack).amount_out;
        if (full_out > pos.debt_eth) {
            Fixed lo = Fixed::zero();
            Fixed hi = slack;
            while (hi - lo > Fixed::parse("0.000000000001")) {
                const Fixed mid = (lo + hi) / Fixed::from_int(2);
                if (!mid.is_positive()) break;
                if (amm::get_dy(pool_, Direction::StethToEth, mid).amount_out < pos.debt_eth) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            tranche = hi;
        }
        if (!tranche.is_positive()) break;

        const auto [proceeds, next] = amm::exchange(pool_, Direction::StethToEth, tranche);
        pool_ = next;
        round_steth_sold_ += tranche;
        round_eth_bought_ += proceeds;
        pos.collateral_steth -= tranche;

        const Fixed repaid = min(proceeds, pos.debt_eth);
        pos.debt_eth -= repaid;
        repaid_total += repaid;

        if (steps) {
            steps->push_back(
                {tranche, proceeds, repaid, position_hf(pos, price)});
        }
        if (repaid.is_zero()) break;  // proceeds rounded to dust; cannot make progress
    }

    if (!pos.debt_eth.is_positive() && spec.mode == UnwindMode::Full) {
        // Debt cleared: the remaining collateral is withdrawn to the wallet
        // and the position leaves the book.
        pos.collateral_steth = Fixed::zero();
        pos.closed = true;
        pos.hf.reset();
    } else {
        pos.hf = position_hf(pos, price);
    }
    return repaid_total;
}

RoundReport Engine::deleverage_cohort_round0(const DeleverageSpec& spec) {
    if (round_ != 0) {
        throw ValidationError("cohort deleveraging runs before the first round");
    }
    round_steth_sold_ = Fixed::zero();
    round_eth_bought_ = Fixed::zero();

    RoundReport rep;
    rep.round = 0;
    rep.steth_price = marked_price_;
    for (auto& pos : positions_) {
        if (pos.live() && pos.cohort == Cohort::Leverage) {
            rep.deleverage_repaid_eth += deleverage_position(pos.id, spec);
        }
    }
    rep.pool_after = pool_;
    rep.steth_sold_to_pool = round_steth_sold_;
    rep.eth_bought_from_pool = round_eth_bought_;
    return rep;
}

SimulationResult run_simulation(const ScenarioConfig& config) {
    Engine engine(config);

    SimulationResult result;
    result.scenario = config.name;
    result.initial_price = engine.marked_price();
    for (const auto& pos : engine.positions()) {
        (pos.cohort == Cohort::Leverage ? result.positions_leverage
                                        : result.positions_ordinary) += 1;
    }

    if (config.deleverage_at_round0) {
        result.rounds.push_back(engine.deleverage_cohort_round0(config.deleverage_unwind));
    }
    while (!engine.terminated() && engine.rounds_run() < config.max_rounds) {
        result.rounds.push_back(engine.run_round());
    }
    result.termination_reason =
        engine.terminated() ? Termination::NoLiquidatable : Termination::MaxRounds;

    for (const auto& round : result.rounds) {
        result.total_liquidated_eth += round.liquidation_volume_eth;
        result.total_deleverage_repaid_eth += round.deleverage_repaid_eth;
        result.liquidated_leverage += round.liquidated_count_leverage;
        result.liquidated_ordinary += round.liquidated_count_ordinary;
    }
    result.terminal_price =
        result.rounds.empty() ? result.initial_price : result.rounds.back().steth_price;
    return result;
}

ComparisonReport compare_scenarios(const std::vector<ScenarioConfig>& configs) {
    if (configs.size() < 2) {
        throw ValidationError("comparison needs at least two scenarios");
    }
    const amm::PoolState& seed = configs.front().pool;
    for (const auto& cfg : configs) {
        if (cfg.pool.reserve_eth != seed.reserve_eth ||
            cfg.pool.reserve_steth != seed.reserve_steth ||
            cfg.pool.amplification != seed.amplification || cfg.pool.fee != seed.fee) {
            throw ValidationError("scenario '" + cfg.name + "' does not share the pool seed");
        }
    }
    ComparisonReport report;
    report.results.reserve(configs.size());
    for (const auto& cfg : configs) {
        report.results.push_back(run_simulation(cfg));
    }
    return report;
}

} // namespace lsd::sim
