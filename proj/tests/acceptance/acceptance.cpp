// Acceptance suite: one check per release criterion, each printed as a
// single PASS/FAIL line with its runtime.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lsd/amm.hpp"
#include "lsd/analytics.hpp"
#include "lsd/detect.hpp"
#include "lsd/events.hpp"
#include "lsd/scenario.hpp"
#include "lsd/sim.hpp"

using namespace lsd;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    std::string name;
    std::function<void()> run;
};

struct Failure {
    std::string message;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw Failure{message};
}

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fixture(const char* rel) {
    return std::string(LSD_SOURCE_DIR "/") + rel;
}

analytics::AaveRiskParams params(const char* l, const char* lt) {
    analytics::AaveRiskParams p;
    p.ltv = Fixed::parse(l);
    p.liquidation_threshold = Fixed::parse(lt);
    return p;
}

// ---------------------------------------------------------------------------

void multiplier_limit_criterion() {
    const auto start = Clock::now();
    const auto schedule = analytics::build_schedule(Fixed::from_int(100), 50,
                                                    params("0.69", "0.81"), {});
    const double elapsed = ms_since(start);
    const double limit = 1.0 / 0.31;
    require(std::fabs(schedule.multiplier.to_double() - limit) < 1e-6,
            "multiplier at n=50 not within 1e-6 of 1/0.31, got " + schedule.multiplier.str());
    require(elapsed < 1.0, "schedule construction took " + std::to_string(elapsed) + " ms");
}

void case_study_criterion() {
    const auto schedule_csv =
        analytics::ParamsSchedule::load_csv(fixture("data/aave_params.csv"));

    const auto direct_params = schedule_csv.at_block(14617906);
    require(direct_params.ltv == Fixed::parse("0.70"), "unexpected ltv for the direct era");
    const auto direct = analytics::build_schedule(Fixed::from_int(5000), 9, direct_params, {});
    const double direct_err = std::fabs(direct.multiplier.to_double() - 3.23) / 3.23;
    require(direct_err < 0.01, "direct case-study multiplier off by " +
                                   std::to_string(direct_err * 100) + "%");

    // Indirect case: one-dimensional fit of the secondary-market price in
    // [0.97, 1.0]; the multiplier is monotone decreasing in that price.
    const auto indirect_params = schedule_csv.at_block(16031087);
    require(indirect_params.ltv == Fixed::parse("0.72"), "unexpected ltv for the indirect era");
    const auto multiplier_at = [&](double p2nd) {
        analytics::PriceFrame prices;
        prices.market_mode = analytics::MarketMode::Indirect;
        prices.p_secondary_t0 = Fixed::from_double_approx(p2nd);
        return analytics::build_schedule(Fixed::from_int(766), 8, indirect_params, prices)
            .multiplier.to_double();
    };
    double lo = 0.97, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = (lo + hi) / 2;
        (multiplier_at(mid) > 3.43 ? lo : hi) = mid;
    }
    const double fitted_price = (lo + hi) / 2;
    const double fitted_mult = multiplier_at(fitted_price);
    const double indirect_err = std::fabs(fitted_mult - 3.43) / 3.43;
    require(indirect_err < 0.02, "indirect case-study multiplier off by " +
                                     std::to_string(indirect_err * 100) + "%");
    std::printf("        [case-study] fitted secondary price %.4f -> multiplier %.4f\n",
                fitted_price, fitted_mult);
}

void hf_boundary_criterion() {
    const auto p = params("0.69", "0.81");
    const Fixed drop = analytics::max_price_drop(p);
    require(std::fabs(drop.to_double() - (-0.148148148148148148)) < 1e-12,
            "max price drop mismatch: " + drop.str());

    analytics::PriceFrame prices;
    prices.p_aave_tc = Fixed::one() + drop;
    const auto schedule = analytics::build_schedule(Fixed::from_int(100), 5, p, prices);
    const auto hf = analytics::health_factor(schedule, p, prices);
    require(hf.has_value(), "health factor missing");
    require(std::fabs(hf->to_double() - 1.0) < 1e-12,
            "HF at the boundary drop is " + hf->str());
}

void pool_anchor_criterion() {
    const auto start = Clock::now();
    amm::PoolState pool;
    pool.reserve_eth = Fixed::parse("265972");
    pool.reserve_steth = Fixed::parse("266966");
    pool.amplification = Fixed::from_int(50);
    pool.fee = Fixed::parse("0.0004");
    const auto result = amm::calibrate_amplification(Fixed::parse("0.9052"), pool,
                                                     Fixed::from_int(170000));
    const double elapsed = ms_since(start);
    require(result.within_tolerance, "calibration missed the target rate");
    require(std::fabs(result.achieved_rate.to_double() - 0.9052) <= 0.005,
            "achieved rate " + result.achieved_rate.str());
    require(elapsed < 1000.0, "calibration took " + std::to_string(elapsed) + " ms");

    // The shipped scenario constant reproduces the anchor.
    auto shipped = sim::default_pool();
    shipped = amm::exchange(shipped, amm::Direction::StethToEth, Fixed::from_int(170000)).second;
    require(std::fabs(amm::spot_rate(shipped).to_double() - 0.9052) <= 0.005,
            "shipped amplification misses the anchor");
}

void amm_fuzz_criterion() {
    const auto start = Clock::now();
    std::mt19937_64 rng(20240801);
    std::uniform_int_distribution<std::int64_t> reserve(1, 10000000);
    std::uniform_int_distribution<std::int64_t> amp(1, 5000);
    std::uniform_int_distribution<int> fee_bps(0, 100);
    std::uniform_int_distribution<int> denom(1, 40);

    for (int i = 0; i < 10000; ++i) {
        amm::PoolState p;
        p.reserve_eth = Fixed::from_int(reserve(rng));
        p.reserve_steth = Fixed::from_int(reserve(rng));
        p.amplification = Fixed::from_int(amp(rng));
        p.fee = Fixed::from_int(fee_bps(rng)) / Fixed::from_int(10000);

        // Convergence within the iteration cap (solver throws otherwise).
        const Fixed d = amm::invariant_d(p);

        // Homogeneity of degree one.
        amm::PoolState scaled = p;
        scaled.reserve_eth = p.reserve_eth * Fixed::from_int(10);
        scaled.reserve_steth = p.reserve_steth * Fixed::from_int(10);
        const Fixed d10 = amm::invariant_d(scaled);
        require((d10 - d * Fixed::from_int(10)).abs().to_double() <= 1e-12 * d10.to_double() + 1e-9,
                "homogeneity violated at case " + std::to_string(i));

        // Round trip never profits; accounting is exact.
        const auto dir = (i % 2 == 0) ? amm::Direction::StethToEth : amm::Direction::EthToSteth;
        const auto back_dir =
            dir == amm::Direction::StethToEth ? amm::Direction::EthToSteth
                                              : amm::Direction::StethToEth;
        const Fixed dx = max(Fixed::smallest(), p.reserve(dir) / Fixed::from_int(denom(rng)));
        const auto quote = amm::get_dy(p, dir, dx);
        const Fixed pre_in = p.reserve(dir);
        const Fixed pre_out = dir == amm::Direction::StethToEth ? p.reserve_eth : p.reserve_steth;
        const Fixed post_in = quote.post_state.reserve(dir);
        const Fixed post_out = dir == amm::Direction::StethToEth ? quote.post_state.reserve_eth
                                                                 : quote.post_state.reserve_steth;
        require(post_in == pre_in + dx, "input side accounting broke");
        require(post_out == pre_out - quote.amount_out, "output side accounting broke");
        require(quote.amount_out < pre_out, "output bound violated");
        if (quote.amount_out.is_positive()) {
            const auto [back_out, post] =
                amm::exchange(quote.post_state, back_dir, quote.amount_out);
            (void)post;
            require(back_out <= dx, "round trip profited at case " + std::to_string(i));
        }
    }

    // Spot-check Newton against an independent bisection oracle.
    std::mt19937_64 oracle_rng(20240802);
    for (int i = 0; i < 1000; ++i) {
        const long double x = static_cast<long double>(reserve(oracle_rng));
        const long double y = static_cast<long double>(reserve(oracle_rng));
        const long double a = static_cast<long double>(amp(oracle_rng));
        amm::PoolState p;
        p.reserve_eth = Fixed::from_int(static_cast<std::int64_t>(x));
        p.reserve_steth = Fixed::from_int(static_cast<std::int64_t>(y));
        p.amplification = Fixed::from_int(static_cast<std::int64_t>(a));
        p.fee = Fixed::zero();
        const auto residual = [&](long double dv) {
            return dv * dv * dv / (4.0L * x * y) + (4.0L * a - 1.0L) * dv - 4.0L * a * (x + y);
        };
        long double lo = 0.0L, hi = x + y;
        for (int it = 0; it < 200; ++it) {
            const long double mid = (lo + hi) / 2.0L;
            (residual(mid) < 0.0L ? lo : hi) = mid;
        }
        const double oracle = static_cast<double>((lo + hi) / 2.0L);
        const double newton = amm::invariant_d(p).to_double();
        require(std::fabs(newton - oracle) <= 1e-9 * oracle,
                "Newton disagrees with bisection at case " + std::to_string(i));
    }

    const double elapsed = ms_since(start);
    require(elapsed < 30000.0, "fuzz took " + std::to_string(elapsed) + " ms");
}

void detection_criterion() {
    const auto start = Clock::now();
    const auto parsed = events::parse_events_file(fixture("tests/fixtures/golden_corpus.jsonl"));
    require(parsed.issues.empty(), "golden corpus has parse issues");
    const auto grouped = events::group_by_address(parsed.records);
    require(grouped.size() == 8, "golden corpus should hold 8 addresses");

    const std::pair<const char*, detect::Strategy> expected[] = {
        {"0xdir1", detect::Strategy::Direct},   {"0xdir2", detect::Strategy::Direct},
        {"0xind1", detect::Strategy::Indirect}, {"0xind2", detect::Strategy::Indirect},
        {"0xneg1", detect::Strategy::None},     {"0xneg2", detect::Strategy::None},
        {"0xneg3", detect::Strategy::None},     {"0xneg4", detect::Strategy::None},
    };
    for (const auto& [address, strategy] : expected) {
        const auto report = detect::analyze_address(grouped.at(address), {}, Fixed::one());
        require(report.trace.strategy == strategy,
                std::string(address) + " classified as " + to_string(report.trace.strategy));
        if (strategy != detect::Strategy::None) {
            require(report.trace.n_loops >= 1, std::string(address) + " lost its loop count");
        }
    }

    // Tolerance monotonicity across random perturbations.
    std::mt19937_64 rng(20240803);
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);
    std::uniform_real_distribution<double> tol_draw(0.0, 0.05);
    std::uniform_int_distribution<int> base(5, 500);
    for (int trial = 0; trial < 1000; ++trial) {
        const double stake0 = base(rng);
        const double dep = stake0 * (1.0 + jitter(rng));
        const double borrow = dep * 0.69;
        const double restake = borrow * (1.0 + jitter(rng));

        std::vector<events::EventRecord> seq(4);
        const char* addr = "0xfuzz";
        for (std::size_t k = 0; k < 4; ++k) {
            seq[k].address = addr;
            seq[k].block = 100 + k;
        }
        seq[0].kind = events::EventKind::Stake;
        seq[0].amount_in = {events::Asset::Eth, Fixed::from_double_approx(stake0)};
        seq[0].amount_out = events::TokenAmount{events::Asset::Steth,
                                                Fixed::from_double_approx(stake0)};
        seq[1].kind = events::EventKind::Deposit;
        seq[1].amount_in = {events::Asset::Steth, Fixed::from_double_approx(dep)};
        seq[2].kind = events::EventKind::Borrow;
        seq[2].amount_in = {events::Asset::Eth, Fixed::from_double_approx(borrow)};
        seq[3].kind = events::EventKind::Stake;
        seq[3].amount_in = {events::Asset::Eth, Fixed::from_double_approx(restake)};
        seq[3].amount_out = events::TokenAmount{events::Asset::Steth,
                                                Fixed::from_double_approx(restake)};

        double t1 = tol_draw(rng), t2 = tol_draw(rng);
        if (t1 > t2) std::swap(t1, t2);
        detect::DetectionConfig tight, loose;
        tight.rel_tolerance = Fixed::from_double_approx(t1);
        loose.rel_tolerance = Fixed::from_double_approx(t2);
        if (detect::detect_direct(seq, tight).strategy != detect::Strategy::None) {
            require(detect::detect_direct(seq, loose).strategy != detect::Strategy::None,
                    "a larger tolerance lost a match at trial " + std::to_string(trial));
        }
    }

    const double elapsed = ms_since(start);
    require(elapsed < 5000.0, "detection checks took " + std::to_string(elapsed) + " ms");
}

void simulation_directionality_criterion() {
    const auto start = Clock::now();

    // SQ1: near-total leverage liquidation and a deep terminal price.
    const auto sq1 = sim::run_simulation(scenario::load_config(fixture("scenarios/sq1.json")));
    require(sq1.liquidated_leverage * 100 >= sq1.positions_leverage * 99,
            "sq1 liquidated only " + std::to_string(sq1.liquidated_leverage) + "/" +
                std::to_string(sq1.positions_leverage));
    require(sq1.terminal_price.to_double() < 0.1 * sq1.initial_price.to_double(),
            "sq1 terminal price " + sq1.terminal_price.str());

    // SQ2: leverage multiplies the liquidation volume.
    const auto with = sim::run_simulation(scenario::load_config(fixture("scenarios/sq2_with.json")));
    const auto without =
        sim::run_simulation(scenario::load_config(fixture("scenarios/sq2_without.json")));
    require(with.total_liquidated_eth.to_double() >=
                5.0 * without.total_liquidated_eth.to_double(),
            "sq2 volume ratio " + std::to_string(with.total_liquidated_eth.to_double() /
                                                 without.total_liquidated_eth.to_double()));

    // SQ3: the leverage cohort strictly worsens ordinary liquidations.
    const auto ordinary_only =
        sim::run_simulation(scenario::load_config(fixture("scenarios/sq3_ordinary.json")));
    const auto combined =
        sim::run_simulation(scenario::load_config(fixture("scenarios/sq3_combined.json")));
    require(combined.liquidated_ordinary > ordinary_only.liquidated_ordinary,
            "sq3 ordinary counts " + std::to_string(combined.liquidated_ordinary) + " vs " +
                std::to_string(ordinary_only.liquidated_ordinary));

    // SQ4: round-0 deleveraging shortens the cascade and leaves no leverage
    // position liquidatable in round 1.
    const auto no_delev =
        sim::run_simulation(scenario::load_config(fixture("scenarios/sq4_no_delev.json")));
    const auto delev =
        sim::run_simulation(scenario::load_config(fixture("scenarios/sq4_delev.json")));
    require(!no_delev.rounds.empty() && !delev.rounds.empty(), "sq4 produced no rounds");
    const unsigned rounds_control = no_delev.rounds.back().round;
    const unsigned rounds_delev = delev.rounds.back().round;
    require(rounds_delev < rounds_control,
            "sq4 rounds " + std::to_string(rounds_delev) + " !< " +
                std::to_string(rounds_control));
    require(delev.rounds.size() >= 2 && delev.rounds[0].round == 0, "sq4 round-0 report missing");
    require(delev.rounds[1].liquidated_count_leverage == 0,
            "sq4 leverage positions liquidatable after deleveraging");

    const double elapsed = ms_since(start);
    std::printf("        [sq1] %u/%u liquidated, terminal %.4f | [sq2] volume x%.1f | "
                "[sq3] ordinary %u vs %u | [sq4] rounds %u vs %u\n",
                sq1.liquidated_leverage, sq1.positions_leverage, sq1.terminal_price.to_double(),
                with.total_liquidated_eth.to_double() / without.total_liquidated_eth.to_double(),
                combined.liquidated_ordinary, ordinary_only.liquidated_ordinary, rounds_delev,
                rounds_control);
    require(elapsed < 10000.0, "scenario runs took " + std::to_string(elapsed) + " ms");
}

void engine_invariants_criterion() {
    const auto start = Clock::now();

    for (const char* file : {"scenarios/sq1.json", "scenarios/sq4_delev.json"}) {
        const auto config = scenario::load_config(fixture(file));
        sim::Engine engine(config);

        amm::PoolState before = engine.pool();
        Fixed prev_price = engine.marked_price();
        std::vector<std::string> dead;

        std::vector<sim::RoundReport> rounds;
        if (config.deleverage_at_round0) {
            rounds.push_back(engine.deleverage_cohort_round0(config.deleverage_unwind));
        }
        while (!engine.terminated() && engine.rounds_run() < config.max_rounds) {
            rounds.push_back(engine.run_round());
        }

        for (const auto& round : rounds) {
            // Sell-only flow: the marked price never rises.
            require(round.steth_price <= prev_price, "price rose in a sell-only cascade");
            prev_price = round.steth_price;
            // Conservation: pool deltas equal the executed legs, exactly.
            require(round.pool_after.reserve_steth ==
                        before.reserve_steth + round.steth_sold_to_pool,
                    "stETH conservation broke");
            require(round.pool_after.reserve_eth == before.reserve_eth - round.eth_bought_from_pool,
                    "ETH conservation broke");
            before = round.pool_after;
        }

        // Liquidated positions are terminal and empty.
        for (const auto& pos : engine.positions()) {
            if (pos.liquidated) {
                require(pos.collateral_steth.is_zero() && pos.debt_eth.is_zero(),
                        "liquidated position retains balances");
            }
        }

        // Determinism: identical configs reproduce byte-identical artifacts.
        const auto a = sim::run_simulation(config);
        const auto b = sim::run_simulation(config);
        require(scenario::rounds_csv(a) == scenario::rounds_csv(b), "CSV output not reproducible");
        require(scenario::summary_json(a) == scenario::summary_json(b),
                "summary output not reproducible");
    }

    const double elapsed = ms_since(start);
    require(elapsed < 10000.0, "engine invariant checks took " + std::to_string(elapsed) + " ms");
}

void generalized_equivalence_criterion() {
    std::mt19937_64 rng(20240804);
    std::uniform_int_distribution<int> ltv_bp(500, 9000);
    std::uniform_int_distribution<int> price_pm(900, 1100);
    std::uniform_int_distribution<int> principal_whole(1, 1000000);
    std::uniform_int_distribution<unsigned> loops(0, 30);

    for (int i = 0; i < 1000; ++i) {
        analytics::AaveRiskParams p;
        p.ltv = Fixed::from_int(ltv_bp(rng)) / Fixed::from_int(10000);
        p.liquidation_threshold = min(p.ltv + Fixed::parse("0.05"), Fixed::one());
        analytics::PriceFrame prices;
        prices.p_aave_t0 = Fixed::from_int(price_pm(rng)) / Fixed::from_int(1000);
        prices.p_secondary_t0 = Fixed::from_int(price_pm(rng)) / Fixed::from_int(1000);
        prices.market_mode =
            (i % 2 == 0) ? analytics::MarketMode::Direct : analytics::MarketMode::Indirect;
        const Fixed principal = Fixed::from_int(principal_whole(rng));
        const unsigned n = loops(rng);

        const auto std_schedule = analytics::build_schedule(principal, n, p, prices);
        const auto gen_schedule = analytics::build_schedule_generalized(
            principal, analytics::LoopPolicy::all_ones(n), p, prices);

        const auto close = [](Fixed a, Fixed b) {
            const double scale = std::max({std::fabs(a.to_double()), std::fabs(b.to_double()), 1.0});
            return std::fabs(a.to_double() - b.to_double()) <= 1e-12 * scale;
        };
        require(close(gen_schedule.total_invested, std_schedule.total_invested) &&
                    close(gen_schedule.total_collateral, std_schedule.total_collateral) &&
                    close(gen_schedule.total_debt, std_schedule.total_debt),
                "generalized form diverged at draw " + std::to_string(i));
    }
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"multiplier-limit", multiplier_limit_criterion},
        {"case-study-multipliers", case_study_criterion},
        {"hf-boundary", hf_boundary_criterion},
        {"pool-anchor", pool_anchor_criterion},
        {"amm-fuzz", amm_fuzz_criterion},
        {"detection-golden-corpus", detection_criterion},
        {"simulation-directionality", simulation_directionality_criterion},
        {"engine-invariants", engine_invariants_criterion},
        {"generalized-equivalence", generalized_equivalence_criterion},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = Clock::now();
        std::string error;
        try {
            criteria[i].run();
        } catch (const Failure& f) {
            error = f.message;
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed = ms_since(start);
        if (error.empty()) {
            std::printf("PASS  %zu  %-28s (%.1f ms)\n", i + 1, criteria[i].name.c_str(), elapsed);
        } else {
            std::printf("FAIL  %zu  %-28s (%.1f ms): %s\n", i + 1, criteria[i].name.c_str(),
                        elapsed, error.c_str());
            ++failures;
        }
    }
    return failures;
}
