#include "doctest.h"

#include <cmath>
#include <random>

#include "lsd/amm.hpp"
#include "lsd/errors.hpp"

using namespace lsd;
using namespace lsd::amm;

namespace {

PoolState pool(const char* eth, const char* steth, const char* amp, const char* fee = "0.0004") {
    PoolState p;
    p.reserve_eth = Fixed::parse(eth);
    p.reserve_steth = Fixed::parse(steth);
    p.amplification = Fixed::parse(amp);
    p.fee = Fixed::parse(fee);
    return p;
}

bool approx_rel(Fixed actual, Fixed expected, double rel) {
    const double a = actual.to_double();
    const double e = expected.to_double();
    const double scale = std::max({std::fabs(a), std::fabs(e), 1e-30});
    return std::fabs(a - e) <= rel * scale;
}

// Independent oracle: bisection on the invariant residual
// f(D) = D^3/(4xy) + (4A - 1) D - 4A (x + y), increasing in D.
long double bisect_d(long double x, long double y, long double a) {
    const auto residual = [&](long double d) {
        return d * d * d / (4.0L * x * y) + (4.0L * a - 1.0L) * d - 4.0L * a * (x + y);
    };
    long double lo = 0.0L;
    long double hi = x + y;  // residual(x+y) >= 0 by AM-GM
    for (int i = 0; i < 200; ++i) {
        const long double mid = (lo + hi) / 2.0L;
        if (residual(mid) < 0.0L) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / 2.0L;
}

const PoolState kForkPool = pool("265972", "266966", "50");

} // namespace

TEST_CASE("balanced pool invariant equals total reserves") {
    for (const char* amp : {"1", "50", "5000"}) {
        const Fixed d = invariant_d(pool("1000", "1000", amp));
        CHECK(approx_rel(d, Fixed::from_int(2000), 1e-12));
    }
}

TEST_CASE("invariant matches the bisection oracle on the fork-state reserves") {
    const Fixed d = invariant_d(kForkPool);
    const long double oracle = bisect_d(265972.0L, 266966.0L, 50.0L);
    CHECK(std::fabs(d.to_double() - static_cast<double>(oracle)) <=
          1e-9 * static_cast<double>(oracle));
}

TEST_CASE("invariant is homogeneous of degree one") {
    const PoolState base = pool("12345", "54321", "80");
    const PoolState scaled = pool("123450", "543210", "80");
    const Fixed d = invariant_d(base);
    const Fixed d10 = invariant_d(scaled);
    CHECK(approx_rel(d10, d * Fixed::from_int(10), 1e-12));
}

TEST_CASE("marginal swap in a deep balanced pool prices at 1 minus fee") {
    const PoolState p = pool("1000000", "1000000", "50", "0.0004");
    const SwapQuote q = get_dy(p, Direction::StethToEth, Fixed::parse("0.0001"));
    CHECK(std::fabs(q.effective_rate.to_double() - 0.9996) < 1e-4);
}

TEST_CASE("swap input validation") {
    CHECK_THROWS_AS(get_dy(kForkPool, Direction::StethToEth, Fixed::zero()), ValidationError);
    CHECK_THROWS_AS(get_dy(kForkPool, Direction::StethToEth, Fixed::parse("-5")),
                    ValidationError);
    PoolState bad = kForkPool;
    bad.reserve_eth = Fixed::zero();
    CHECK_THROWS_AS(get_dy(bad, Direction::StethToEth, Fixed::one()), ValidationError);
    bad = kForkPool;
    bad.fee = Fixed::parse("0.02");
    CHECK_THROWS_AS(get_dy(bad, Direction::StethToEth, Fixed::one()), ValidationError);
}

TEST_CASE("executing a quote commits exactly the quoted amounts") {
    const SwapQuote q = get_dy(kForkPool, Direction::StethToEth, Fixed::from_int(1000));
    const auto [out, post] = exchange(kForkPool, Direction::StethToEth, Fixed::from_int(1000));
    CHECK(out == q.amount_out);
    CHECK(post.reserve_eth == q.post_state.reserve_eth);
    CHECK(post.reserve_steth == q.post_state.reserve_steth);

    // Accounting: input side grows by dx, output side shrinks by amount_out,
    // fee retained in the pool.
    CHECK(post.reserve_steth == kForkPool.reserve_steth + Fixed::from_int(1000));
    CHECK(post.reserve_eth == kForkPool.reserve_eth - out);
}

TEST_CASE("invariant never decreases across a fee-charging exchange") {
    const Fixed d0 = invariant_d(kForkPool);
    const auto [out, post] = exchange(kForkPool, Direction::StethToEth, Fixed::from_int(20000));
    (void)out;
    const Fixed d1 = invariant_d(post);
    CHECK(d1 >= d0);

    PoolState feeless = kForkPool;
    feeless.fee = Fixed::zero();
    const Fixed f0 = invariant_d(feeless);
    const auto [out2, post2] = exchange(feeless, Direction::StethToEth, Fixed::from_int(20000));
    (void)out2;
    const Fixed f1 = invariant_d(post2);
    CHECK(approx_rel(f1, f0, 1e-9));
}

TEST_CASE("sequential sells trade at convex impact") {
    // Execution is path independent along the invariant, so a feeless split
    // cannot beat the single quote.
    PoolState feeless = kForkPool;
    feeless.fee = Fixed::zero();
    const Fixed single = get_dy(feeless, Direction::StethToEth, Fixed::from_int(100)).amount_out;
    const auto [first, mid] = exchange(feeless, Direction::StethToEth, Fixed::from_int(50));
    const auto [second, post] = exchange(mid, Direction::StethToEth, Fixed::from_int(50));
    (void)post;
    CHECK(first + second <= single);

    // The second executed leg prices strictly below a fresh quote on the
    // original state; a small pool makes the impact pronounced.
    std::mt19937_64 rng(5150);
    std::uniform_int_distribution<std::int64_t> reserve(100, 100000);
    std::uniform_int_distribution<std::int64_t> amp(1, 500);
    for (int i = 0; i < 200; ++i) {
        PoolState p;
        p.reserve_eth = Fixed::from_int(reserve(rng));
        p.reserve_steth = Fixed::from_int(reserve(rng));
        p.amplification = Fixed::from_int(amp(rng));
        p.fee = (i % 2 == 0) ? Fixed::zero() : Fixed::parse("0.0004");
        const Fixed leg = max(Fixed::one(), p.reserve_steth / Fixed::from_int(10));
        const Fixed quoted = get_dy(p, Direction::StethToEth, leg).amount_out;
        const auto [a, mid2] = exchange(p, Direction::StethToEth, leg);
        const auto [b, end] = exchange(mid2, Direction::StethToEth, leg);
        (void)end;
        CHECK(a + b < quoted + quoted);
    }
}

TEST_CASE("round trips lose value over randomized pools and trades") {
    std::mt19937_64 rng(424242);
    std::uniform_int_distribution<std::int64_t> reserve(1, 10000000);
    std::uniform_int_distribution<std::int64_t> amp(1, 5000);
    std::uniform_int_distribution<int> fee_bps(0, 100);
    for (int i = 0; i < 1000; ++i) {
        PoolState p;
        p.reserve_eth = Fixed::from_int(reserve(rng));
        p.reserve_steth = Fixed::from_int(reserve(rng));
        p.amplification = Fixed::from_int(amp(rng));
        p.fee = Fixed::from_int(fee_bps(rng)) / Fixed::from_int(10000);

        const Direction fwd = (i % 2 == 0) ? Direction::StethToEth : Direction::EthToSteth;
        const Direction back =
            fwd == Direction::StethToEth ? Direction::EthToSteth : Direction::StethToEth;
        const Fixed dx =
            max(Fixed::smallest(), p.reserve(fwd) / Fixed::from_int(1 + (i % 17)));

        const auto [out, mid] = exchange(p, fwd, dx);
        if (out.is_zero()) continue;
        const auto [back_out, post] = exchange(mid, back, out);
        (void)post;
        CHECK(back_out <= dx);
    }
}

TEST_CASE("selling stETH never raises the spot rate") {
    PoolState p = kForkPool;
    Fixed prev = spot_rate(p);
    for (int i = 0; i < 12; ++i) {
        p = exchange(p, Direction::StethToEth, Fixed::from_int(25000)).second;
        const Fixed rate = spot_rate(p);
        CHECK(rate <= prev);
        prev = rate;
    }
}

TEST_CASE("post-dump rate is monotone increasing in amplification") {
    Fixed prev = Fixed::zero();
    for (const char* amp : {"5", "20", "80", "320", "1280"}) {
        PoolState p = kForkPool;
        p.amplification = Fixed::parse(amp);
        p = exchange(p, Direction::StethToEth, Fixed::from_int(170000)).second;
        const Fixed rate = spot_rate(p);
        CHECK(rate > prev);
        prev = rate;
    }
}

TEST_CASE("calibration reproduces the post-dump anchor rate") {
    const auto result = calibrate_amplification(Fixed::parse("0.9052"), kForkPool,
                                                Fixed::from_int(170000));
    CHECK(result.within_tolerance);
    CHECK(std::fabs(result.achieved_rate.to_double() - 0.9052) <= 0.005);

    PoolState p = kForkPool;
    p.amplification = result.amplification;
    p = exchange(p, Direction::StethToEth, Fixed::from_int(170000)).second;
    CHECK(std::fabs(spot_rate(p).to_double() - result.achieved_rate.to_double()) < 1e-9);
}

TEST_CASE("calibration degenerate and unreachable targets") {
    const auto no_dump = calibrate_amplification(Fixed::parse("0.9994"), kForkPool, Fixed::zero());
    CHECK(no_dump.amplification == Fixed::from_int(1));
    CHECK(no_dump.within_tolerance);

    const auto unreachable = calibrate_amplification(Fixed::parse("0.5"), kForkPool,
                                                     Fixed::from_int(100));
    CHECK(!unreachable.within_tolerance);
    CHECK(unreachable.amplification == Fixed::from_int(1));
}

TEST_CASE("pool snapshot JSON round-trips bit-exactly") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::int64_t> raw(1, 1000000000000000LL);
    for (int i = 0; i < 200; ++i) {
        PoolState p;
        p.reserve_eth = Fixed::from_raw(raw(rng)) * Fixed::from_int(1000);
        p.reserve_steth = Fixed::from_raw(raw(rng)) * Fixed::from_int(1000);
        p.amplification = Fixed::from_int(1 + (raw(rng) % 5000));
        p.fee = Fixed::from_int(raw(rng) % 100) / Fixed::from_int(10000);
        const PoolState back = PoolState::from_json_text(p.to_json());
        CHECK(back.reserve_eth == p.reserve_eth);
        CHECK(back.reserve_steth == p.reserve_steth);
        CHECK(back.amplification == p.amplification);
        CHECK(back.fee == p.fee);
    }
    CHECK_THROWS_AS(PoolState::from_json_text("{"), ValidationError);
    CHECK_THROWS_AS(PoolState::from_json_text("{\"reserve_eth\":\"1\"}"), ValidationError);
}

TEST_CASE("newton solvers keep converging across a randomized sweep") {
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<std::int64_t> reserve(1, 10000000);
    std::uniform_int_distribution<std::int64_t> amp(1, 5000);
    for (int i = 0; i < 500; ++i) {
        PoolState p;
        p.reserve_eth = Fixed::from_int(reserve(rng));
        p.reserve_steth = Fixed::from_int(reserve(rng));
        p.amplification = Fixed::from_int(amp(rng));
        p.fee = Fixed::parse("0.0004");
        CHECK_NOTHROW(invariant_d(p));
        const Fixed dx = max(Fixed::smallest(), p.reserve_steth / Fixed::from_int(3));
        CHECK_NOTHROW(get_dy(p, Direction::StethToEth, dx));
    }
}

TEST_CASE("dust quotes may round to zero output and still commit") {
    PoolState p = pool("1000000", "1000000", "50", "0.0004");
    const auto quote = get_dy(p, Direction::StethToEth, Fixed::smallest());
    CHECK(quote.amount_out.is_zero());
    CHECK(quote.post_state.reserve_steth == p.reserve_steth + Fixed::smallest());
    CHECK(quote.post_state.reserve_eth == p.reserve_eth);
}

TEST_CASE("oversized trades are rejected") {
    CHECK_THROWS_AS(get_dy(kForkPool, Direction::StethToEth, Fixed::from_int(2000000000000LL)),
                    ValidationError);
}
