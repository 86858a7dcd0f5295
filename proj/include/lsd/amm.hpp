// Two-asset StableSwap pool: invariant solving, swap quoting and execution,
// and amplification calibration against a target post-dump exchange rate.
#pragma once

#include <string>
#include <utility>

#include "lsd/fixed.hpp"

namespace lsd::amm {

enum class Direction { StethToEth, EthToSteth };

const char* to_string(Direction d);

struct PoolState {
    Fixed reserve_eth;
    Fixed reserve_steth;
    Fixed amplification;  // A in the invariant 4A(x+y) + D = 4AD + D^3/(4xy)
    Fixed fee;            // output fee ratio, [0, 0.01]

    void validate() const;

    Fixed reserve(Direction in_side) const;

    // Snapshot with decimal-string amounts; parse/serialize round-trips
    // bit-exactly.
    std::string to_json() const;
    static PoolState from_json_text(const std::string& text);
};

struct SwapQuote {
    Fixed amount_in;
    Fixed amount_out;
    Direction direction = Direction::StethToEth;
    Fixed effective_rate;  // amount_out / amount_in
    PoolState post_state;
};

// D solving 4A(x+y) + D = 4AD + D^3/(4xy) by Newton iteration, relative
// tolerance 1e-12 within 256 iterations.
Fixed invariant_d(const PoolState& state);

// Quote: hold D fixed, solve the opposite reserve for the grown input side,
// charge the fee on output. Output is floor-rounded with a one-unit margin
// in favor of the pool; the fee stays in the pool.
SwapQuote get_dy(const PoolState& state, Direction direction, Fixed dx);

// Marginal price proxy: quoted output of a probe-sized stETH sale divided by
// the probe, fee included. Does not mutate state.
Fixed spot_rate(const PoolState& state, Fixed probe_steth = Fixed::from_int(100));

// Execute a swap, committing the post-trade balances.
std::pair<Fixed, PoolState> exchange(const PoolState& state, Direction direction, Fixed dx);

struct CalibrationResult {
    Fixed amplification;
    Fixed achieved_rate;
    bool within_tolerance = false;
};

// Binary search over amplification in [1, 5000] for the A whose post-dump
// probe rate is closest to target_rate. The post-dump rate is monotone
// increasing in A (flatter curve, smaller impact), so bisection applies.
// An unreachable target yields the nearest bound with within_tolerance
// false.
CalibrationResult calibrate_amplification(Fixed target_rate, const PoolState& initial,
                                          Fixed dump_steth,
                                          Fixed tolerance = Fixed::parse("0.005"));

} // namespace lsd::amm
