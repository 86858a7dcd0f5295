#include "lsd/amm.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"
#include "lsd/errors.hpp"

namespace lsd::amm {
namespace {

using boost::multiprecision::cpp_int;
using ordered_json = nlohmann::ordered_json;

const cpp_int kScale("1000000000000000000");
const Fixed kMaxAmount = Fixed::from_int(1000000000000LL);  // 1e12 whole tokens
const Fixed kMaxFee = Fixed::parse("0.01");

cpp_int raw(Fixed v) {
    const __int128 r = v.raw();
    const bool neg = r < 0;
    unsigned __int128 mag =
        neg ? static_cast<unsigned __int128>(-(r + 1)) + 1 : static_cast<unsigned __int128>(r);
    cpp_int out = static_cast<std::uint64_t>(mag >> 64);
    out <<= 64;
    out += static_cast<std::uint64_t>(mag);
    return neg ? -out : out;
}

Fixed from_raw(const cpp_int& v) {
    if (v < 0) {
        throw NumericError("pool math produced a negative amount");
    }
    cpp_int mag = v;
    unsigned __int128 out = static_cast<std::uint64_t>(mag >> 64);
    out <<= 64;
    out |= static_cast<std::uint64_t>(mag & 0xFFFFFFFFFFFFFFFFULL);
    if (mag >> 128 != 0) {
        throw NumericError("pool math overflow");
    }
    return Fixed::from_raw(static_cast<__int128>(out));
}

bool converged(const cpp_int& next, const cpp_int& prev) {
    const cpp_int diff = next > prev ? next - prev : prev - next;
    cpp_int tol = next / cpp_int(1000000000000LL);  // relative 1e-12
    if (tol < 1) tol = 1;
    return diff <= tol;
}

// Newton iteration for D on raw (1e-18 unit) integers; amp is 1e18-scaled.
cpp_int newton_d(const cpp_int& x, const cpp_int& y, const cpp_int& amp) {
    const cpp_int sum = x + y;
    const cpp_int ann = 4 * amp;
    cpp_int d = sum;
    for (int it = 0; it < 256; ++it) {
        cpp_int d_p = d * d / (x * 2);
        d_p = d_p * d / (y * 2);
        const cpp_int num = (ann * sum / kScale + 2 * d_p) * d;
        const cpp_int den = (ann - kScale) * d / kScale + 3 * d_p;
        const cpp_int next = num / den;
        if (converged(next, d)) {
            return next;
        }
        d = next;
    }
    throw NumericError("invariant solver did not converge in 256 iterations");
}

// Opposite reserve for a given in-side reserve x, holding D fixed:
// y^2 + y*(x + D/(4A) - D) = D^3/(16*A*x).
cpp_int newton_y(const cpp_int& x, const cpp_int& d, const cpp_int& amp) {
    const cpp_int ann = 4 * amp;
    const cpp_int c = ((d * d) / (2 * x)) * d / (8 * amp);  // D^3/(16*A*x)
    const cpp_int b = x + d * kScale / ann - d;             // may be negative
    cpp_int yv = d;
    for (int it = 0; it < 256; ++it) {
        const cpp_int num = yv * yv + c * kScale;
        const cpp_int den = 2 * yv + b;
        if (den <= 0) {
            throw NumericError("swap solver left its bracket");
        }
        const cpp_int next = num / den;
        if (converged(next, yv)) {
            return next;
        }
        yv = next;
    }
    throw NumericError("swap solver did not converge in 256 iterations");
}

} // namespace

const char* to_string(Direction d) {
    return d == Direction::StethToEth ? "steth_to_eth" : "eth_to_steth";
}

void PoolState::validate() const {
    if (!reserve_eth.is_positive() || !reserve_steth.is_positive()) {
        throw ValidationError("pool reserves must be strictly positive");
    }
    if (reserve_eth > kMaxAmount || reserve_steth > kMaxAmount) {
        throw ValidationError("pool reserves exceed the supported range");
    }
    if (!amplification.is_positive() || amplification > Fixed::from_int(1000000)) {
        throw ValidationError("amplification must be in (0, 1e6]");
    }
    if (fee.is_negative() || fee > kMaxFee) {
        throw ValidationError("fee must lie in [0, 0.01]");
    }
}

Fixed PoolState::reserve(Direction in_side) const {
    return in_side == Direction::StethToEth ? reserve_steth : reserve_eth;
}

std::string PoolState::to_json() const {
    ordered_json j;
    j["reserve_eth"] = reserve_eth.str();
    j["reserve_steth"] = reserve_steth.str();
    j["amplification"] = amplification.str();
    j["fee"] = fee.str();
    return j.dump();
}

PoolState PoolState::from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw ValidationError(std::string("bad pool snapshot: ") + e.what());
    }
    PoolState s;
    try {
        s.reserve_eth = Fixed::parse(j.at("reserve_eth").get<std::string>());
        s.reserve_steth = Fixed::parse(j.at("reserve_steth").get<std::string>());
        s.amplification = Fixed::parse(j.at("amplification").get<std::string>());
        s.fee = Fixed::parse(j.at("fee").get<std::string>());
    } catch (const ordered_json::exception& e) {
        throw ValidationError(std::string("bad pool snapshot: ") + e.what());
    }
    s.validate();
    return s;
}

Fixed invariant_d(const PoolState& state) {
    state.validate();
    return from_raw(newton_d(raw(state.reserve_eth), raw(state.reserve_steth),
                             raw(state.amplification)));
}

SwapQuote get_dy(const PoolState& state, Direction direction, Fixed dx) {
    state.validate();
    if (!dx.is_positive()) {
        throw ValidationError("swap input must be positive");
    }
    if (dx > kMaxAmount) {
        throw ValidationError("swap input exceeds the supported range");
    }

    const Fixed reserve_in = state.reserve(direction);
    const Fixed reserve_out =
        direction == Direction::StethToEth ? state.reserve_eth : state.reserve_steth;

    const cpp_int amp = raw(state.amplification);
    const cpp_int d = newton_d(raw(state.reserve_eth), raw(state.reserve_steth), amp);
    const cpp_int x_new = raw(reserve_in) + raw(dx);
    const cpp_int y_new = newton_y(x_new, d, amp);

    // One raw unit of margin in favor of the pool.
    cpp_int dy_raw = raw(reserve_out) - y_new - 1;
    if (dy_raw < 0) dy_raw = 0;
    const Fixed gross = from_raw(dy_raw);
    const Fixed fee_amount = gross * state.fee;
    const Fixed amount_out = gross - fee_amount;

    if (amount_out >= reserve_out) {
        throw NumericError("insufficient pool liquidity for swap");
    }

    SwapQuote q;
    q.amount_in = dx;
    q.amount_out = amount_out;
    q.direction = direction;
    q.effective_rate = amount_out / dx;
    q.post_state = state;
    if (direction == Direction::StethToEth) {
        q.post_state.reserve_steth += dx;
        q.post_state.reserve_eth -= amount_out;
    } else {
        q.post_state.reserve_eth += dx;
        q.post_state.reserve_steth -= amount_out;
    }
    return q;
}

Fixed spot_rate(const PoolState& state, Fixed probe_steth) {
    const SwapQuote q = get_dy(state, Direction::StethToEth, probe_steth);
    return q.effective_rate;
}

std::pair<Fixed, PoolState> exchange(const PoolState& state, Direction direction, Fixed dx) {
    const SwapQuote q = get_dy(state, direction, dx);
    return {q.amount_out, q.post_state};
}

CalibrationResult calibrate_amplification(Fixed target_rate, const PoolState& initial,
                                          Fixed dump_steth, Fixed tolerance) {
    initial.validate();
    if (!target_rate.is_positive() || target_rate >= Fixed::one()) {
        throw ValidationError("target rate must lie in (0, 1)");
    }
    if (dump_steth.is_negative()) {
        throw ValidationError("dump amount must be nonnegative");
    }

    const auto rate_for = [&](Fixed amp) {
        PoolState pool = initial;
        pool.amplification = amp;
        if (dump_steth.is_positive()) {
            pool = exchange(pool, Direction::StethToEth, dump_steth).second;
        }
        return spot_rate(pool);
    };

    Fixed lo = Fixed::from_int(1);
    Fixed hi = Fixed::from_int(5000);
    const Fixed rate_lo = rate_for(lo);
    const Fixed rate_hi = rate_for(hi);

    CalibrationResult result;
    if ((rate_lo - target_rate).abs() <= tolerance || rate_lo >= target_rate) {
        // Already acceptable at the steepest curve, or the whole range sits
        // above the target: return the lower bound.
        result.amplification = lo;
        result.achieved_rate = rate_lo;
    } else if (rate_hi <= target_rate) {
        result.amplification = hi;
        result.achieved_rate = rate_hi;
    } else {
        const Fixed granularity = Fixed::parse("0.000001");
        while (hi - lo > granularity) {
            const Fixed mid = (lo + hi) / Fixed::from_int(2);
            if (rate_for(mid) < target_rate) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const Fixed r_lo = rate_for(lo);
        const Fixed r_hi = rate_for(hi);
        const Fixed e_lo = (r_lo - target_rate).abs();
        const Fixed e_hi = (r_hi - target_rate).abs();
        if (e_lo <= e_hi) {
            result.amplification = lo;
            result.achieved_rate = r_lo;
        } else {
            result.amplification = hi;
            result.achieved_rate = r_hi;
        }
    }
    result.within_tolerance = (result.achieved_rate - target_rate).abs() <= tolerance;
    return result;
}

} // namespace lsd::amm
