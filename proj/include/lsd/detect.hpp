// Leverage-staking detection over per-address event sequences: direct
// (stake, deposit, borrow, stake) and indirect (swap, deposit, borrow, swap)
// pattern heuristics, loop counting, and realized APR.
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsd/events.hpp"
#include "lsd/fixed.hpp"

namespace lsd::detect {

enum class Strategy { None, Direct, Indirect };

const char* to_string(Strategy s);

// Quantifies the algorithms' amount-approximation: two legs match when they
// differ by at most rel_tolerance relatively or dust_floor absolutely.
struct DetectionConfig {
    Fixed rel_tolerance = Fixed::parse("0.005");
    Fixed dust_floor = Fixed::parse("0.000000001");

    void validate() const;
};

struct PositionTrace {
    std::string address;
    Strategy strategy = Strategy::None;
    // The address's strategy-relevant events in chronological order
    // (stake/deposit/borrow for direct, swap/deposit/borrow for indirect);
    // empty when strategy is None.
    std::vector<events::EventRecord> matched_sequence;
    unsigned n_loops = 0;
    Fixed principal;            // ETH input of the opening stake/swap
    Fixed total_invested;       // cumulative ETH across all strategy heads
    Fixed realized_multiplier;  // total_invested / principal
    // Additional disjoint pattern matches found after the reported one.
    unsigned alternate_matches = 0;
};

// Both detectors take one address's events sorted by (block, log_index) and
// return a no-match trace (strategy None) rather than failing.
PositionTrace detect_direct(std::span<const events::EventRecord> sorted_events,
                            const DetectionConfig& config = {});
PositionTrace detect_indirect(std::span<const events::EventRecord> sorted_events,
                              const DetectionConfig& config = {});

// Number of adjacent (head, deposit, borrow) triples in the matched
// sequence, scanned left to right without overlap.
unsigned count_loops(const PositionTrace& trace);

// Realized APR over one address's full lifecycle, aggregating deposits,
// withdrawals, borrows and repayments. Requires at least one deposit and
// one withdrawal.
Fixed realized_apr(std::span<const events::EventRecord> address_events,
                   Fixed price_at_last_withdraw, unsigned block_time_seconds = 12);

struct AddressReport {
    PositionTrace trace;
    std::optional<Fixed> apr;  // absent when the lifecycle is incomplete
};

// Runs direct detection first, indirect on the remainder, and attaches the
// realized APR where computable.
AddressReport analyze_address(std::span<const events::EventRecord> sorted_events,
                              const DetectionConfig& config, Fixed price_at_last_withdraw);

// Deterministic per-address JSON report (addresses sorted, decimal-string
// amounts).
std::string detection_report_json(
    const std::map<std::string, std::vector<events::EventRecord>>& by_address,
    const DetectionConfig& config, Fixed price_at_last_withdraw);

} // namespace lsd::detect
