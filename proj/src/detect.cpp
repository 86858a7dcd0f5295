#include "lsd/detect.hpp"

#include <algorithm>

#include "json.hpp"
#include "lsd/analytics.hpp"
#include "lsd/errors.hpp"

namespace lsd::detect {
namespace {

using events::Asset;
using events::EventKind;
using events::EventRecord;
using ordered_json = nlohmann::ordered_json;

bool approx(Fixed a, Fixed b, const DetectionConfig& cfg) {
    const Fixed diff = (a - b).abs();
    const Fixed rel = max(a, b) * cfg.rel_tolerance;
    return diff <= max(rel, cfg.dust_floor);
}

// Strategy heads: a stake, or a swap that converts ETH into stETH.
bool is_head(const EventRecord& e, Strategy strat) {
    if (strat == Strategy::Direct) {
        return e.kind == EventKind::Stake;
    }
    return e.kind == EventKind::Swap && e.amount_in.asset == Asset::Eth && e.amount_out &&
           e.amount_out->asset == Asset::Steth;
}

bool is_relevant(const EventRecord& e, Strategy strat) {
    if (e.kind == EventKind::Deposit || e.kind == EventKind::Borrow) return true;
    if (strat == Strategy::Direct) return e.kind == EventKind::Stake;
    return e.kind == EventKind::Swap;
}

struct MatchIndices {
    std::size_t head0, deposit, borrow, head1;
};

// Earliest (lexicographically smallest index tuple) chronological
// sub-sequence (head, deposit, borrow, head) satisfying the three amount
// conditions. Complete search, so a match found at one tolerance is still
// found at any larger tolerance.
std::optional<MatchIndices> find_match(std::span<const EventRecord> seq, std::size_t from,
                                       Strategy strat, const DetectionConfig& cfg) {
    const std::size_t n = seq.size();
    for (std::size_t i0 = from; i0 < n; ++i0) {
        if (!is_head(seq[i0], strat)) continue;
        const Fixed steth_received = seq[i0].amount_out->value;
        for (std::size_t i1 = i0 + 1; i1 < n; ++i1) {
            if (seq[i1].kind != EventKind::Deposit) continue;
            const Fixed deposited = seq[i1].amount_in.value;
            if (!approx(steth_received, deposited, cfg)) continue;  // (i)
            for (std::size_t i2 = i1 + 1; i2 < n; ++i2) {
                if (seq[i2].kind != EventKind::Borrow) continue;
                const Fixed borrowed = seq[i2].amount_in.value;
                if (!(deposited > borrowed)) continue;  // (ii)
                for (std::size_t i3 = i2 + 1; i3 < n; ++i3) {
                    if (!is_head(seq[i3], strat)) continue;
                    if (approx(borrowed, seq[i3].amount_in.value, cfg)) {  // (iii)
                        return MatchIndices{i0, i1, i2, i3};
                    }
                }
            }
        }
    }
    return std::nullopt;
}

PositionTrace detect(std::span<const EventRecord> sorted_events, Strategy strat,
                     const DetectionConfig& cfg) {
    cfg.validate();

    PositionTrace trace;
    if (!sorted_events.empty()) {
        trace.address = sorted_events.front().address;
    }

    std::vector<EventRecord> relevant;
    relevant.reserve(sorted_events.size());
    for (const auto& e : sorted_events) {
        if (is_relevant(e, strat)) relevant.push_back(e);
    }

    const auto match = find_match(relevant, 0, strat, cfg);
    if (!match) {
        return trace;  // strategy None; no-match is a value, not an error
    }

    trace.strategy = strat;
    trace.matched_sequence = relevant;
    trace.principal = relevant[match->head0].amount_in.value;
    trace.total_invested = Fixed::zero();
    for (std::size_t i = match->head0; i < relevant.size(); ++i) {
        if (is_head(relevant[i], strat)) {
            trace.total_invested += relevant[i].amount_in.value;
        }
    }
    trace.realized_multiplier = trace.total_invested / trace.principal;

    std::size_t from = match->head1 + 1;
    while (auto alt = find_match(relevant, from, strat, cfg)) {
        ++trace.alternate_matches;
        from = alt->head1 + 1;
    }

    trace.n_loops = count_loops(trace);
    return trace;
}

} // namespace

const char* to_string(Strategy s) {
    switch (s) {
    case Strategy::None: return "none";
    case Strategy::Direct: return "direct";
    case Strategy::Indirect: return "indirect";
    }
    return "?";
}

void DetectionConfig::validate() const {
    if (rel_tolerance.is_negative() || rel_tolerance > Fixed::parse("0.05")) {
        throw ValidationError("detection tolerance must lie in [0, 0.05]");
    }
    if (dust_floor.is_negative()) {
        throw ValidationError("dust floor must be nonnegative");
    }
}

PositionTrace detect_direct(std::span<const events::EventRecord> sorted_events,
                            const DetectionConfig& config) {
    return detect(sorted_events, Strategy::Direct, config);
}

PositionTrace detect_indirect(std::span<const events::EventRecord> sorted_events,
                              const DetectionConfig& config) {
    return detect(sorted_events, Strategy::Indirect, config);
}

unsigned count_loops(const PositionTrace& trace) {
    if (trace.strategy == Strategy::None) return 0;
    const auto& seq = trace.matched_sequence;
    unsigned count = 0;
    std::size_t i = 0;
    while (i + 2 < seq.size()) {
        if (is_head(seq[i], trace.strategy) && seq[i + 1].kind == EventKind::Deposit &&
            seq[i + 2].kind == EventKind::Borrow) {
            ++count;
            i += 3;
        } else {
            ++i;
        }
    }
    // The matched tuple itself evidences one completed loop even when noise
    // breaks triple adjacency.
    return std::max(count, 1u);
}

Fixed realized_apr(std::span<const events::EventRecord> address_events,
                   Fixed price_at_last_withdraw, unsigned block_time_seconds) {
    analytics::ActualAprInputs in;
    in.steth_price_at_last_withdraw = price_at_last_withdraw;
    in.block_time_seconds = block_time_seconds;

    bool saw_deposit = false;
    bool saw_withdraw = false;
    for (const auto& e : address_events) {
        switch (e.kind) {
        case EventKind::Deposit:
            in.total_deposit_steth += e.amount_in.value;
            if (!saw_deposit) {
                in.first_deposit_block = e.block;
                saw_deposit = true;
            }
            break;
        case EventKind::Withdraw:
            in.total_withdraw_steth += e.amount_in.value;
            in.last_withdraw_block = e.block;
            saw_withdraw = true;
            break;
        case EventKind::Borrow:
            in.total_borrow_eth += e.amount_in.value;
            break;
        case EventKind::Repay:
            in.total_repay_eth += e.amount_in.value;
            break;
        default:
            break;
        }
    }
    if (!saw_deposit || !saw_withdraw) {
        throw ValidationError("realized APR needs at least one deposit and one withdrawal");
    }
    return analytics::actual_apr(in);
}

AddressReport analyze_address(std::span<const events::EventRecord> sorted_events,
                              const DetectionConfig& config, Fixed price_at_last_withdraw) {
    AddressReport report;
    report.trace = detect_direct(sorted_events, config);
    if (report.trace.strategy == Strategy::None) {
        PositionTrace indirect = detect_indirect(sorted_events, config);
        if (indirect.strategy != Strategy::None) {
            report.trace = std::move(indirect);
        }
    }
    try {
        report.apr = realized_apr(sorted_events, price_at_last_withdraw);
    } catch (const ValidationError&) {
        report.apr = std::nullopt;  // incomplete lifecycle: absence is data
    }
    return report;
}

std::string detection_report_json(
    const std::map<std::string, std::vector<events::EventRecord>>& by_address,
    const DetectionConfig& config, Fixed price_at_last_withdraw) {
    ordered_json addresses = ordered_json::array();
    unsigned direct = 0, indirect = 0, none = 0;
    for (const auto& [address, records] : by_address) {
        const AddressReport report = analyze_address(records, config, price_at_last_withdraw);
        const PositionTrace& t = report.trace;
        ordered_json row;
        row["address"] = address;
        row["strategy"] = to_string(t.strategy);
        if (t.strategy == Strategy::None) {
            ++none;
            row["n_loops"] = 0;
            row["principal"] = nullptr;
            row["total_invested"] = nullptr;
            row["realized_multiplier"] = nullptr;
        } else {
            (t.strategy == Strategy::Direct ? direct : indirect) += 1;
            row["n_loops"] = t.n_loops;
            row["principal"] = t.principal.str();
            row["total_invested"] = t.total_invested.str();
            row["realized_multiplier"] = t.realized_multiplier.str();
        }
        row["realized_apr"] = report.apr ? ordered_json(report.apr->str()) : ordered_json(nullptr);
        row["alternate_matches"] = t.alternate_matches;
        addresses.push_back(std::move(row));
    }

    ordered_json out;
    out["addresses"] = std::move(addresses);
    out["summary"] = {{"total", by_address.size()},
                      {"direct", direct},
                      {"indirect", indirect},
                      {"none", none}};
    return out.dump(2) + "\n";
}

} // namespace lsd::detect
