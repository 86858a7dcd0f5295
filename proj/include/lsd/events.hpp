// Event-log ingestion: JSON-lines records of stake/deposit/borrow/withdraw/
// repay/swap actions, sorted chronologically.
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsd/fixed.hpp"

namespace lsd::events {

enum class Asset { Eth, Steth };
enum class EventKind { Stake, Deposit, Borrow, Withdraw, Repay, Swap };

const char* to_string(Asset a);
const char* to_string(EventKind k);
Asset asset_from_string(const std::string& s);
EventKind kind_from_string(const std::string& s);

struct TokenAmount {
    Asset asset = Asset::Eth;
    Fixed value;
};

// One log line. amount_in is the action's primary amount (ETH staked,
// stETH deposited, ETH borrowed, ...); stake and swap also carry the
// received side in amount_out.
struct EventRecord {
    std::string address;
    EventKind kind = EventKind::Stake;
    std::uint64_t block = 0;
    std::uint64_t log_index = 0;
    TokenAmount amount_in;
    std::optional<TokenAmount> amount_out;
};

struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<EventRecord> records;  // sorted by (block, log_index, address)
    std::vector<ParseIssue> issues;    // skipped lines, lenient mode only
};

// Parses one event per line. Lenient mode collects bad lines as issues and
// keeps going; strict mode fails the whole input on the first bad line.
ParseResult parse_events(std::istream& in, bool strict = false);
ParseResult parse_events_file(const std::filesystem::path& path, bool strict = false);

std::map<std::string, std::vector<EventRecord>> group_by_address(
    std::span<const EventRecord> records);

} // namespace lsd::events
