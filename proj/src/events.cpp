#include "lsd/events.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>

#include "json.hpp"
#include "lsd/errors.hpp"

namespace lsd::events {
namespace {

using nlohmann::json;

TokenAmount parse_amount(const json& j) {
    TokenAmount a;
    a.asset = asset_from_string(j.at("asset").get<std::string>());
    a.value = Fixed::parse(j.at("value").get<std::string>());
    if (!a.value.is_positive()) {
        throw ValidationError("amounts must be positive");
    }
    return a;
}

void check_asset_shape(const EventRecord& e) {
    switch (e.kind) {
    case EventKind::Stake:
        if (!e.amount_out) throw ValidationError("stake needs amount_out");
        if (e.amount_in.asset != Asset::Eth || e.amount_out->asset != Asset::Steth) {
            throw ValidationError("stake converts ETH to stETH");
        }
        break;
    case EventKind::Swap:
        if (!e.amount_out) throw ValidationError("swap needs amount_out");
        if (e.amount_in.asset == e.amount_out->asset) {
            throw ValidationError("swap sides must differ");
        }
        break;
    case EventKind::Deposit:
    case EventKind::Withdraw:
        if (e.amount_in.asset != Asset::Steth) {
            throw ValidationError("deposit/withdraw move stETH collateral");
        }
        break;
    case EventKind::Borrow:
    case EventKind::Repay:
        if (e.amount_in.asset != Asset::Eth) {
            throw ValidationError("borrow/repay move ETH debt");
        }
        break;
    }
}

EventRecord parse_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("bad JSON: ") + e.what());
    }
    EventRecord rec;
    try {
        rec.address = j.at("address").get<std::string>();
        rec.kind = kind_from_string(j.at("kind").get<std::string>());
        if (!j.at("block").is_number_unsigned() || !j.at("log_index").is_number_unsigned()) {
            throw ValidationError("block and log_index must be unsigned integers");
        }
        rec.block = j.at("block").get<std::uint64_t>();
        rec.log_index = j.at("log_index").get<std::uint64_t>();
        rec.amount_in = parse_amount(j.at("amount_in"));
        if (j.contains("amount_out") && !j.at("amount_out").is_null()) {
            rec.amount_out = parse_amount(j.at("amount_out"));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad event record: ") + e.what());
    }
    if (rec.address.empty()) {
        throw ValidationError("address must be nonempty");
    }
    check_asset_shape(rec);
    return rec;
}

} // namespace

const char* to_string(Asset a) {
    return a == Asset::Eth ? "ETH" : "stETH";
}

const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::Stake: return "stake";
    case EventKind::Deposit: return "deposit";
    case EventKind::Borrow: return "borrow";
    case EventKind::Withdraw: return "withdraw";
    case EventKind::Repay: return "repay";
    case EventKind::Swap: return "swap";
    }
    return "?";
}

Asset asset_from_string(const std::string& s) {
    if (s == "ETH") return Asset::Eth;
    if (s == "stETH") return Asset::Steth;
    throw ValidationError("unknown asset: '" + s + "'");
}

EventKind kind_from_string(const std::string& s) {
    if (s == "stake") return EventKind::Stake;
    if (s == "deposit") return EventKind::Deposit;
    if (s == "borrow") return EventKind::Borrow;
    if (s == "withdraw") return EventKind::Withdraw;
    if (s == "repay") return EventKind::Repay;
    if (s == "swap") return EventKind::Swap;
    throw ValidationError("unknown event kind: '" + s + "'");
}

ParseResult parse_events(std::istream& in, bool strict) {
    ParseResult result;
    std::set<std::tuple<std::string, std::uint64_t, std::uint64_t>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            EventRecord rec = parse_line(line);
            if (!seen.insert({rec.address, rec.block, rec.log_index}).second) {
                throw ValidationError("duplicate (block, log_index) for address " + rec.address);
            }
            result.records.push_back(std::move(rec));
        } catch (const ValidationError& e) {
            if (strict) {
                throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
            }
            result.issues.push_back({line_no, e.what()});
        }
    }
    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const EventRecord& a, const EventRecord& b) {
                         return std::tie(a.block, a.log_index, a.address) <
                                std::tie(b.block, b.log_index, b.address);
                     });
    return result;
}

ParseResult parse_events_file(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open events file: " + path.string());
    }
    return parse_events(in, strict);
}

std::map<std::string, std::vector<EventRecord>> group_by_address(
    std::span<const EventRecord> records) {
    std::map<std::string, std::vector<EventRecord>> out;
    for (const auto& rec : records) {
        out[rec.address].push_back(rec);
    }
    return out;
}

} // namespace lsd::events
