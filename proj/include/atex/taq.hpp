#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "atex/types.hpp"

namespace atex {

/// One row of the session's canonical trade-and-quote output. Unbroken
/// market orders have price 0 and the submitted volume; split trade rows
/// carry the maker's order id and resting price; cancellation rows carry the
/// original limit price and volume 0.
struct TaqRecord {
    TimestampMs datetime_ms = 0;
    std::string trader;
    OrderId client_order_id = 0;
    Price price = 0;
    Volume volume = 0;
    Side side = Side::Buy;
    EventKind type = EventKind::New;

    bool operator==(const TaqRecord&) const = default;
};

inline constexpr const char* kTaqHeader =
    "\"DateTime\",\"TraderMnemonic\",\"ClientOrderId\",\"Price\",\"Volume\",\"Side\",\"Type\"";

/// `YYYY-MM-DD HH:MM:SS.mmm` (UTC).
std::string format_taq_timestamp(TimestampMs ms);
TimestampMs parse_taq_timestamp(const std::string& text);

void write_taq(const std::vector<TaqRecord>& records, std::ostream& out);
void write_taq(const std::vector<TaqRecord>& records, const std::string& path);

/// Exact inverse of write_taq; also accepts empirical level-1 files in the
/// same schema. Throws ParseError with the 1-based line number.
std::vector<TaqRecord> read_taq(std::istream& in);
std::vector<TaqRecord> read_taq(const std::string& path);

}  // namespace atex
