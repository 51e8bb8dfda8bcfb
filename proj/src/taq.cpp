#include "atex/taq.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace atex {

std::string format_taq_timestamp(TimestampMs ms) {
    std::time_t seconds = static_cast<std::time_t>(ms / 1000);
    int millis = static_cast<int>(ms % 1000);
    if (millis < 0) {
        millis += 1000;
        seconds -= 1;
    }
    std::tm tm{};
    gmtime_r(&seconds, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d.%03d", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
    return buf;
}

TimestampMs parse_taq_timestamp(const std::string& text) {
    std::tm tm{};
    int millis = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d.%d", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                    &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &millis) != 7)
        throw ParseError("parse_taq_timestamp: bad timestamp '" + text + "'");
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    const std::time_t seconds = timegm(&tm);
    return static_cast<TimestampMs>(seconds) * 1000 + millis;
}

namespace {

void append_quoted(std::string& line, const std::string& field) {
    line += '"';
    line += field;
    line += '"';
}

std::vector<std::string> parse_quoted_row(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] != '"')
            throw ParseError("read_taq: line " + std::to_string(line_no) +
                             ": expected opening quote");
        const auto close = line.find('"', i + 1);
        if (close == std::string::npos)
            throw ParseError("read_taq: line " + std::to_string(line_no) + ": unterminated field");
        fields.push_back(line.substr(i + 1, close - i - 1));
        i = close + 1;
        if (i < line.size()) {
            if (line[i] != ',')
                throw ParseError("read_taq: line " + std::to_string(line_no) +
                                 ": expected comma after field");
            ++i;
        }
    }
    return fields;
}

std::int64_t parse_field_int(const std::string& text, std::size_t line_no, const char* name) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ParseError("read_taq: line " + std::to_string(line_no) + ": bad " + name + " '" +
                         text + "'");
    }
}

}  // namespace

void write_taq(const std::vector<TaqRecord>& records, std::ostream& out) {
    out << kTaqHeader << '\n';
    for (const auto& r : records) {
        std::string line;
        append_quoted(line, format_taq_timestamp(r.datetime_ms));
        line += ',';
        append_quoted(line, r.trader);
        line += ',';
        append_quoted(line, std::to_string(r.client_order_id));
        line += ',';
        append_quoted(line, std::to_string(r.price));
        line += ',';
        append_quoted(line, std::to_string(r.volume));
        line += ',';
        append_quoted(line, to_string(r.side));
        line += ',';
        append_quoted(line, to_string(r.type));
        out << line << '\n';
    }
}

void write_taq(const std::vector<TaqRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_taq: cannot open '" + path + "'");
    write_taq(records, out);
}

std::vector<TaqRecord> read_taq(std::istream& in) {
    std::vector<TaqRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kTaqHeader)
                throw ParseError("read_taq: line 1: unexpected header '" + line + "'");
            continue;
        }
        const auto fields = parse_quoted_row(line, line_no);
        if (fields.size() != 7)
            throw ParseError("read_taq: line " + std::to_string(line_no) + ": expected 7 fields, got " +
                             std::to_string(fields.size()));
        TaqRecord r;
        r.datetime_ms = parse_taq_timestamp(fields[0]);
        r.trader = fields[1];
        r.client_order_id = static_cast<OrderId>(parse_field_int(fields[2], line_no, "order id"));
        r.price = parse_field_int(fields[3], line_no, "price");
        r.volume = parse_field_int(fields[4], line_no, "volume");
        if (fields[5] == "Buy")
            r.side = Side::Buy;
        else if (fields[5] == "Sell")
            r.side = Side::Sell;
        else
            throw ParseError("read_taq: line " + std::to_string(line_no) + ": bad side '" +
                             fields[5] + "'");
        if (fields[6] == "New")
            r.type = EventKind::New;
        else if (fields[6] == "Trade")
            r.type = EventKind::Trade;
        else if (fields[6] == "Cancelled")
            r.type = EventKind::Cancelled;
        else
            throw ParseError("read_taq: line " + std::to_string(line_no) + ": bad type '" +
                             fields[6] + "'");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<TaqRecord> read_taq(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_taq: cannot open '" + path + "'");
    return read_taq(in);
}

}  // namespace atex
