#include "atex/feed.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <charconv>
#include <cstring>

namespace atex {

namespace {

std::string encode_header(const MarketEvent& event) {
    std::string out = std::to_string(event.timestamp_ms);
    out += ',';
    out += to_string(event.kind);
    out += ',';
    out += to_string(event.side);
    out += ',';
    out += event.trader_id;
    return out;
}

void append_leg(std::string& out, const EventLeg& leg) {
    out += '|';
    out += std::to_string(leg.order_id);
    out += ',';
    out += std::to_string(leg.price);
    out += ',';
    out += std::to_string(leg.volume);
}

std::int64_t parse_int(std::string_view text, const char* field) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError(std::string("decode_event: bad ") + field + " '" + std::string(text) +
                         "'");
    return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

FeedFrame encode_event(const MarketEvent& event) {
    std::string out = encode_header(event);
    for (const auto& leg : event.legs) append_leg(out, leg);
    return {out};
}

MarketEvent decode_event(const FeedFrame& frame) {
    if (frame.raw.find('\n') != std::string::npos)
        throw ParseError("decode_event: frame contains a newline");
    const auto segments = split(frame.raw, '|');
    const auto header = split(segments.front(), ',');
    if (header.size() != 4)
        throw ParseError("decode_event: header needs 4 fields, got " +
                         std::to_string(header.size()));

    MarketEvent event;
    event.timestamp_ms = parse_int(header[0], "timestamp");
    if (header[1] == "New")
        event.kind = EventKind::New;
    else if (header[1] == "Trade")
        event.kind = EventKind::Trade;
    else if (header[1] == "Cancelled")
        event.kind = EventKind::Cancelled;
    else
        throw ParseError("decode_event: bad kind '" + std::string(header[1]) + "'");
    if (header[2] == "Buy")
        event.side = Side::Buy;
    else if (header[2] == "Sell")
        event.side = Side::Sell;
    else
        throw ParseError("decode_event: bad side '" + std::string(header[2]) + "'");
    event.trader_id = std::string(header[3]);

    if (segments.size() < 2) throw ParseError("decode_event: event has no legs");
    for (std::size_t i = 1; i < segments.size(); ++i) {
        const auto fields = split(segments[i], ',');
        if (fields.size() != 3)
            throw ParseError("decode_event: leg " + std::to_string(i) + " needs 3 fields");
        EventLeg leg;
        leg.order_id = static_cast<OrderId>(parse_int(fields[0], "leg order id"));
        leg.price = parse_int(fields[1], "leg price");
        leg.volume = parse_int(fields[2], "leg volume");
        event.legs.push_back(leg);
    }
    return event;
}

std::vector<FeedFrame> frames_for_event(const MarketEvent& event, std::size_t max_bytes) {
    const std::string header = encode_header(event);
    if (event.legs.empty()) throw Error("frames_for_event: event has no legs");

    std::vector<FeedFrame> frames;
    std::string current = header;
    std::size_t legs_in_current = 0;
    for (const auto& leg : event.legs) {
        std::string encoded;
        append_leg(encoded, leg);
        if (legs_in_current > 0 && current.size() + encoded.size() > max_bytes) {
            frames.push_back({current});
            current = header;
            legs_in_current = 0;
        }
        current += encoded;
        ++legs_in_current;
        if (current.size() > max_bytes)
            throw Error("frames_for_event: single leg exceeds the frame budget");
    }
    frames.push_back({current});
    return frames;
}

void LoopbackTransport::publish(const FeedFrame& frame) {
    if (frame.raw.size() > kMaxFrameBytes)
        throw Error("publish: frame exceeds " + std::to_string(kMaxFrameBytes) + " bytes");
    std::lock_guard lock(mutex_);
    queue_.push_back(frame);
}

std::optional<FeedFrame> LoopbackTransport::poll() {
    std::lock_guard lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    FeedFrame frame = std::move(queue_.front());
    queue_.pop_front();
    return frame;
}

std::size_t LoopbackTransport::pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

UdpPublisher::UdpPublisher(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw Error("UdpPublisher: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        throw Error("UdpPublisher: bad host '" + host + "'");
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw Error("UdpPublisher: connect() failed");
    }
}

UdpPublisher::~UdpPublisher() {
    if (fd_ >= 0) ::close(fd_);
}

void UdpPublisher::publish(const FeedFrame& frame) {
    if (frame.raw.size() > kMaxFrameBytes)
        throw Error("publish: frame exceeds " + std::to_string(kMaxFrameBytes) + " bytes");
    const auto sent = ::send(fd_, frame.raw.data(), frame.raw.size(), 0);
    if (sent < 0 || static_cast<std::size_t>(sent) != frame.raw.size())
        throw Error("publish: send() failed");
}

UdpSubscriber::UdpSubscriber(const std::string& bind_host, int port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw Error("UdpSubscriber: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        throw Error("UdpSubscriber: bad host '" + bind_host + "'");
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw Error("UdpSubscriber: bind() failed on port " + std::to_string(port));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

UdpSubscriber::~UdpSubscriber() {
    if (fd_ >= 0) ::close(fd_);
}

std::optional<FeedFrame> UdpSubscriber::receive(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready <= 0) return std::nullopt;
    char buffer[kMaxFrameBytes + 1];
    const auto got = ::recv(fd_, buffer, sizeof(buffer), 0);
    if (got < 0) throw Error("receive: recv() failed");
    return FeedFrame{std::string(buffer, static_cast<std::size_t>(got))};
}

}  // namespace atex
