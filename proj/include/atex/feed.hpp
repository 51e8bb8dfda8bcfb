#pragma once

#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "atex/engine.hpp"

namespace atex {

/// One datagram payload: a MarketEvent in the comma/pipe line format
/// `<ms>,<Kind>,<Side>,<Trader>|<id>,<price>,<vol>[|...]`. Never contains a
/// newline.
struct FeedFrame {
    std::string raw;

    bool operator==(const FeedFrame&) const = default;
};

/// Datagram payload budget. Events that encode larger than this must be
/// split with frames_for_event before publishing.
constexpr std::size_t kMaxFrameBytes = 1400;

FeedFrame encode_event(const MarketEvent& event);

/// Exact inverse of encode_event. Throws ParseError naming the offending
/// field on malformed input.
MarketEvent decode_event(const FeedFrame& frame);

/// Splits an event with many legs into continuation frames sharing the
/// timestamp/header so every frame fits the payload budget.
std::vector<FeedFrame> frames_for_event(const MarketEvent& event,
                                        std::size_t max_bytes = kMaxFrameBytes);

/// In-process transport: lossless and order-preserving, usable from one or
/// two threads. The deterministic default for simulation sessions.
class LoopbackTransport {
public:
    void publish(const FeedFrame& frame);
    std::optional<FeedFrame> poll();
    std::size_t pending() const;

private:
    mutable std::mutex mutex_;
    std::deque<FeedFrame> queue_;
};

/// Fire-and-forget UDP publisher. Publication succeeds whether or not
/// anybody listens.
class UdpPublisher {
public:
    UdpPublisher(const std::string& host, int port);
    ~UdpPublisher();
    UdpPublisher(const UdpPublisher&) = delete;
    UdpPublisher& operator=(const UdpPublisher&) = delete;

    void publish(const FeedFrame& frame);

private:
    int fd_ = -1;
};

class UdpSubscriber {
public:
    UdpSubscriber(const std::string& bind_host, int port);
    ~UdpSubscriber();
    UdpSubscriber(const UdpSubscriber&) = delete;
    UdpSubscriber& operator=(const UdpSubscriber&) = delete;

    /// Blocks up to timeout_ms for one datagram; nullopt on timeout.
    std::optional<FeedFrame> receive(int timeout_ms);

    int port() const { return port_; }

private:
    int fd_ = -1;
    int port_ = 0;
};

}  // namespace atex
