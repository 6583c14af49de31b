#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <queue>

#include "cke/rng.hpp"
#include "cke/transport.hpp"

namespace cke {

// Fault model for one direction of a simulated link. All decisions come
// from a private seeded generator consulted in send order, so a given seed
// always produces the same schedule of drops, duplicates, corruptions, and
// latencies.
struct SimFaults {
    double drop_rate = 0.0;
    double dup_rate = 0.0;
    double corrupt_rate = 0.0;
    std::uint32_t latency_min_ms = 0;
    std::uint32_t latency_max_ms = 0;
    std::uint64_t seed = 0;
};

// An adversary position on the wire: sees every datagram before fault
// injection and may pass it, modify it, or eat it (nullopt).
using TamperFn =
    std::function<std::optional<std::vector<std::uint8_t>>(const std::vector<std::uint8_t>&)>;

// An in-process full-duplex datagram link between two endpoints, with
// per-direction fault injection and tamper hooks. Ends are plain Transports
// and may be driven from different threads.
class SimChannel {
public:
    SimChannel() : SimChannel(SimFaults{}, SimFaults{}) {}
    SimChannel(const SimFaults& a_to_b, const SimFaults& b_to_a);
    ~SimChannel();

    Transport& end_a();
    Transport& end_b();

    void set_tamper_a_to_b(TamperFn fn);
    void set_tamper_b_to_a(TamperFn fn);

    struct Stats {
        std::uint64_t sent = 0;      // datagrams handed to the channel
        std::uint64_t delivered = 0; // made it into the receive queue
        std::uint64_t dropped = 0;
        std::uint64_t duplicated = 0;
        std::uint64_t corrupted = 0;
        std::uint64_t eaten = 0; // removed by the tamper hook
    };

    Stats stats_a_to_b() const;
    Stats stats_b_to_a() const;

private:
    struct Direction;
    class End;

    std::unique_ptr<Direction> a_to_b_;
    std::unique_ptr<Direction> b_to_a_;
    std::unique_ptr<End> end_a_;
    std::unique_ptr<End> end_b_;
};

} // namespace cke
