#include "cke/sim_channel.hpp"

#include <algorithm>

namespace cke {

// One direction: a clock-ordered delivery queue fed by send() under the
// fault model, drained by recv() with a deadline.
struct SimChannel::Direction {
    using Clock = std::chrono::steady_clock;

    struct Pending {
        Clock::time_point due;
        std::uint64_t order; // tie-break so equal due times keep send order
        std::vector<std::uint8_t> bytes;

        bool operator>(const Pending& other) const {
            return std::tie(due, order) > std::tie(other.due, other.order);
        }
    };

    explicit Direction(const SimFaults& faults) : faults_(faults), rng_(faults.seed) {}

    void send(std::span<const std::uint8_t> datagram) {
        std::lock_guard lock(mutex_);
        ++stats_.sent;

        std::vector<std::uint8_t> bytes(datagram.begin(), datagram.end());
        if (tamper_) {
            std::optional<std::vector<std::uint8_t>> kept = tamper_(bytes);
            if (!kept) {
                ++stats_.eaten;
                return;
            }
            bytes = std::move(*kept);
        }

        if (rng_.chance(faults_.drop_rate)) {
            ++stats_.dropped;
            return;
        }
        if (rng_.chance(faults_.corrupt_rate) && !bytes.empty()) {
            std::size_t pos = rng_.next_below(bytes.size());
            bytes[pos] ^= static_cast<std::uint8_t>(1 + rng_.next_below(255));
            ++stats_.corrupted;
        }

        enqueue(bytes);
        ++stats_.delivered;
        if (rng_.chance(faults_.dup_rate)) {
            enqueue(bytes);
            ++stats_.duplicated;
            ++stats_.delivered;
        }
        cv_.notify_all();
    }

    std::optional<std::vector<std::uint8_t>> recv(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex_);
        Clock::time_point deadline = Clock::now() + timeout;
        for (;;) {
            if (!queue_.empty()) {
                Clock::time_point due = queue_.top().due;
                if (due <= Clock::now()) {
                    std::vector<std::uint8_t> bytes = queue_.top().bytes;
                    queue_.pop();
                    return bytes;
                }
                if (due >= deadline) {
                    cv_.wait_until(lock, deadline);
                } else {
                    cv_.wait_until(lock, due);
                }
            } else {
                cv_.wait_until(lock, deadline);
            }
            if (Clock::now() >= deadline && (queue_.empty() || queue_.top().due > Clock::now()))
                return std::nullopt;
        }
    }

    void set_tamper(TamperFn fn) {
        std::lock_guard lock(mutex_);
        tamper_ = std::move(fn);
    }

    Stats stats() const {
        std::lock_guard lock(mutex_);
        return stats_;
    }

private:
    void enqueue(const std::vector<std::uint8_t>& bytes) {
        std::uint32_t lat = faults_.latency_min_ms;
        if (faults_.latency_max_ms > faults_.latency_min_ms)
            lat += static_cast<std::uint32_t>(
                rng_.next_below(faults_.latency_max_ms - faults_.latency_min_ms + 1));
        queue_.push(Pending{Clock::now() + std::chrono::milliseconds(lat), next_order_++, bytes});
    }

    SimFaults faults_;
    Rng rng_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
    std::uint64_t next_order_ = 0;
    TamperFn tamper_;
    Stats stats_;
};

// An endpoint writes into one direction and reads from the other.
class SimChannel::End : public Transport {
public:
    End(Direction& out, Direction& in) : out_(out), in_(in) {}

    void send(std::span<const std::uint8_t> datagram) override { out_.send(datagram); }

    std::optional<std::vector<std::uint8_t>> recv(std::chrono::milliseconds timeout) override {
        return in_.recv(timeout);
    }

private:
    Direction& out_;
    Direction& in_;
};

SimChannel::SimChannel(const SimFaults& a_to_b, const SimFaults& b_to_a)
    : a_to_b_(std::make_unique<Direction>(a_to_b)),
      b_to_a_(std::make_unique<Direction>(b_to_a)),
      end_a_(std::make_unique<End>(*a_to_b_, *b_to_a_)),
      end_b_(std::make_unique<End>(*b_to_a_, *a_to_b_)) {}

SimChannel::~SimChannel() = default;

Transport& SimChannel::end_a() { return *end_a_; }
Transport& SimChannel::end_b() { return *end_b_; }

void SimChannel::set_tamper_a_to_b(TamperFn fn) { a_to_b_->set_tamper(std::move(fn)); }
void SimChannel::set_tamper_b_to_a(TamperFn fn) { b_to_a_->set_tamper(std::move(fn)); }

SimChannel::Stats SimChannel::stats_a_to_b() const { return a_to_b_->stats(); }
SimChannel::Stats SimChannel::stats_b_to_a() const { return b_to_a_->stats(); }

} // namespace cke
