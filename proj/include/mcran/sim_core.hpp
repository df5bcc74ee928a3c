#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mcran/rng.hpp"

namespace mcran {

// Simulated time in integer microseconds.
using MicroSec = std::int64_t;

inline constexpr MicroSec us_from_ms(std::int64_t ms) { return ms * 1000; }

using EventAction = std::function<void()>;

struct EventHandle {
    std::uint64_t id = 0;
};

// Deterministic single-threaded discrete-event engine. Events with equal
// fire time execute in insertion order. One engine instance per scenario
// replica; never shared across threads.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : seed_(seed) {}

    MicroSec now() const { return clock_; }
    std::uint64_t seed() const { return seed_; }

    // Throws ClockViolation if fire_time < now().
    EventHandle schedule(MicroSec fire_time, EventAction action);
    EventHandle schedule_in(MicroSec delay, EventAction action) {
        return schedule(clock_ + delay, std::move(action));
    }

    // Cancelling an unknown or already-fired handle is a no-op.
    void cancel(EventHandle handle);

    // Executes every event with fire_time <= t_end (including events
    // scheduled while running); leaves the clock at t_end. Returns the
    // number of events executed.
    std::uint64_t run_until(MicroSec t_end);

    // Named per-module stream, created lazily from (seed, name). Streams
    // are independent: adding a user of one stream never perturbs another.
    RngStream& rng(std::string_view name);

    std::size_t pending_events() const { return heap_.size() - cancelled_.size(); }

private:
    struct Item {
        MicroSec t;
        std::uint64_t seq;
        std::uint64_t id;
        EventAction fn;
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };

    std::uint64_t seed_;
    MicroSec clock_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_id_ = 1;
    std::vector<Item> heap_; // min-heap via Later
    std::unordered_set<std::uint64_t> cancelled_;
    std::map<std::string, RngStream, std::less<>> streams_;
};

} // namespace mcran
