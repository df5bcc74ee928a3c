#include "mcran/sim_core.hpp"

#include <algorithm>

#include "mcran/errors.hpp"

namespace mcran {

EventHandle Engine::schedule(MicroSec fire_time, EventAction action) {
    if (fire_time < clock_) {
        throw ClockViolation("schedule at t=" + std::to_string(fire_time) +
                             "us before clock t=" + std::to_string(clock_) +
                             "us");
    }
    Item item{fire_time, next_seq_++, next_id_++, std::move(action)};
    EventHandle handle{item.id};
    heap_.push_back(std::move(item));
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    return handle;
}

void Engine::cancel(EventHandle handle) {
    if (handle.id != 0) {
        cancelled_.insert(handle.id);
    }
}

std::uint64_t Engine::run_until(MicroSec t_end) {
    std::uint64_t executed = 0;
    while (!heap_.empty() && heap_.front().t <= t_end) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Item item = std::move(heap_.back());
        heap_.pop_back();
        if (cancelled_.erase(item.id) > 0) {
            continue;
        }
        if (item.t < clock_) {
            throw ContractViolation("event queue clock regression", item.t);
        }
        clock_ = item.t;
        item.fn();
        ++executed;
    }
    if (t_end > clock_) {
        clock_ = t_end;
    }
    return executed;
}

RngStream& Engine::rng(std::string_view name) {
    auto it = streams_.find(name);
    if (it == streams_.end()) {
        it = streams_.emplace(std::string(name), RngStream(seed_, name)).first;
    }
    return it->second;
}

} // namespace mcran
