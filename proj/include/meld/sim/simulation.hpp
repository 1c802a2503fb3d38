#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <vector>

namespace meld::sim {

// Single-threaded discrete-event loop over virtual time. Equal-time events
// run in scheduling order, so a fixed seed replays an identical trace.
class Simulation {
public:
    explicit Simulation(std::uint64_t seed) : rng_(seed) {}

    double now() const { return now_; }
    std::mt19937_64& rng() { return rng_; }

    void schedule_at(double t, std::function<void()> fn) {
        if (t < now_)
            t = now_;
        queue_.push(Event{t, next_seq_++, std::move(fn)});
    }

    void schedule_in(double delay, std::function<void()> fn) {
        schedule_at(now_ + delay, std::move(fn));
    }

    bool step() {
        if (queue_.empty())
            return false;
        Event ev = std::move(const_cast<Event&>(queue_.top()));
        queue_.pop();
        now_ = ev.t;
        ++executed_;
        ev.fn();
        return true;
    }

    void run() {
        while (step()) {
        }
    }

    // Processes every event with time <= horizon, then advances the clock to
    // the horizon. Later events stay queued and unprocessed.
    std::uint64_t run_until(double horizon) {
        std::uint64_t n = 0;
        while (!queue_.empty() && queue_.top().t <= horizon) {
            step();
            ++n;
        }
        if (now_ < horizon)
            now_ = horizon;
        return n;
    }

    std::uint64_t executed() const { return executed_; }
    std::size_t pending() const { return queue_.size(); }

private:
    struct Event {
        double t;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.t > b.t || (a.t == b.t && a.seq > b.seq);
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    double now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t executed_ = 0;
    std::mt19937_64 rng_;
};

} // namespace meld::sim
