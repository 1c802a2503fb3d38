#pragma once

#include "meld/net/platform.hpp"
#include "meld/sim/simulation.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace meld::sim {

// WAN link model: fixed delay with symmetric jitter, independent loss and
// duplication, optional FIFO enforcement, and a serialization delay of
// size/rate when a bandwidth is set.
struct LinkModel {
    double delay_ms = 0;
    double jitter_ms = 0;
    double loss_rate = 0;
    double duplicate_rate = 0;
    bool reorder = true;
    double bandwidth_mbps = 0; // 0 = unconstrained
};

enum class ByzantineBehavior : std::uint8_t {
    DropProposals,
    DropCommits,
    CorruptEndorsements,
    SuppressGossip,
};

const char* to_string(ByzantineBehavior b);
ByzantineBehavior byzantine_behavior_from_string(std::string_view s);

struct ByzantineWindow {
    std::string org;
    double start = 0;
    double end = 0;
    std::set<ByzantineBehavior> behaviors;
    double activation = 0.5; // per-message strike probability while active
};

class ByzantineSchedule {
public:
    void add(ByzantineWindow window) { windows_.push_back(std::move(window)); }
    bool empty() const { return windows_.empty(); }

    // Window lookup without randomness.
    bool scheduled(const std::string& org, ByzantineBehavior behavior, double now) const;
    // Per-message coin: active window and the activation probability fires.
    bool strikes(const std::string& org, ByzantineBehavior behavior, double now,
                 std::mt19937_64& rng) const;

private:
    std::vector<ByzantineWindow> windows_;
};

// Deterministic in-process transport. Requests route to the receiving
// endpoint's handler after the link treatment; responses travel back through
// the reverse link. Byzantine drop behaviors intercept at delivery.
class SimNetwork final : public net::Platform {
public:
    using Handler =
        std::function<std::optional<proto::Frame>(const std::string& from, const proto::Frame&)>;

    SimNetwork(Simulation& sim, LinkModel default_link = {}, ByzantineSchedule schedule = {});

    void register_endpoint(const std::string& id, Handler handler);
    void set_link(const std::string& from, const std::string& to, LinkModel link);

    // net::Platform
    double now() override { return sim_->now(); }
    void schedule(double delay_s, std::function<void()> fn) override {
        sim_->schedule_in(delay_s, std::move(fn));
    }
    std::mt19937_64& rng() override { return sim_->rng(); }
    void send(const std::string& from, const std::string& to, proto::Frame frame,
              std::function<void(const proto::Frame&)> on_response) override;

    struct Stats {
        std::uint64_t requests_sent = 0;
        std::uint64_t delivered = 0;
        std::uint64_t responses_delivered = 0;
        std::uint64_t lost = 0;
        std::uint64_t duplicated = 0;
        std::uint64_t byzantine_dropped = 0;
    };
    const Stats& stats() const { return stats_; }

    void enable_trace() { tracing_ = true; }
    const std::vector<std::string>& trace() const { return trace_; }

private:
    const LinkModel& link_between(const std::string& from, const std::string& to) const;
    // Applies loss/duplication/delay and schedules one deliver call per copy.
    void transmit(const std::string& from, const std::string& to, const proto::Frame& frame,
                  std::function<void(const proto::Frame&)> deliver);
    double sample_delay(const LinkModel& link, std::size_t size_bytes);
    void note(const std::string& event);

    Simulation* sim_;
    LinkModel default_link_;
    ByzantineSchedule schedule_;
    std::map<std::string, Handler> endpoints_;
    std::map<std::pair<std::string, std::string>, LinkModel> links_;
    std::map<std::pair<std::string, std::string>, double> fifo_clock_;
    Stats stats_;
    bool tracing_ = false;
    std::vector<std::string> trace_;
};

// Flips the first operation's value so honest digest comparison fails
// downstream; an empty write-set gains a bogus operation.
void corrupt_write_set(crdt::WriteSet& ws);

} // namespace meld::sim
