#include "meld/sim/network.hpp"

#include <sstream>

namespace meld::sim {

const char* to_string(ByzantineBehavior b) {
    switch (b) {
    case ByzantineBehavior::DropProposals: return "drop_proposals";
    case ByzantineBehavior::DropCommits: return "drop_commits";
    case ByzantineBehavior::CorruptEndorsements: return "corrupt_endorsements";
    case ByzantineBehavior::SuppressGossip: return "suppress_gossip";
    }
    return "?";
}

ByzantineBehavior byzantine_behavior_from_string(std::string_view s) {
    if (s == "drop_proposals") return ByzantineBehavior::DropProposals;
    if (s == "drop_commits") return ByzantineBehavior::DropCommits;
    if (s == "corrupt_endorsements") return ByzantineBehavior::CorruptEndorsements;
    if (s == "suppress_gossip") return ByzantineBehavior::SuppressGossip;
    throw std::invalid_argument("unknown byzantine behavior: " + std::string(s));
}

bool ByzantineSchedule::scheduled(const std::string& org, ByzantineBehavior behavior,
                                  double now) const {
    for (const auto& w : windows_) {
        if (w.org == org && now >= w.start && now < w.end && w.behaviors.contains(behavior))
            return true;
    }
    return false;
}

bool ByzantineSchedule::strikes(const std::string& org, ByzantineBehavior behavior, double now,
                                std::mt19937_64& rng) const {
    for (const auto& w : windows_) {
        if (w.org == org && now >= w.start && now < w.end && w.behaviors.contains(behavior)) {
            return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < w.activation;
        }
    }
    return false;
}

SimNetwork::SimNetwork(Simulation& sim, LinkModel default_link, ByzantineSchedule schedule)
    : sim_(&sim), default_link_(default_link), schedule_(std::move(schedule)) {}

void SimNetwork::register_endpoint(const std::string& id, Handler handler) {
    endpoints_[id] = std::move(handler);
}

void SimNetwork::set_link(const std::string& from, const std::string& to, LinkModel link) {
    links_[{from, to}] = link;
}

const LinkModel& SimNetwork::link_between(const std::string& from, const std::string& to) const {
    auto it = links_.find({from, to});
    return it == links_.end() ? default_link_ : it->second;
}

double SimNetwork::sample_delay(const LinkModel& link, std::size_t size_bytes) {
    double delay = link.delay_ms / 1000.0;
    if (link.jitter_ms > 0) {
        std::uniform_real_distribution<double> jitter(-link.jitter_ms, link.jitter_ms);
        delay += jitter(sim_->rng()) / 1000.0;
    }
    if (link.bandwidth_mbps > 0)
        delay += static_cast<double>(size_bytes) * 8.0 / (link.bandwidth_mbps * 1e6);
    return delay < 0 ? 0 : delay;
}

void SimNetwork::note(const std::string& event) {
    if (tracing_)
        trace_.push_back(event);
}

void SimNetwork::transmit(const std::string& from, const std::string& to,
                          const proto::Frame& frame,
                          std::function<void(const proto::Frame&)> deliver) {
    const LinkModel& link = link_between(from, to);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    if (link.loss_rate > 0 && coin(sim_->rng()) < link.loss_rate) {
        ++stats_.lost;
        note("lost type=" + std::to_string(int(frame.type)) + " " + from + ">" + to);
        return;
    }
    int copies = 1;
    if (link.duplicate_rate > 0 && coin(sim_->rng()) < link.duplicate_rate) {
        ++copies;
        ++stats_.duplicated;
    }
    for (int i = 0; i < copies; ++i) {
        double delay = sample_delay(link, frame.wire_size());
        double at = sim_->now() + delay;
        if (!link.reorder) {
            auto& fifo = fifo_clock_[{from, to}];
            if (at < fifo)
                at = fifo;
            fifo = at;
        }
        sim_->schedule_at(at, [frame, deliver] { deliver(frame); });
    }
}

void SimNetwork::send(const std::string& from, const std::string& to, proto::Frame frame,
                      std::function<void(const proto::Frame&)> on_response) {
    ++stats_.requests_sent;

    // A gossiping organization under SuppressGossip swallows its own pushes.
    if (frame.type == proto::MsgType::GossipPush &&
        schedule_.strikes(from, ByzantineBehavior::SuppressGossip, sim_->now(), sim_->rng())) {
        ++stats_.byzantine_dropped;
        note("suppressed gossip " + from + ">" + to);
        return;
    }

    transmit(from, to, frame,
             [this, from, to, on_response = std::move(on_response)](const proto::Frame& f) {
                 // Receiver-side Byzantine omission at delivery time.
                 if (f.type == proto::MsgType::ProposeRequest &&
                     schedule_.strikes(to, ByzantineBehavior::DropProposals, sim_->now(),
                                       sim_->rng())) {
                     ++stats_.byzantine_dropped;
                     note("dropped proposal " + from + ">" + to);
                     return;
                 }
                 if (f.type == proto::MsgType::CommitRequest &&
                     schedule_.strikes(to, ByzantineBehavior::DropCommits, sim_->now(),
                                       sim_->rng())) {
                     ++stats_.byzantine_dropped;
                     note("dropped commit " + from + ">" + to);
                     return;
                 }
                 auto endpoint = endpoints_.find(to);
                 if (endpoint == endpoints_.end())
                     return;
                 ++stats_.delivered;
                 note("deliver type=" + std::to_string(int(f.type)) + " " + from + ">" + to +
                      " t=" + std::to_string(sim_->now()));
                 auto response = endpoint->second(from, f);
                 if (response && on_response) {
                     transmit(to, from, *response,
                              [this, on_response](const proto::Frame& resp) {
                                  ++stats_.responses_delivered;
                                  on_response(resp);
                              });
                 }
             });
}

void corrupt_write_set(crdt::WriteSet& ws) {
    if (ws.empty()) {
        ws.push_back(crdt::assign_value("bogus", {"byzantine", 1}, {}, to_bytes("junk")));
        return;
    }
    crdt::Operation& op = ws.front();
    if (!op.value) {
        op.value = crdt::Scalar{to_bytes("junk")};
    } else if (std::holds_alternative<std::int64_t>(*op.value)) {
        op.value = crdt::Scalar{std::get<std::int64_t>(*op.value) + 1};
    } else {
        Bytes b = std::get<Bytes>(*op.value);
        if (b.empty())
            b.push_back(0xff);
        else
            b[0] ^= 0xff;
        op.value = crdt::Scalar{std::move(b)};
    }
}

} // namespace meld::sim
