#include <doctest.h>

#include "meld/sim/network.hpp"

using namespace meld;
using namespace meld::sim;
using meld::proto::Frame;
using meld::proto::MsgType;

namespace {

Frame ping(const std::string& tag = "ping") { return {MsgType::ProposeRequest, to_bytes(tag)}; }

struct EchoNet {
    Simulation sim{7};
    SimNetwork net;
    std::vector<double> deliveries;

    explicit EchoNet(LinkModel link, ByzantineSchedule schedule = {})
        : net(sim, link, std::move(schedule)) {
        net.register_endpoint("b", [this](const std::string&, const Frame& f) {
            deliveries.push_back(sim.now());
            return std::optional<Frame>{Frame{MsgType::EndorsementResponse, f.payload}};
        });
    }
};

} // namespace

TEST_CASE("event queue is ordered and ties break by scheduling order") {
    Simulation sim(1);
    std::vector<int> order;
    sim.schedule_at(2.0, [&] { order.push_back(3); });
    sim.schedule_at(1.0, [&] { order.push_back(1); });
    sim.schedule_at(1.0, [&] { order.push_back(2); });
    sim.run();
    CHECK(order == std::vector<int>{1, 2, 3});
    CHECK(sim.now() == 2.0);
}

TEST_CASE("run_until leaves later events pending and advances the clock") {
    Simulation sim(1);
    int ran = 0;
    sim.schedule_at(1.0, [&] { ++ran; });
    sim.schedule_at(5.0, [&] { ++ran; });
    CHECK(sim.run_until(2.0) == 1);
    CHECK(ran == 1);
    CHECK(sim.now() == 2.0);
    CHECK(sim.pending() == 1);
}

TEST_CASE("zero-jitter link delivers at exactly the configured delay") {
    EchoNet e({.delay_ms = 100.0, .jitter_ms = 0.0});
    e.net.send("a", "b", ping(), nullptr);
    e.sim.run();
    REQUIRE(e.deliveries.size() == 1);
    CHECK(e.deliveries[0] == doctest::Approx(0.1));
}

TEST_CASE("loss rate one never delivers") {
    EchoNet e({.delay_ms = 10.0, .loss_rate = 1.0});
    for (int i = 0; i < 20; ++i)
        e.net.send("a", "b", ping(), nullptr);
    e.sim.run();
    CHECK(e.deliveries.empty());
    CHECK(e.net.stats().lost == 20);
}

TEST_CASE("duplicate rate one delivers exactly twice") {
    EchoNet e({.delay_ms = 10.0, .duplicate_rate = 1.0});
    e.net.send("a", "b", ping(), nullptr);
    e.sim.run();
    CHECK(e.deliveries.size() == 2);
}

TEST_CASE("all-zero fault rates deliver every message exactly once") {
    EchoNet e({.delay_ms = 5.0, .jitter_ms = 1.0});
    int responses = 0;
    for (int i = 0; i < 50; ++i)
        e.net.send("a", "b", ping(std::to_string(i)), [&](const Frame&) { ++responses; });
    e.sim.run();
    CHECK(e.deliveries.size() == 50);
    CHECK(responses == 50);
    CHECK(e.net.stats().lost == 0);
    CHECK(e.net.stats().duplicated == 0);
}

TEST_CASE("fifo links preserve order when reorder is off") {
    LinkModel link{.delay_ms = 50.0, .jitter_ms = 45.0, .reorder = false};
    Simulation sim(3);
    SimNetwork net(sim, link);
    std::vector<std::string> seen;
    net.register_endpoint("b", [&](const std::string&, const Frame& f) {
        seen.push_back(to_string(f.payload));
        return std::optional<Frame>{};
    });
    for (int i = 0; i < 30; ++i)
        net.send("a", "b", ping(std::to_string(i)), nullptr);
    sim.run();
    REQUIRE(seen.size() == 30);
    for (int i = 0; i < 30; ++i)
        CHECK(seen[static_cast<std::size_t>(i)] == std::to_string(i));
}

TEST_CASE("jittered links can reorder when allowed") {
    LinkModel link{.delay_ms = 50.0, .jitter_ms = 49.0, .reorder = true};
    Simulation sim(3);
    SimNetwork net(sim, link);
    std::vector<std::string> seen;
    net.register_endpoint("b", [&](const std::string&, const Frame& f) {
        seen.push_back(to_string(f.payload));
        return std::optional<Frame>{};
    });
    for (int i = 0; i < 50; ++i)
        net.send("a", "b", ping(std::to_string(i)), nullptr);
    sim.run();
    REQUIRE(seen.size() == 50);
    bool reordered = false;
    for (std::size_t i = 1; i < seen.size(); ++i)
        if (std::stoi(seen[i]) < std::stoi(seen[i - 1]))
            reordered = true;
    CHECK(reordered);
}

TEST_CASE("bandwidth adds a size-proportional serialization delay") {
    LinkModel link{.delay_ms = 0.0, .bandwidth_mbps = 1.0}; // 1 Mbit/s
    EchoNet e(link);
    Frame big{MsgType::ProposeRequest, Bytes(125000, 0)}; // one second at 1 Mbit
    e.net.send("a", "b", big, nullptr);
    e.sim.run();
    REQUIRE(e.deliveries.size() == 1);
    CHECK(e.deliveries[0] == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("byzantine windows drop matching traffic only while active") {
    ByzantineSchedule schedule;
    schedule.add({"b", 10.0, 20.0, {ByzantineBehavior::DropProposals}, 1.0});

    Simulation sim(5);
    SimNetwork net(sim, {.delay_ms = 1.0}, schedule);
    int delivered = 0;
    net.register_endpoint("b", [&](const std::string&, const Frame&) {
        ++delivered;
        return std::optional<Frame>{};
    });

    sim.schedule_at(5.0, [&] { net.send("a", "b", ping(), nullptr); });   // before window
    sim.schedule_at(15.0, [&] { net.send("a", "b", ping(), nullptr); });  // inside window
    sim.schedule_at(15.0, [&] {
        net.send("a", "b", Frame{MsgType::CommitRequest, {}}, nullptr);   // other type passes
    });
    sim.schedule_at(25.0, [&] { net.send("a", "b", ping(), nullptr); });  // after window
    sim.run();

    CHECK(delivered == 3);
    CHECK(net.stats().byzantine_dropped == 1);
}

TEST_CASE("suppress-gossip swallows pushes from the faulty sender") {
    ByzantineSchedule schedule;
    schedule.add({"a", 0.0, 100.0, {ByzantineBehavior::SuppressGossip}, 1.0});
    Simulation sim(5);
    SimNetwork net(sim, {}, schedule);
    int delivered = 0;
    net.register_endpoint("b", [&](const std::string&, const Frame&) {
        ++delivered;
        return std::optional<Frame>{};
    });
    net.send("a", "b", Frame{MsgType::GossipPush, {}}, nullptr);
    net.send("b", "a", Frame{MsgType::GossipPush, {}}, nullptr); // b is honest
    net.register_endpoint("a", [&](const std::string&, const Frame&) {
        ++delivered;
        return std::optional<Frame>{};
    });
    sim.run();
    CHECK(delivered == 1);
}

TEST_CASE("identical seeds yield identical traces") {
    auto run_once = [](std::uint64_t seed) {
        Simulation sim(seed);
        SimNetwork net(sim, {.delay_ms = 20.0, .jitter_ms = 10.0, .loss_rate = 0.2,
                             .duplicate_rate = 0.2});
        net.enable_trace();
        net.register_endpoint("b", [&](const std::string&, const Frame& f) {
            return std::optional<Frame>{Frame{MsgType::EndorsementResponse, f.payload}};
        });
        for (int i = 0; i < 100; ++i)
            net.send("a", "b", ping(std::to_string(i)), [](const Frame&) {});
        sim.run();
        return net.trace();
    };
    auto t1 = run_once(42);
    auto t2 = run_once(42);
    auto t3 = run_once(43);
    CHECK(t1 == t2);
    CHECK(t1 != t3);
}

TEST_CASE("corrupt_write_set changes the canonical bytes") {
    crdt::WriteSet ws;
    ws.push_back(crdt::add_value("o", {"c", 1}, {}, 5));
    auto before = crdt::encode_write_set(ws);
    corrupt_write_set(ws);
    CHECK(crdt::encode_write_set(ws) != before);

    crdt::WriteSet empty;
    corrupt_write_set(empty);
    CHECK_FALSE(empty.empty());
}
