#pragma once

#include "meld/sim/network.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace meld::bench {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Application : std::uint8_t { Synthetic, Voting, Auction };

const char* to_string(Application app);
Application application_from_string(std::string_view s);

struct ByzantineWindowConfig {
    std::string org;
    double start = 0;
    double end = 0;
    std::vector<std::string> behaviors;
    double activation = 0.5;
};

// One experiment: workload, roster, policy, link model, fault schedule, and
// the knobs of the synthetic contract. Desk-scale defaults run the standard
// configuration at one tenth of the reference rates.
struct WorkloadConfig {
    Application application = Application::Synthetic;
    double arrival_rate = 300; // tps
    double duration = 18;      // simulated seconds of load
    int read_pct = 50;
    int modify_pct = 50;

    std::uint32_t num_orgs = 8;
    std::uint32_t policy_q = 4;
    std::uint32_t gossip_ratio = 1;
    double gossip_interval = 1.0;
    std::uint64_t seed = 1;
    std::uint32_t num_clients = 1000;

    bool avoidance = true;
    int max_attempts = 8;
    double endorse_timeout = 5.0;
    double receipt_timeout = 10.0;
    int suspect_threshold = 1;

    sim::LinkModel link{100.0, 4.0, 0.0, 0.0, true, 100.0};
    struct LinkOverride {
        std::string from;
        std::string to;
        sim::LinkModel link;
    };
    std::vector<LinkOverride> link_overrides; // per-pair link matrix entries
    std::vector<ByzantineWindowConfig> byzantine;

    // synthetic knobs
    std::uint64_t obj_count = 1;
    std::uint64_t ops_per_obj = 1;
    std::string crdt_type = "gcounter";
    std::uint64_t synthetic_universe = 1024;

    // voting / auction fixtures
    std::uint32_t num_voters = 1000;
    std::uint32_t num_elections = 8;
    std::uint32_t num_parties = 8;
    std::uint32_t num_bidders = 1000;
    std::uint32_t num_auctions = 8;

    // run shaping
    double settle = 30.0;             // grace after load stops, before gossip drain
    double drain_gossip_rounds = 32;  // quiescent gossip rounds before snapshots
    bool persist_ledgers = false;
    std::size_t cache_capacity = 0;

    void validate() const;
    double horizon() const { return duration + settle + drain_gossip_rounds * gossip_interval; }

    std::vector<std::string> org_ids() const;
    sim::ByzantineSchedule byzantine_schedule() const;

    static WorkloadConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static WorkloadConfig load_file(const std::string& path);
};

} // namespace meld::bench
