#include "meld/bench/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace meld::bench {

using nlohmann::json;

const char* to_string(Application app) {
    switch (app) {
    case Application::Synthetic: return "synthetic";
    case Application::Voting: return "voting";
    case Application::Auction: return "auction";
    }
    return "?";
}

Application application_from_string(std::string_view s) {
    if (s == "synthetic") return Application::Synthetic;
    if (s == "voting") return Application::Voting;
    if (s == "auction") return Application::Auction;
    throw ConfigError("unknown application: " + std::string(s));
}

void WorkloadConfig::validate() const {
    if (read_pct + modify_pct != 100)
        throw ConfigError("read/modify mix must sum to 100");
    if (read_pct < 0 || modify_pct < 0)
        throw ConfigError("mix percentages must be non-negative");
    if (arrival_rate <= 0)
        throw ConfigError("arrival rate must be positive");
    if (duration < 0)
        throw ConfigError("duration must be non-negative");
    if (num_orgs == 0)
        throw ConfigError("need at least one organization");
    if (policy_q == 0 || policy_q > num_orgs)
        throw ConfigError("endorsement policy must satisfy 0 < q <= n");
    if (gossip_ratio + 1 > num_orgs)
        throw ConfigError("gossip ratio must not exceed the peer count");
    if (num_clients == 0)
        throw ConfigError("need at least one client");
    if (gossip_interval <= 0)
        throw ConfigError("gossip interval must be positive");
    if (crdt_type != "gcounter" && crdt_type != "map" && crdt_type != "mvregister")
        throw ConfigError("crdt_type must be gcounter, map, or mvregister");
    if (obj_count == 0 || ops_per_obj == 0)
        throw ConfigError("obj_count and ops_per_obj must be >= 1");
    for (const auto& w : byzantine) {
        if (w.end < w.start)
            throw ConfigError("byzantine window ends before it starts");
        if (w.activation < 0 || w.activation > 1)
            throw ConfigError("byzantine activation must be a probability");
    }
}

std::vector<std::string> WorkloadConfig::org_ids() const {
    std::vector<std::string> out;
    out.reserve(num_orgs);
    for (std::uint32_t i = 0; i < num_orgs; ++i)
        out.push_back("org-" + std::to_string(i));
    return out;
}

sim::ByzantineSchedule WorkloadConfig::byzantine_schedule() const {
    sim::ByzantineSchedule schedule;
    for (const auto& w : byzantine) {
        sim::ByzantineWindow window;
        window.org = w.org;
        window.start = w.start;
        window.end = w.end;
        window.activation = w.activation;
        for (const auto& b : w.behaviors)
            window.behaviors.insert(sim::byzantine_behavior_from_string(b));
        schedule.add(std::move(window));
    }
    return schedule;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

} // namespace

WorkloadConfig WorkloadConfig::from_json(const json& j) {
    WorkloadConfig cfg;
    if (j.contains("application"))
        cfg.application = application_from_string(j.at("application").get<std::string>());
    maybe(j, "arrival_rate", cfg.arrival_rate);
    maybe(j, "duration", cfg.duration);
    maybe(j, "read_pct", cfg.read_pct);
    maybe(j, "modify_pct", cfg.modify_pct);
    maybe(j, "num_orgs", cfg.num_orgs);
    maybe(j, "policy_q", cfg.policy_q);
    maybe(j, "gossip_ratio", cfg.gossip_ratio);
    maybe(j, "gossip_interval", cfg.gossip_interval);
    maybe(j, "seed", cfg.seed);
    maybe(j, "num_clients", cfg.num_clients);
    maybe(j, "avoidance", cfg.avoidance);
    maybe(j, "max_attempts", cfg.max_attempts);
    maybe(j, "endorse_timeout", cfg.endorse_timeout);
    maybe(j, "receipt_timeout", cfg.receipt_timeout);
    maybe(j, "suspect_threshold", cfg.suspect_threshold);
    maybe(j, "obj_count", cfg.obj_count);
    maybe(j, "ops_per_obj", cfg.ops_per_obj);
    maybe(j, "crdt_type", cfg.crdt_type);
    maybe(j, "synthetic_universe", cfg.synthetic_universe);
    maybe(j, "num_voters", cfg.num_voters);
    maybe(j, "num_elections", cfg.num_elections);
    maybe(j, "num_parties", cfg.num_parties);
    maybe(j, "num_bidders", cfg.num_bidders);
    maybe(j, "num_auctions", cfg.num_auctions);
    maybe(j, "settle", cfg.settle);
    maybe(j, "drain_gossip_rounds", cfg.drain_gossip_rounds);
    maybe(j, "persist_ledgers", cfg.persist_ledgers);
    maybe(j, "cache_capacity", cfg.cache_capacity);

    if (j.contains("link")) {
        const auto& l = j.at("link");
        maybe(l, "delay_ms", cfg.link.delay_ms);
        maybe(l, "jitter_ms", cfg.link.jitter_ms);
        maybe(l, "loss_rate", cfg.link.loss_rate);
        maybe(l, "duplicate_rate", cfg.link.duplicate_rate);
        maybe(l, "reorder", cfg.link.reorder);
        maybe(l, "bandwidth_mbps", cfg.link.bandwidth_mbps);
    }
    if (j.contains("link_overrides")) {
        for (const auto& o : j.at("link_overrides")) {
            WorkloadConfig::LinkOverride ov;
            ov.from = o.at("from").get<std::string>();
            ov.to = o.at("to").get<std::string>();
            ov.link = cfg.link;
            maybe(o, "delay_ms", ov.link.delay_ms);
            maybe(o, "jitter_ms", ov.link.jitter_ms);
            maybe(o, "loss_rate", ov.link.loss_rate);
            maybe(o, "duplicate_rate", ov.link.duplicate_rate);
            maybe(o, "reorder", ov.link.reorder);
            maybe(o, "bandwidth_mbps", ov.link.bandwidth_mbps);
            cfg.link_overrides.push_back(std::move(ov));
        }
    }
    if (j.contains("byzantine")) {
        for (const auto& w : j.at("byzantine")) {
            ByzantineWindowConfig window;
            window.org = w.at("org").get<std::string>();
            window.start = w.at("start").get<double>();
            window.end = w.at("end").get<double>();
            window.behaviors = w.at("behaviors").get<std::vector<std::string>>();
            maybe(w, "activation", window.activation);
            cfg.byzantine.push_back(std::move(window));
        }
    }
    cfg.validate();
    return cfg;
}

json WorkloadConfig::to_json() const {
    json j{{"application", to_string(application)},
           {"arrival_rate", arrival_rate},
           {"duration", duration},
           {"read_pct", read_pct},
           {"modify_pct", modify_pct},
           {"num_orgs", num_orgs},
           {"policy_q", policy_q},
           {"gossip_ratio", gossip_ratio},
           {"gossip_interval", gossip_interval},
           {"seed", seed},
           {"num_clients", num_clients},
           {"avoidance", avoidance},
           {"max_attempts", max_attempts},
           {"endorse_timeout", endorse_timeout},
           {"receipt_timeout", receipt_timeout},
           {"suspect_threshold", suspect_threshold},
           {"obj_count", obj_count},
           {"ops_per_obj", ops_per_obj},
           {"crdt_type", crdt_type},
           {"synthetic_universe", synthetic_universe},
           {"num_voters", num_voters},
           {"num_elections", num_elections},
           {"num_parties", num_parties},
           {"num_bidders", num_bidders},
           {"num_auctions", num_auctions},
           {"settle", settle},
           {"drain_gossip_rounds", drain_gossip_rounds},
           {"persist_ledgers", persist_ledgers},
           {"cache_capacity", cache_capacity},
           {"link",
            {{"delay_ms", link.delay_ms},
             {"jitter_ms", link.jitter_ms},
             {"loss_rate", link.loss_rate},
             {"duplicate_rate", link.duplicate_rate},
             {"reorder", link.reorder},
             {"bandwidth_mbps", link.bandwidth_mbps}}}};
    json overrides = json::array();
    for (const auto& o : link_overrides) {
        overrides.push_back({{"from", o.from},
                             {"to", o.to},
                             {"delay_ms", o.link.delay_ms},
                             {"jitter_ms", o.link.jitter_ms},
                             {"loss_rate", o.link.loss_rate},
                             {"duplicate_rate", o.link.duplicate_rate},
                             {"reorder", o.link.reorder},
                             {"bandwidth_mbps", o.link.bandwidth_mbps}});
    }
    j["link_overrides"] = overrides;
    json windows = json::array();
    for (const auto& w : byzantine) {
        windows.push_back({{"org", w.org},
                           {"start", w.start},
                           {"end", w.end},
                           {"behaviors", w.behaviors},
                           {"activation", w.activation}});
    }
    j["byzantine"] = windows;
    return j;
}

WorkloadConfig WorkloadConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    json j;
    in >> j;
    return from_json(j);
}

} // namespace meld::bench
