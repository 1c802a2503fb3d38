#include "meld/bench/experiment.hpp"

#include "meld/client/session.hpp"
#include "meld/contracts/contracts.hpp"
#include "meld/node/org_node.hpp"
#include "meld/sim/simulation.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <deque>
#include <fstream>

namespace meld::bench {

using nlohmann::json;

namespace {

crypto::Digest key_seed(std::uint64_t run_seed, const std::string& id) {
    Writer w;
    w.str("key");
    w.u64(run_seed);
    w.str(id);
    return crypto::sha256(w.data());
}

std::vector<std::string> numbered(const char* prefix, std::uint32_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        out.push_back(prefix + std::to_string(i));
    return out;
}

struct Submission {
    double at = 0;
    std::uint32_t session = 0;
    bool is_modify = true;
    std::string function_name;
    std::vector<Bytes> args;
};

struct RunState {
    MetricsReport report;
    std::vector<double> lat_all, lat_mod, lat_read;
    std::uint64_t completed = 0;

    void bucket(double finished) {
        auto idx = static_cast<std::size_t>(finished);
        if (idx < report.per_second_committed.size())
            ++report.per_second_committed[idx];
    }
};

void write_artifacts(const std::filesystem::path& dir, const WorkloadConfig& cfg,
                     const crypto::IdentityRegistry& registry, const RunResult& result) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json");
        json j = result.report.to_json();
        j["config"] = cfg.to_json();
        j["converged"] = result.converged;
        j["events_executed"] = result.events_executed;
        out << j.dump(2) << "\n";
    }
    write_series_csv(dir / "series.csv", result.report);
    {
        std::ofstream out(dir / "genesis.json");
        out << registry.to_genesis().dump(2) << "\n";
    }
    {
        json orgs = json::array();
        for (const auto& snap : result.orgs) {
            json valid = json::array();
            for (const auto& id : snap.committed_valid)
                valid.push_back(crypto::to_hex(id));
            orgs.push_back({{"org", snap.org_id},
                            {"state_digest", crypto::to_hex(snap.state_digest)},
                            {"chain_ok", snap.chain_ok},
                            {"height", snap.height},
                            {"committed_valid", valid}});
        }
        std::ofstream out(dir / "digests.json");
        out << json{{"orgs", orgs}}.dump(2) << "\n";
    }
}

} // namespace

bool snapshots_converged(const std::vector<OrgSnapshot>& orgs) {
    if (orgs.empty())
        return true;
    for (const auto& snap : orgs) {
        if (snap.state_digest != orgs.front().state_digest)
            return false;
        // Equal transaction sets regardless of local commit order.
        auto lhs = snap.committed_valid;
        auto rhs = orgs.front().committed_valid;
        std::sort(lhs.begin(), lhs.end());
        std::sort(rhs.begin(), rhs.end());
        if (lhs != rhs)
            return false;
    }
    return true;
}

RunResult run_experiment(const WorkloadConfig& cfg, const RunOptions& opts) {
    cfg.validate();

    sim::Simulation simu(cfg.seed);
    auto org_ids = cfg.org_ids();
    auto client_ids = numbered("client-", cfg.num_clients);

    // Roster and keys, reproducible from the run seed.
    crypto::IdentityRegistry registry;
    std::vector<crypto::KeyPair> org_keys, client_keys;
    org_keys.reserve(org_ids.size());
    client_keys.reserve(client_ids.size());
    for (const auto& id : org_ids) {
        org_keys.push_back(crypto::KeyPair::from_seed(key_seed(cfg.seed, id)));
        registry.add({id, org_keys.back().public_key(), crypto::Role::Organization});
    }
    for (const auto& id : client_ids) {
        client_keys.push_back(crypto::KeyPair::from_seed(key_seed(cfg.seed, id)));
        registry.add({id, client_keys.back().public_key(), crypto::Role::Client});
    }

    // Contracts.
    contracts::ContractRegistry contract_registry;
    contract_registry.add(contracts::make_voting_contract(
        {numbered("E", cfg.num_elections), numbered("P", cfg.num_parties)}));
    contract_registry.add(contracts::make_auction_contract({numbered("A", cfg.num_auctions)}));
    contract_registry.add(contracts::make_synthetic_contract({cfg.synthetic_universe}));

    // Network with the Byzantine schedule.
    sim::ByzantineSchedule schedule = cfg.byzantine_schedule();
    sim::SimNetwork net(simu, cfg.link, schedule);
    for (const auto& ov : cfg.link_overrides)
        net.set_link(ov.from, ov.to, ov.link);
    if (opts.trace)
        net.enable_trace();

    // Ledgers and nodes.
    std::deque<ledger::Ledger> ledgers;
    std::deque<node::OrgNode> nodes;
    for (std::size_t i = 0; i < org_ids.size(); ++i) {
        ledger::LedgerConfig lcfg;
        lcfg.cache_capacity = cfg.cache_capacity;
        if (cfg.persist_ledgers && opts.out_dir)
            lcfg.dir = *opts.out_dir / "ledgers" / org_ids[i];
        ledgers.emplace_back(lcfg);

        node::NodeConfig ncfg;
        ncfg.org_id = org_ids[i];
        ncfg.policy = {cfg.policy_q, cfg.num_orgs};
        for (const auto& peer : org_ids)
            if (peer != org_ids[i])
                ncfg.peers.push_back(peer);
        ncfg.gossip_ratio = cfg.gossip_ratio;
        ncfg.gossip_interval = cfg.gossip_interval;
        nodes.emplace_back(std::move(ncfg), registry,
                           crypto::Signer(registry, org_ids[i], org_keys[i]),
                           contract_registry, ledgers.back());

        node::OrgNode* node = &nodes.back();
        std::string org = org_ids[i];
        node->endorsement_tamper = [&simu, &schedule, org](crdt::WriteSet& ws) {
            if (schedule.strikes(org, sim::ByzantineBehavior::CorruptEndorsements, simu.now(),
                                 simu.rng()))
                sim::corrupt_write_set(ws);
        };
        net.register_endpoint(org, [node](const std::string&, const proto::Frame& frame) {
            return node->handle_frame(frame);
        });
    }

    const double horizon = cfg.horizon();

    // Gossip loops, one periodic task per organization.
    std::vector<std::function<void()>> gossip_ticks(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        gossip_ticks[i] = [&, i] {
            if (simu.now() >= horizon)
                return;
            auto batches = nodes[i].gossip_round(simu.rng());
            for (auto& batch : batches) {
                proto::Frame frame{proto::MsgType::GossipPush, batch.body.encoded()};
                node::OrgNode* sender = &nodes[i];
                net.send(org_ids[i], batch.peer, frame, [sender](const proto::Frame& resp) {
                    if (resp.type == proto::MsgType::GossipAck) {
                        auto ack = proto::GossipAckBody::decode_bytes(resp.payload);
                        sender->gossip_acked(ack.from_org, ack.acked_seq);
                    }
                });
            }
            simu.schedule_in(cfg.gossip_interval, gossip_ticks[i]);
        };
        simu.schedule_in(cfg.gossip_interval, gossip_ticks[i]);
    }

    // Client sessions.
    std::deque<client::ClientSession> sessions;
    for (std::size_t i = 0; i < client_ids.size(); ++i) {
        client::SessionConfig scfg;
        scfg.client_id = client_ids[i];
        scfg.policy = {cfg.policy_q, cfg.num_orgs};
        scfg.orgs = org_ids;
        scfg.endorse_timeout = cfg.endorse_timeout;
        scfg.receipt_timeout = cfg.receipt_timeout;
        scfg.max_attempts = cfg.max_attempts;
        scfg.suspect_threshold = cfg.suspect_threshold;
        sessions.emplace_back(std::move(scfg),
                              crypto::Signer(registry, client_ids[i], client_keys[i]), registry,
                              net);
    }

    // Deterministic workload plan, drawn before any event runs.
    auto& rng = simu.rng();
    std::uint64_t total = static_cast<std::uint64_t>(std::llround(cfg.arrival_rate * cfg.duration));
    std::vector<Submission> plan;
    plan.reserve(total);
    for (std::uint64_t k = 0; k < total; ++k) {
        Submission s;
        s.at = (static_cast<double>(k) + 0.5) / cfg.arrival_rate;
        s.session = static_cast<std::uint32_t>(k % cfg.num_clients);
        s.is_modify = static_cast<int>(rng() % 100) < cfg.modify_pct;
        switch (cfg.application) {
        case Application::Voting: {
            std::string party = "P" + std::to_string(rng() % cfg.num_parties);
            std::string election = "E" + std::to_string(rng() % cfg.num_elections);
            if (s.is_modify) {
                std::string voter = "voter-" + std::to_string(s.session % cfg.num_voters);
                s.function_name = "vote";
                s.args = {contracts::arg(voter), contracts::arg(party),
                          contracts::arg(election)};
            } else {
                s.function_name = "read_vote_count";
                s.args = {contracts::arg(party), contracts::arg(election)};
            }
            break;
        }
        case Application::Auction: {
            std::string auction = "A" + std::to_string(rng() % cfg.num_auctions);
            if (s.is_modify) {
                std::string bidder = "bidder-" + std::to_string(s.session % cfg.num_bidders);
                s.function_name = "bid";
                s.args = {contracts::arg(bidder),
                          contracts::arg_i64(1 + static_cast<std::int64_t>(rng() % 100)),
                          contracts::arg(auction)};
            } else {
                s.function_name = "get_highest_bid";
                s.args = {contracts::arg(auction)};
            }
            break;
        }
        case Application::Synthetic:
            if (s.is_modify) {
                s.function_name = "modify";
                s.args = {contracts::arg_u64(cfg.obj_count), contracts::arg_u64(cfg.ops_per_obj),
                          contracts::arg(cfg.crdt_type)};
            } else {
                s.function_name = "read";
                s.args = {contracts::arg_u64(cfg.obj_count), contracts::arg(cfg.crdt_type)};
            }
            break;
        }
        plan.push_back(std::move(s));
    }

    RunState state;
    state.report.application = to_string(cfg.application);
    state.report.duration = cfg.duration;
    state.report.submitted = total;
    state.report.per_second_committed.assign(
        static_cast<std::size_t>(std::ceil(cfg.duration)) + 1, 0);

    const std::string contract_id =
        cfg.application == Application::Voting    ? contracts::kVotingContract
        : cfg.application == Application::Auction ? contracts::kAuctionContract
                                                  : contracts::kSyntheticContract;

    for (auto& s : plan) {
        simu.schedule_at(s.at, [&, sub = &s] {
            client::ClientSession& session = sessions[sub->session];
            if (sub->is_modify) {
                auto record = [&state](const client::Outcome& out) {
                    ++state.completed;
                    if (out.committed) {
                        ++state.report.committed;
                        double ms = (out.finished - out.first_sent) * 1000.0;
                        state.lat_all.push_back(ms);
                        state.lat_mod.push_back(ms);
                        state.bucket(out.finished);
                    } else {
                        ++state.report.failed;
                        std::string reason = client::to_string(out.failure);
                        if (!out.detail.empty() && (out.failure == client::FailureKind::Rejected ||
                                                    out.failure == client::FailureKind::ContractError))
                            reason += ":" + out.detail;
                        ++state.report.failures_by_reason[reason];
                    }
                };
                if (cfg.avoidance)
                    session.submit_with_avoidance(contract_id, sub->function_name, sub->args,
                                                  record);
                else
                    session.submit(contract_id, sub->function_name, sub->args, record);
            } else {
                auto record = [&state](const client::ReadOutcome& out) {
                    ++state.completed;
                    if (out.ok) {
                        ++state.report.committed;
                        double ms = (out.finished - out.first_sent) * 1000.0;
                        state.lat_all.push_back(ms);
                        state.lat_read.push_back(ms);
                        state.bucket(out.finished);
                    } else {
                        ++state.report.failed;
                        ++state.report.failures_by_reason["read_" + out.error];
                    }
                };
                if (cfg.avoidance)
                    session.read_with_avoidance(contract_id, sub->function_name, sub->args,
                                                record);
                else
                    session.read(contract_id, sub->function_name, sub->args, record);
            }
        });
    }

    simu.run_until(horizon);

    RunResult result;
    state.report.in_flight = state.report.submitted - state.completed;
    finalize_metrics(state.report, std::move(state.lat_all), std::move(state.lat_mod),
                     std::move(state.lat_read));
    result.report = std::move(state.report);
    result.events_executed = simu.executed();

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        OrgSnapshot snap;
        snap.org_id = org_ids[i];
        snap.state_digest = ledgers[i].state_digest();
        snap.committed_valid = ledgers[i].committed_valid_ids();
        snap.chain_ok = ledgers[i].verify_chain();
        snap.height = ledgers[i].height();
        result.orgs.push_back(std::move(snap));
    }
    result.converged = snapshots_converged(result.orgs);
    if (opts.trace)
        result.net_trace = net.trace();

    if (opts.out_dir)
        write_artifacts(*opts.out_dir, cfg, registry, result);
    return result;
}

SuiteResult run_suite(const WorkloadConfig& cfg, int repetitions, bool vary_seeds,
                      const RunOptions& opts) {
    if (repetitions < 1)
        throw ConfigError("repetitions must be >= 1");
    SuiteResult suite;
    std::vector<MetricsReport> reports;
    for (int rep = 0; rep < repetitions; ++rep) {
        WorkloadConfig run_cfg = cfg;
        if (vary_seeds)
            run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(rep);
        RunOptions run_opts;
        run_opts.trace = opts.trace;
        if (opts.out_dir)
            run_opts.out_dir = *opts.out_dir / ("rep-" + std::to_string(rep));
        suite.runs.push_back(run_experiment(run_cfg, run_opts));
        reports.push_back(suite.runs.back().report);
    }
    suite.averaged = average_reports(reports);

    if (opts.out_dir) {
        std::filesystem::create_directories(*opts.out_dir);
        json per_rep = json::array();
        for (const auto& run : suite.runs)
            per_rep.push_back(run.report.to_json());
        json summary{{"config", cfg.to_json()},
                     {"repetitions", repetitions},
                     {"vary_seeds", vary_seeds},
                     {"averaged", suite.averaged.to_json()},
                     {"runs", per_rep}};
        std::ofstream out(*opts.out_dir / "summary.json");
        out << summary.dump(2) << "\n";
        write_series_csv(*opts.out_dir / "suite.csv", suite.averaged);
    }
    return suite;
}

} // namespace meld::bench
