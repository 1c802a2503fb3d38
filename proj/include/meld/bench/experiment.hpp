#pragma once

#include "meld/bench/config.hpp"
#include "meld/bench/metrics.hpp"
#include "meld/crypto/identity.hpp"

#include <filesystem>
#include <optional>

namespace meld::bench {

struct OrgSnapshot {
    std::string org_id;
    crypto::Digest state_digest{};
    std::vector<crypto::Digest> committed_valid; // local commit order
    bool chain_ok = false;
    std::uint64_t height = 0;
};

struct RunResult {
    MetricsReport report;
    std::vector<OrgSnapshot> orgs;
    bool converged = false; // identical digests and committed-valid sets everywhere
    std::uint64_t events_executed = 0;
    std::vector<std::string> net_trace; // filled when tracing is on
};

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    bool trace = false;
};

// Builds the whole deployment inside the deterministic simulator — roster,
// keys, ledgers, nodes, gossip loops, client sessions — replays the workload,
// then drains gossip and snapshots every organization.
RunResult run_experiment(const WorkloadConfig& cfg, const RunOptions& opts = {});

struct SuiteResult {
    std::vector<RunResult> runs;
    MetricsReport averaged;
};

SuiteResult run_suite(const WorkloadConfig& cfg, int repetitions, bool vary_seeds,
                      const RunOptions& opts = {});

// Snapshot comparison used by the convergence-check command.
bool snapshots_converged(const std::vector<OrgSnapshot>& orgs);

} // namespace meld::bench
