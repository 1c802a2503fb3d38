#pragma once

#include "meld/contracts/contracts.hpp"
#include "meld/ledger/ledger.hpp"
#include "meld/proto/messages.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace meld::node {

using proto::Digest;

enum class ValidationReason : std::uint8_t {
    Valid = 0,
    PolicyUnsatisfied,
    BadEndorsementSig,
    BadClientSig,
    DigestMismatch,
    DuplicateEndorser,
};

const char* to_string(ValidationReason r);

struct UnknownContract : std::runtime_error {
    explicit UnknownContract(const std::string& id)
        : std::runtime_error("unknown contract: " + id) {}
};
struct UnknownFunction : std::runtime_error {
    explicit UnknownFunction(const std::string& fn)
        : std::runtime_error("unknown function: " + fn) {}
};
struct BadClientSignature : std::runtime_error {
    explicit BadClientSignature(const std::string& what) : std::runtime_error(what) {}
};

struct NodeConfig {
    std::string org_id;
    proto::EndorsementPolicy policy;
    std::vector<std::string> peers; // other organizations
    std::uint32_t gossip_ratio = 1; // peers contacted per round
    double gossip_interval = 1.0;   // seconds between rounds (read by the host loop)
};

struct CommitOutcome {
    proto::Receipt receipt;
    ValidationReason reason = ValidationReason::Valid;
    bool fresh = false; // false when the stored receipt was returned
};

// One organization: endorses proposals (execute phase), validates and
// commits transactions against its own ledger, and feeds the gossip loop
// (commit phase).
class OrgNode {
public:
    OrgNode(NodeConfig cfg, const crypto::IdentityRegistry& registry, crypto::Signer signer,
            const contracts::ContractRegistry& contracts, ledger::Ledger& ledger);

    const std::string& id() const { return cfg_.org_id; }
    const NodeConfig& config() const { return cfg_; }
    ledger::Ledger& ledger() { return *ledger_; }

    // Phase 1. Deterministically executes the contract; no ledger side
    // effects, so re-execution is harmless.
    proto::Endorsement endorse(const proto::Proposal& proposal);
    Bytes execute_read(const proto::Proposal& proposal);
    bool is_read_function(const std::string& contract_id, const std::string& fn) const;

    // Phase 2.
    ValidationReason validate_transaction(const proto::Transaction& tx) const;
    CommitOutcome commit(const proto::Transaction& tx);

    // One gossip round: every committed-valid transaction a peer has not
    // acknowledged goes to `gossip_ratio` uniformly chosen peers.
    struct GossipBatch {
        std::string peer;
        proto::GossipPushBody body;
    };
    std::vector<GossipBatch> gossip_round(std::mt19937_64& rng);
    void gossip_acked(const std::string& peer, std::uint64_t acked_seq);
    std::uint64_t acked_watermark(const std::string& peer) const;

    // Transport-agnostic frame dispatch; nullopt means "no response" (the
    // frame was not addressed to a node role we serve).
    std::optional<proto::Frame> handle_frame(const proto::Frame& frame);

    // Fault-injection hook: mutates the write-set before it is signed.
    std::function<void(crdt::WriteSet&)> endorsement_tamper;

private:
    void verify_client_proposal(const proto::Proposal& proposal) const;

    NodeConfig cfg_;
    const crypto::IdentityRegistry* registry_;
    crypto::Signer signer_;
    const contracts::ContractRegistry* contracts_;
    ledger::Ledger* ledger_;

    std::map<Digest, CommitOutcome> receipts_;
    std::map<std::string, std::uint64_t> acked_; // peer -> acked valid-seq watermark
    mutable std::mutex commit_mu_;
};

} // namespace meld::node
