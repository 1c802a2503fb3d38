#pragma once

#include "meld/crypto/identity.hpp"
#include "meld/net/platform.hpp"
#include "meld/proto/messages.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace meld::client {

enum class FailureKind : std::uint8_t {
    None = 0,
    Timeout,
    EndorsementMismatch,
    Rejected,      // an organization returned an Invalid verdict
    ContractError, // the contract itself refused the proposal
    Exhausted,     // fewer than q non-suspected organizations remain
};

const char* to_string(FailureKind f);

struct Outcome {
    bool committed = false;
    std::vector<proto::Receipt> receipts;
    FailureKind failure = FailureKind::None;
    std::string detail;

    int attempts = 0;
    double first_sent = 0;
    double finished = 0;

    // Logical request, carried so a failed outcome can be retried.
    std::string contract_id;
    std::string function_name;
    std::vector<Bytes> args;
    std::vector<std::string> implicated; // organizations blamed for the failure

    bool retryable() const {
        return failure == FailureKind::Timeout || failure == FailureKind::EndorsementMismatch;
    }
};

struct ReadOutcome {
    bool ok = false;
    Bytes result;
    std::string error;
    int attempts = 0;
    double first_sent = 0;
    double finished = 0;
};

struct SessionConfig {
    std::string client_id;
    proto::EndorsementPolicy policy;
    std::vector<std::string> orgs;
    double endorse_timeout = 5.0;  // simulated seconds
    double receipt_timeout = 10.0; // simulated seconds
    int max_attempts = 8;
    int suspect_threshold = 1; // suspicion at or above this marks an org suspected
};

// Client-side driver of the two-phase lifecycle: sign and broadcast the
// proposal to q organizations, collect q byte-identical write-sets, assemble
// and sign the transaction, and collect q valid receipts. Failed attempts
// feed a suspicion counter so retries steer around Byzantine organizations.
class ClientSession {
public:
    using Callback = std::function<void(const Outcome&)>;
    using ReadCallback = std::function<void(const ReadOutcome&)>;

    ClientSession(SessionConfig cfg, crypto::Signer signer,
                  const crypto::IdentityRegistry& registry, net::Platform& platform);

    const std::string& id() const { return cfg_.client_id; }
    std::uint64_t clock() const { return clock_; }
    const std::map<std::string, int>& suspicion() const { return suspicion_; }

    // One attempt of the full lifecycle.
    void submit(std::string contract_id, std::string function_name, std::vector<Bytes> args,
                Callback cb);

    // Blames the implicated organizations, reselects endorsers among the
    // least-suspected, and resubmits the same logical proposal under a fresh
    // clock. Precondition: the outcome failed with Timeout or
    // EndorsementMismatch.
    void avoid_and_retry(const Outcome& failed, Callback cb);

    // Full loop: submit, then avoid-and-retry until committed, a
    // non-retryable failure, exhaustion, or the attempt budget runs out.
    void submit_with_avoidance(std::string contract_id, std::string function_name,
                               std::vector<Bytes> args, Callback cb);

    // Read path: a read proposal is executed by a single organization and
    // returns the result with no commit phase.
    void read(std::string contract_id, std::string function_name, std::vector<Bytes> args,
              ReadCallback cb);
    void read_with_avoidance(std::string contract_id, std::string function_name,
                             std::vector<Bytes> args, ReadCallback cb);

private:
    struct Attempt;

    void start_attempt(std::shared_ptr<Outcome> base, Callback cb);
    void begin_commit_phase(const std::shared_ptr<Attempt>& attempt);
    void finish(const std::shared_ptr<Attempt>& attempt, bool committed, FailureKind failure,
                std::string detail, std::vector<std::string> implicated);
    void submit_with_avoidance_continue(const Outcome& failed, Callback cb);
    void read_retry(const std::string& contract_id, const std::string& function_name,
                    const std::vector<Bytes>& args, const ReadOutcome& prev, ReadCallback cb);
    std::vector<std::string> pick_targets(std::size_t count);
    std::size_t unsuspected_count() const;

    SessionConfig cfg_;
    crypto::Signer signer_;
    const crypto::IdentityRegistry* registry_;
    net::Platform* platform_;
    std::uint64_t clock_ = 0; // strictly increases with every proposal
    std::map<std::string, int> suspicion_;
};

} // namespace meld::client
