#include "meld/client/session.hpp"

#include <algorithm>

namespace meld::client {

const char* to_string(FailureKind f) {
    switch (f) {
    case FailureKind::None: return "none";
    case FailureKind::Timeout: return "timeout";
    case FailureKind::EndorsementMismatch: return "endorsement_mismatch";
    case FailureKind::Rejected: return "rejected";
    case FailureKind::ContractError: return "contract_error";
    case FailureKind::Exhausted: return "exhausted";
    }
    return "?";
}

ClientSession::ClientSession(SessionConfig cfg, crypto::Signer signer,
                             const crypto::IdentityRegistry& registry, net::Platform& platform)
    : cfg_(std::move(cfg)), signer_(std::move(signer)), registry_(&registry),
      platform_(&platform) {
    if (cfg_.orgs.size() < cfg_.policy.q)
        throw std::invalid_argument("roster smaller than endorsement policy q");
}

// In-flight state of one attempt. Shared between response and timer
// callbacks; the phase flags make late or duplicated deliveries no-ops.
struct ClientSession::Attempt {
    std::shared_ptr<Outcome> outcome;
    Callback cb;
    proto::Proposal proposal;
    std::vector<std::string> targets;
    std::map<std::string, proto::Endorsement> endorsements;
    proto::Transaction tx;
    std::map<std::string, proto::Receipt> receipts;
    bool endorse_done = false;
    bool finished = false;
};

std::size_t ClientSession::unsuspected_count() const {
    std::size_t n = 0;
    for (const auto& org : cfg_.orgs) {
        auto it = suspicion_.find(org);
        if (it == suspicion_.end() || it->second < cfg_.suspect_threshold)
            ++n;
    }
    return n;
}

std::vector<std::string> ClientSession::pick_targets(std::size_t count) {
    // Least-suspected first, random tie-break.
    std::vector<std::pair<std::pair<int, std::uint64_t>, std::string>> ranked;
    ranked.reserve(cfg_.orgs.size());
    for (const auto& org : cfg_.orgs) {
        auto it = suspicion_.find(org);
        int s = it == suspicion_.end() ? 0 : it->second;
        ranked.push_back({{s, platform_->rng()()}, org});
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count && i < ranked.size(); ++i)
        out.push_back(ranked[i].second);
    return out;
}

void ClientSession::submit(std::string contract_id, std::string function_name,
                           std::vector<Bytes> args, Callback cb) {
    auto base = std::make_shared<Outcome>();
    base->contract_id = std::move(contract_id);
    base->function_name = std::move(function_name);
    base->args = std::move(args);
    base->first_sent = platform_->now();
    start_attempt(std::move(base), std::move(cb));
}

void ClientSession::avoid_and_retry(const Outcome& failed, Callback cb) {
    for (const auto& org : failed.implicated)
        ++suspicion_[org];

    auto base = std::make_shared<Outcome>();
    base->contract_id = failed.contract_id;
    base->function_name = failed.function_name;
    base->args = failed.args;
    base->attempts = failed.attempts;
    base->first_sent = failed.first_sent;

    if (unsuspected_count() < cfg_.policy.q) {
        base->failure = FailureKind::Exhausted;
        base->detail = "fewer than q non-suspected organizations remain";
        base->finished = platform_->now();
        base->attempts = failed.attempts;
        cb(*base);
        return;
    }
    start_attempt(std::move(base), std::move(cb));
}

void ClientSession::submit_with_avoidance(std::string contract_id, std::string function_name,
                                          std::vector<Bytes> args, Callback cb) {
    submit(std::move(contract_id), std::move(function_name), std::move(args),
           [this, cb = std::move(cb)](const Outcome& out) {
               if (!out.committed && out.retryable() && out.attempts < cfg_.max_attempts)
                   submit_with_avoidance_continue(out, cb);
               else
                   cb(out);
           });
}

// Retry loop as a member continuation, avoiding self-referential callbacks.
void ClientSession::submit_with_avoidance_continue(const Outcome& failed, Callback cb) {
    avoid_and_retry(failed, [this, cb = std::move(cb)](const Outcome& out) {
        if (!out.committed && out.retryable() && out.attempts < cfg_.max_attempts)
            submit_with_avoidance_continue(out, cb);
        else
            cb(out);
    });
}

void ClientSession::start_attempt(std::shared_ptr<Outcome> base, Callback cb) {
    auto attempt = std::make_shared<Attempt>();
    attempt->outcome = std::move(base);
    attempt->cb = std::move(cb);
    attempt->outcome->attempts += 1;
    attempt->outcome->committed = false;
    attempt->outcome->failure = FailureKind::None;
    attempt->outcome->implicated.clear();
    attempt->outcome->receipts.clear();

    ++clock_; // strictly increasing with every submitted proposal
    attempt->proposal =
        proto::Proposal::make_signed(signer_, clock_, attempt->outcome->contract_id,
                                     attempt->outcome->function_name, attempt->outcome->args);
    attempt->targets = pick_targets(cfg_.policy.q);

    proto::Frame frame{proto::MsgType::ProposeRequest, attempt->proposal.encoded()};
    for (const auto& org : attempt->targets) {
        platform_->send(cfg_.client_id, org, frame,
                        [this, attempt, org](const proto::Frame& response) {
                            if (attempt->finished || attempt->endorse_done)
                                return;
                            if (response.type != proto::MsgType::EndorsementResponse)
                                return;
                            auto body =
                                proto::EndorsementResponseBody::decode_bytes(response.payload);
                            if (body.proposal_id != attempt->proposal.proposal_id)
                                return;
                            if (body.status == proto::EndorsementResponseBody::Status::Error) {
                                finish(attempt, false, FailureKind::ContractError,
                                       body.error_code, {});
                                return;
                            }
                            if (body.status != proto::EndorsementResponseBody::Status::Endorsed)
                                return;
                            // An endorsement must be the sender's own; a
                            // replayed endorsement would fake the quorum.
                            if (body.endorsement.org_id != org)
                                return;
                            attempt->endorsements[org] = std::move(body.endorsement);
                            if (attempt->endorsements.size() >= cfg_.policy.q)
                                begin_commit_phase(attempt);
                        });
    }
    platform_->schedule(cfg_.endorse_timeout, [this, attempt] {
        if (attempt->finished || attempt->endorse_done)
            return;
        std::vector<std::string> silent;
        for (const auto& org : attempt->targets)
            if (!attempt->endorsements.contains(org))
                silent.push_back(org);
        finish(attempt, false, FailureKind::Timeout, "endorsement timeout", std::move(silent));
    });
}

void ClientSession::begin_commit_phase(const std::shared_ptr<Attempt>& attempt) {
    attempt->endorse_done = true;

    // All write-sets must be byte-identical; a mismatch implicates the
    // organizations outvoted by the majority write-set (all of them when no
    // majority exists).
    std::map<Bytes, std::vector<std::string>> by_bytes;
    for (const auto& [org, endorsement] : attempt->endorsements)
        by_bytes[crdt::encode_write_set(endorsement.write_set)].push_back(org);

    if (by_bytes.size() > 1) {
        std::size_t best = 0;
        const Bytes* majority = nullptr;
        for (const auto& [bytes, orgs] : by_bytes) {
            if (orgs.size() > best) {
                best = orgs.size();
                majority = &bytes;
            }
        }
        std::vector<std::string> implicated;
        if (majority != nullptr && best * 2 > attempt->endorsements.size()) {
            for (const auto& [bytes, orgs] : by_bytes)
                if (bytes != *majority)
                    implicated.insert(implicated.end(), orgs.begin(), orgs.end());
        } else {
            implicated = attempt->targets;
        }
        finish(attempt, false, FailureKind::EndorsementMismatch, "write-sets differ",
               std::move(implicated));
        return;
    }

    std::vector<proto::Endorsement> endorsements;
    for (auto& [org, endorsement] : attempt->endorsements)
        endorsements.push_back(endorsement);
    attempt->tx = proto::Transaction::assemble(
        attempt->proposal, attempt->endorsements.begin()->second.write_set,
        std::move(endorsements), signer_);

    // Commit targets default to the endorsing organizations.
    proto::Frame frame{proto::MsgType::CommitRequest, attempt->tx.encoded()};
    for (const auto& org : attempt->targets) {
        platform_->send(cfg_.client_id, org, frame,
                        [this, attempt, org](const proto::Frame& response) {
                            if (attempt->finished)
                                return;
                            if (response.type != proto::MsgType::ReceiptResponse)
                                return;
                            auto body =
                                proto::ReceiptResponseBody::decode_bytes(response.payload);
                            const proto::Receipt& receipt = body.receipt;
                            if (receipt.tx_id != attempt->tx.tx_id || receipt.org_id != org)
                                return;
                            if (!registry_->verify(org, receipt.signed_payload(),
                                                   receipt.org_signature))
                                return;
                            if (receipt.verdict == proto::Verdict::Invalid) {
                                finish(attempt, false, FailureKind::Rejected, body.reason, {});
                                return;
                            }
                            attempt->receipts[org] = receipt;
                            if (attempt->receipts.size() >= cfg_.policy.q) {
                                for (const auto& [o, r] : attempt->receipts)
                                    attempt->outcome->receipts.push_back(r);
                                finish(attempt, true, FailureKind::None, "", {});
                            }
                        });
    }
    platform_->schedule(cfg_.receipt_timeout, [this, attempt] {
        if (attempt->finished)
            return;
        std::vector<std::string> silent;
        for (const auto& org : attempt->targets)
            if (!attempt->receipts.contains(org))
                silent.push_back(org);
        finish(attempt, false, FailureKind::Timeout, "receipt timeout", std::move(silent));
    });
}

void ClientSession::finish(const std::shared_ptr<Attempt>& attempt, bool committed,
                           FailureKind failure, std::string detail,
                           std::vector<std::string> implicated) {
    if (attempt->finished)
        return;
    attempt->finished = true;
    Outcome& out = *attempt->outcome;
    out.committed = committed;
    out.failure = failure;
    out.detail = std::move(detail);
    out.implicated = std::move(implicated);
    out.finished = platform_->now();
    if (committed) {
        // The serving organizations proved themselves; clear their record.
        for (const auto& org : attempt->targets)
            suspicion_.erase(org);
    }
    attempt->cb(out);
}

void ClientSession::read(std::string contract_id, std::string function_name,
                         std::vector<Bytes> args, ReadCallback cb) {
    auto outcome = std::make_shared<ReadOutcome>();
    outcome->first_sent = platform_->now();
    outcome->attempts = 1;

    ++clock_;
    proto::Proposal proposal = proto::Proposal::make_signed(
        signer_, clock_, std::move(contract_id), std::move(function_name), std::move(args));

    auto target = pick_targets(1);
    auto done = std::make_shared<bool>(false);
    proto::Frame frame{proto::MsgType::ProposeRequest, proposal.encoded()};
    std::string org = target.front();
    platform_->send(cfg_.client_id, org, frame,
                    [this, outcome, done, cb, pid = proposal.proposal_id,
                     org](const proto::Frame& response) {
                        if (*done || response.type != proto::MsgType::EndorsementResponse)
                            return;
                        auto body = proto::EndorsementResponseBody::decode_bytes(response.payload);
                        if (body.proposal_id != pid)
                            return;
                        *done = true;
                        outcome->finished = platform_->now();
                        if (body.status == proto::EndorsementResponseBody::Status::ReadResult) {
                            outcome->ok = true;
                            outcome->result = std::move(body.read_result);
                        } else {
                            outcome->error = body.error_code.empty() ? "unexpected_response"
                                                                     : body.error_code;
                        }
                        cb(*outcome);
                    });
    platform_->schedule(cfg_.endorse_timeout, [this, outcome, done, cb, org] {
        if (*done)
            return;
        *done = true;
        ++suspicion_[org];
        outcome->finished = platform_->now();
        outcome->error = "timeout";
        cb(*outcome);
    });
}

void ClientSession::read_with_avoidance(std::string contract_id, std::string function_name,
                                        std::vector<Bytes> args, ReadCallback cb) {
    read(contract_id, function_name, args,
         [this, contract_id, function_name, args, cb = std::move(cb)](const ReadOutcome& out) {
             if (!out.ok && out.error == "timeout" && out.attempts < cfg_.max_attempts) {
                 read_retry(contract_id, function_name, args, out, cb);
             } else {
                 cb(out);
             }
         });
}

void ClientSession::read_retry(const std::string& contract_id, const std::string& function_name,
                               const std::vector<Bytes>& args, const ReadOutcome& prev,
                               ReadCallback cb) {
    read(contract_id, function_name, args,
         [this, contract_id, function_name, args, prev, cb = std::move(cb)](ReadOutcome out) {
             out.attempts += prev.attempts;
             out.first_sent = prev.first_sent;
             if (!out.ok && out.error == "timeout" && out.attempts < cfg_.max_attempts)
                 read_retry(contract_id, function_name, args, out, cb);
             else
                 cb(out);
         });
}

} // namespace meld::client
