#include "meld/node/org_node.hpp"

#include <algorithm>

namespace meld::node {

const char* to_string(ValidationReason r) {
    switch (r) {
    case ValidationReason::Valid: return "valid";
    case ValidationReason::PolicyUnsatisfied: return "policy_unsatisfied";
    case ValidationReason::BadEndorsementSig: return "bad_endorsement_sig";
    case ValidationReason::BadClientSig: return "bad_client_sig";
    case ValidationReason::DigestMismatch: return "digest_mismatch";
    case ValidationReason::DuplicateEndorser: return "duplicate_endorser";
    }
    return "?";
}

OrgNode::OrgNode(NodeConfig cfg, const crypto::IdentityRegistry& registry,
                 crypto::Signer signer, const contracts::ContractRegistry& contracts,
                 ledger::Ledger& ledger)
    : cfg_(std::move(cfg)), registry_(&registry), signer_(std::move(signer)),
      contracts_(&contracts), ledger_(&ledger) {
    if (!cfg_.policy.valid())
        throw std::invalid_argument("endorsement policy must satisfy 0 < q <= n");
}

void OrgNode::verify_client_proposal(const proto::Proposal& proposal) const {
    const crypto::Identity* client = registry_->find(proposal.client_id);
    if (client == nullptr || client->role != crypto::Role::Client)
        throw BadClientSignature("client not registered: " + proposal.client_id);
    if (proposal.client_signature.signer_id != proposal.client_id ||
        !registry_->verify(proposal.client_id, proposal.canonical_core(),
                           proposal.client_signature))
        throw BadClientSignature("bad signature on proposal " + proposal.proposal_id);
}

bool OrgNode::is_read_function(const std::string& contract_id, const std::string& fn) const {
    const auto* contract = contracts_->find(contract_id);
    return contract != nullptr && contract->read_fns.contains(fn);
}

proto::Endorsement OrgNode::endorse(const proto::Proposal& proposal) {
    verify_client_proposal(proposal);
    const auto* contract = contracts_->find(proposal.contract_id);
    if (contract == nullptr)
        throw UnknownContract(proposal.contract_id);
    auto fn = contract->modify_fns.find(proposal.function_name);
    if (fn == contract->modify_fns.end())
        throw UnknownFunction(proposal.function_name);

    contracts::StateView view(*ledger_);
    contracts::ContractContext ctx;
    ctx.client_id = proposal.client_id;
    ctx.proposal_clock = proposal.client_clock;
    ctx.state = &view;
    crdt::WriteSet write_set = fn->second(ctx, proposal.args);

    if (endorsement_tamper)
        endorsement_tamper(write_set);

    proto::Endorsement endorsement;
    endorsement.org_id = cfg_.org_id;
    endorsement.write_set_digest = proto::write_set_digest(write_set);
    endorsement.org_signature = signer_.sign_digest(endorsement.write_set_digest);
    endorsement.write_set = std::move(write_set);
    return endorsement;
}

Bytes OrgNode::execute_read(const proto::Proposal& proposal) {
    verify_client_proposal(proposal);
    const auto* contract = contracts_->find(proposal.contract_id);
    if (contract == nullptr)
        throw UnknownContract(proposal.contract_id);
    auto fn = contract->read_fns.find(proposal.function_name);
    if (fn == contract->read_fns.end())
        throw UnknownFunction(proposal.function_name);
    contracts::StateView view(*ledger_);
    return fn->second(view, proposal.args);
}

ValidationReason OrgNode::validate_transaction(const proto::Transaction& tx) const {
    Digest ws_digest = proto::write_set_digest(tx.write_set);
    if (proto::transaction_id(tx.proposal, ws_digest) != tx.tx_id)
        return ValidationReason::DigestMismatch;

    std::set<std::string> endorsers;
    for (const auto& e : tx.endorsements) {
        if (!endorsers.insert(e.org_id).second)
            return ValidationReason::DuplicateEndorser;
    }

    for (const auto& e : tx.endorsements) {
        const crypto::Identity* org = registry_->find(e.org_id);
        if (org == nullptr || org->role != crypto::Role::Organization)
            return ValidationReason::BadEndorsementSig;
        // Every endorsement must be a signature over this transaction's
        // write-set: identical write-sets prove the organizations executed
        // the same contract on the same inputs.
        if (e.write_set_digest != ws_digest)
            return ValidationReason::DigestMismatch;
        if (!registry_->verify_digest(e.org_id, ws_digest, e.org_signature))
            return ValidationReason::BadEndorsementSig;
    }

    if (tx.endorsements.size() < cfg_.policy.q)
        return ValidationReason::PolicyUnsatisfied;

    const crypto::Identity* client = registry_->find(tx.proposal.client_id);
    if (client == nullptr || client->role != crypto::Role::Client)
        return ValidationReason::BadClientSig;
    if (tx.client_signature.signer_id != tx.proposal.client_id ||
        !registry_->verify_digest(tx.proposal.client_id, ws_digest, tx.client_signature))
        return ValidationReason::BadClientSig;

    return ValidationReason::Valid;
}

CommitOutcome OrgNode::commit(const proto::Transaction& tx) {
    std::lock_guard lock(commit_mu_);
    if (auto it = receipts_.find(tx.tx_id); it != receipts_.end()) {
        CommitOutcome out = it->second;
        out.fresh = false;
        return out;
    }

    ValidationReason reason = validate_transaction(tx);
    proto::Verdict verdict =
        reason == ValidationReason::Valid ? proto::Verdict::Valid : proto::Verdict::Invalid;
    const ledger::Block& block = ledger_->append_block(tx, verdict);

    proto::Receipt receipt;
    receipt.tx_id = tx.tx_id;
    receipt.org_id = cfg_.org_id;
    receipt.block_hash = block.block_hash;
    receipt.verdict = verdict;
    receipt.org_signature = signer_.hash_and_sign(receipt.signed_payload()).second;

    CommitOutcome out{std::move(receipt), reason, true};
    receipts_[tx.tx_id] = out;
    return out;
}

std::vector<OrgNode::GossipBatch> OrgNode::gossip_round(std::mt19937_64& rng) {
    std::vector<GossipBatch> batches;
    if (cfg_.peers.empty() || cfg_.gossip_ratio == 0)
        return batches;

    std::vector<std::string> chosen = cfg_.peers;
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(std::min<std::size_t>(cfg_.gossip_ratio, chosen.size()));

    std::uint64_t head = ledger_->valid_count();
    for (const auto& peer : chosen) {
        std::uint64_t base = acked_watermark(peer);
        if (base >= head)
            continue;
        GossipBatch batch;
        batch.peer = peer;
        batch.body.from_org = cfg_.org_id;
        batch.body.base_seq = base;
        for (std::uint64_t seq = base; seq < head; ++seq)
            batch.body.txs.push_back(ledger_->valid_at(seq));
        batches.push_back(std::move(batch));
    }
    return batches;
}

void OrgNode::gossip_acked(const std::string& peer, std::uint64_t acked_seq) {
    auto& mark = acked_[peer];
    mark = std::max(mark, acked_seq);
}

std::uint64_t OrgNode::acked_watermark(const std::string& peer) const {
    auto it = acked_.find(peer);
    return it == acked_.end() ? 0 : it->second;
}

std::optional<proto::Frame> OrgNode::handle_frame(const proto::Frame& frame) {
    switch (frame.type) {
    case proto::MsgType::ProposeRequest: {
        Reader r(frame.payload);
        proto::Proposal proposal = proto::Proposal::decode(r);
        proto::EndorsementResponseBody body;
        body.proposal_id = proposal.proposal_id;
        try {
            if (is_read_function(proposal.contract_id, proposal.function_name)) {
                body.status = proto::EndorsementResponseBody::Status::ReadResult;
                body.read_result = execute_read(proposal);
            } else {
                body.status = proto::EndorsementResponseBody::Status::Endorsed;
                body.endorsement = endorse(proposal);
            }
        } catch (const contracts::ContractError& err) {
            body.status = proto::EndorsementResponseBody::Status::Error;
            body.error_code = err.code;
            body.error_detail = err.what();
        } catch (const UnknownContract& err) {
            body.status = proto::EndorsementResponseBody::Status::Error;
            body.error_code = "UnknownContract";
            body.error_detail = err.what();
        } catch (const UnknownFunction& err) {
            body.status = proto::EndorsementResponseBody::Status::Error;
            body.error_code = "UnknownFunction";
            body.error_detail = err.what();
        } catch (const BadClientSignature& err) {
            body.status = proto::EndorsementResponseBody::Status::Error;
            body.error_code = "BadClientSignature";
            body.error_detail = err.what();
        }
        return proto::Frame{proto::MsgType::EndorsementResponse, body.encoded()};
    }
    case proto::MsgType::CommitRequest: {
        Reader r(frame.payload);
        proto::Transaction tx = proto::Transaction::decode(r);
        CommitOutcome out = commit(tx);
        proto::ReceiptResponseBody body{out.receipt, to_string(out.reason)};
        return proto::Frame{proto::MsgType::ReceiptResponse, body.encoded()};
    }
    case proto::MsgType::GossipPush: {
        auto body = proto::GossipPushBody::decode_bytes(frame.payload);
        for (const auto& tx : body.txs) {
            if (!ledger_->contains_tx(tx.tx_id))
                commit(tx);
        }
        proto::GossipAckBody ack{cfg_.org_id, body.base_seq + body.txs.size()};
        return proto::Frame{proto::MsgType::GossipAck, ack.encoded()};
    }
    case proto::MsgType::GossipAck: {
        auto ack = proto::GossipAckBody::decode_bytes(frame.payload);
        gossip_acked(ack.from_org, ack.acked_seq);
        return std::nullopt;
    }
    default:
        return std::nullopt;
    }
}

} // namespace meld::node
