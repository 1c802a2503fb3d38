#include "meld/proto/messages.hpp"

namespace meld::proto {

namespace {

void encode_digest(Writer& w, const Digest& d) { w.raw(crypto::digest_span(d)); }

Digest decode_digest(Reader& r) {
    Digest d;
    r.raw(d.data(), d.size());
    return d;
}

} // namespace

Bytes Proposal::canonical_core() const {
    Writer w;
    w.str(proposal_id);
    w.str(client_id);
    w.u64(client_clock);
    w.str(contract_id);
    w.str(function_name);
    w.u32(static_cast<std::uint32_t>(args.size()));
    for (const auto& arg : args)
        w.bytes(arg);
    return w.take();
}

void Proposal::encode(Writer& w) const {
    w.raw(canonical_core());
    client_signature.encode(w);
}

Proposal Proposal::decode(Reader& r) {
    Proposal p;
    p.proposal_id = r.str();
    p.client_id = r.str();
    p.client_clock = r.u64();
    p.contract_id = r.str();
    p.function_name = r.str();
    auto nargs = r.u32();
    p.args.reserve(nargs);
    for (std::uint32_t i = 0; i < nargs; ++i)
        p.args.push_back(r.bytes());
    p.client_signature = crypto::Signature::decode(r);
    return p;
}

Bytes Proposal::encoded() const {
    Writer w;
    encode(w);
    return w.take();
}

Proposal Proposal::make_signed(const crypto::Signer& client, std::uint64_t clock,
                               std::string contract_id, std::string function_name,
                               std::vector<Bytes> args) {
    Proposal p;
    p.client_id = client.id();
    p.client_clock = clock;
    p.proposal_id = p.client_id + "#" + std::to_string(clock);
    p.contract_id = std::move(contract_id);
    p.function_name = std::move(function_name);
    p.args = std::move(args);
    p.client_signature = client.hash_and_sign(p.canonical_core()).second;
    return p;
}

void Endorsement::encode(Writer& w) const {
    w.str(org_id);
    w.raw(crdt::encode_write_set(write_set));
    encode_digest(w, write_set_digest);
    org_signature.encode(w);
}

Endorsement Endorsement::decode(Reader& r) {
    Endorsement e;
    e.org_id = r.str();
    e.write_set = crdt::decode_write_set(r);
    e.write_set_digest = decode_digest(r);
    e.org_signature = crypto::Signature::decode(r);
    return e;
}

void Transaction::encode(Writer& w) const {
    encode_digest(w, tx_id);
    proposal.encode(w);
    w.raw(crdt::encode_write_set(write_set));
    w.u32(static_cast<std::uint32_t>(endorsements.size()));
    for (const auto& e : endorsements)
        e.encode(w);
    client_signature.encode(w);
}

Transaction Transaction::decode(Reader& r) {
    Transaction tx;
    tx.tx_id = decode_digest(r);
    tx.proposal = Proposal::decode(r);
    tx.write_set = crdt::decode_write_set(r);
    auto n = r.u32();
    tx.endorsements.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        tx.endorsements.push_back(Endorsement::decode(r));
    tx.client_signature = crypto::Signature::decode(r);
    return tx;
}

Bytes Transaction::encoded() const {
    Writer w;
    encode(w);
    return w.take();
}

Transaction Transaction::assemble(Proposal proposal, crdt::WriteSet write_set,
                                  std::vector<Endorsement> endorsements,
                                  const crypto::Signer& client) {
    Transaction tx;
    tx.proposal = std::move(proposal);
    tx.write_set = std::move(write_set);
    tx.endorsements = std::move(endorsements);
    Digest ws_digest = write_set_digest(tx.write_set);
    tx.tx_id = transaction_id(tx.proposal, ws_digest);
    tx.client_signature = client.sign_digest(ws_digest);
    return tx;
}

Digest write_set_digest(const crdt::WriteSet& ops) {
    return crypto::sha256(crdt::encode_write_set(ops));
}

Digest transaction_id(const Proposal& proposal, const Digest& ws_digest) {
    Writer w;
    proposal.encode(w);
    w.raw(crypto::digest_span(ws_digest));
    return crypto::sha256(w.data());
}

const char* to_string(Verdict v) {
    return v == Verdict::Valid ? "valid" : "invalid";
}

Bytes Receipt::signed_payload() const {
    Writer w;
    encode_digest(w, block_hash);
    w.u8(static_cast<std::uint8_t>(verdict));
    return w.take();
}

void Receipt::encode(Writer& w) const {
    encode_digest(w, tx_id);
    w.str(org_id);
    encode_digest(w, block_hash);
    w.u8(static_cast<std::uint8_t>(verdict));
    org_signature.encode(w);
}

Receipt Receipt::decode(Reader& r) {
    Receipt rc;
    rc.tx_id = decode_digest(r);
    rc.org_id = r.str();
    rc.block_hash = decode_digest(r);
    rc.verdict = static_cast<Verdict>(r.u8());
    rc.org_signature = crypto::Signature::decode(r);
    return rc;
}

Bytes Frame::encoded() const {
    Bytes out;
    out.reserve(1 + payload.size());
    out.push_back(static_cast<std::uint8_t>(type));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Frame Frame::decode_bytes(ByteSpan data) {
    if (data.empty())
        throw CodecError("empty frame");
    Frame f;
    f.type = static_cast<MsgType>(data[0]);
    f.payload.assign(data.begin() + 1, data.end());
    return f;
}

Bytes EndorsementResponseBody::encoded() const {
    Writer w;
    w.u8(static_cast<std::uint8_t>(status));
    w.str(proposal_id);
    switch (status) {
    case Status::Endorsed: endorsement.encode(w); break;
    case Status::ReadResult: w.bytes(read_result); break;
    case Status::Error:
        w.str(error_code);
        w.str(error_detail);
        break;
    }
    return w.take();
}

EndorsementResponseBody EndorsementResponseBody::decode_bytes(ByteSpan data) {
    Reader r(data);
    EndorsementResponseBody body;
    body.status = static_cast<Status>(r.u8());
    body.proposal_id = r.str();
    switch (body.status) {
    case Status::Endorsed: body.endorsement = Endorsement::decode(r); break;
    case Status::ReadResult: body.read_result = r.bytes(); break;
    case Status::Error:
        body.error_code = r.str();
        body.error_detail = r.str();
        break;
    }
    return body;
}

Bytes ReceiptResponseBody::encoded() const {
    Writer w;
    receipt.encode(w);
    w.str(reason);
    return w.take();
}

ReceiptResponseBody ReceiptResponseBody::decode_bytes(ByteSpan data) {
    Reader r(data);
    ReceiptResponseBody body;
    body.receipt = Receipt::decode(r);
    body.reason = r.str();
    return body;
}

Bytes GossipPushBody::encoded() const {
    Writer w;
    w.str(from_org);
    w.u64(base_seq);
    w.u32(static_cast<std::uint32_t>(txs.size()));
    for (const auto& tx : txs)
        tx.encode(w);
    return w.take();
}

GossipPushBody GossipPushBody::decode_bytes(ByteSpan data) {
    Reader r(data);
    GossipPushBody body;
    body.from_org = r.str();
    body.base_seq = r.u64();
    auto n = r.u32();
    body.txs.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        body.txs.push_back(Transaction::decode(r));
    return body;
}

Bytes GossipAckBody::encoded() const {
    Writer w;
    w.str(from_org);
    w.u64(acked_seq);
    return w.take();
}

GossipAckBody GossipAckBody::decode_bytes(ByteSpan data) {
    Reader r(data);
    GossipAckBody body;
    body.from_org = r.str();
    body.acked_seq = r.u64();
    return body;
}

} // namespace meld::proto
