#pragma once

#include "meld/crdt/operation.hpp"
#include "meld/crypto/identity.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace meld::proto {

using crypto::Digest;

// Trust threshold: q of the n organizations must endorse and commit.
struct EndorsementPolicy {
    std::uint32_t q = 1;
    std::uint32_t n = 1;

    bool valid() const { return q > 0 && q <= n; }
};

struct Proposal {
    std::string proposal_id; // "<client>#<clock>", unique per client
    std::string client_id;
    std::uint64_t client_clock = 0;
    std::string contract_id;
    std::string function_name;
    std::vector<Bytes> args;
    crypto::Signature client_signature; // over sha256(canonical_core)

    Bytes canonical_core() const; // unsigned part, fixed field order
    void encode(Writer& w) const;
    static Proposal decode(Reader& r);
    Bytes encoded() const;

    static Proposal make_signed(const crypto::Signer& client, std::uint64_t clock,
                                std::string contract_id, std::string function_name,
                                std::vector<Bytes> args);
};

struct Endorsement {
    std::string org_id;
    crdt::WriteSet write_set;
    Digest write_set_digest{};
    crypto::Signature org_signature; // over write_set_digest

    void encode(Writer& w) const;
    static Endorsement decode(Reader& r);
};

struct Transaction {
    Digest tx_id{};
    Proposal proposal;
    crdt::WriteSet write_set;
    std::vector<Endorsement> endorsements;
    crypto::Signature client_signature; // over the write-set digest

    void encode(Writer& w) const;
    static Transaction decode(Reader& r);
    Bytes encoded() const;

    static Transaction assemble(Proposal proposal, crdt::WriteSet write_set,
                                std::vector<Endorsement> endorsements,
                                const crypto::Signer& client);
};

Digest write_set_digest(const crdt::WriteSet& ops);
Digest transaction_id(const Proposal& proposal, const Digest& ws_digest);

enum class Verdict : std::uint8_t { Valid = 1, Invalid = 2 };

const char* to_string(Verdict v);

struct Receipt {
    Digest tx_id{};
    std::string org_id;
    Digest block_hash{};
    Verdict verdict = Verdict::Invalid;
    crypto::Signature org_signature; // over sha256(block_hash | verdict)

    Bytes signed_payload() const;
    void encode(Writer& w) const;
    static Receipt decode(Reader& r);
};

// Wire frames. Transport carries opaque frame bytes in both the simulated
// and the socket transports.
enum class MsgType : std::uint8_t {
    ProposeRequest = 1,
    EndorsementResponse = 2,
    CommitRequest = 3,
    ReceiptResponse = 4,
    GossipPush = 5,
    GossipAck = 6,
};

struct Frame {
    MsgType type = MsgType::ProposeRequest;
    Bytes payload;

    Bytes encoded() const;
    static Frame decode_bytes(ByteSpan data);
    std::size_t wire_size() const { return 1 + payload.size(); }
};

struct EndorsementResponseBody {
    enum class Status : std::uint8_t { Endorsed = 1, ReadResult = 2, Error = 3 };

    Status status = Status::Error;
    std::string proposal_id;
    Endorsement endorsement; // when Endorsed
    Bytes read_result;       // when ReadResult
    std::string error_code;  // when Error
    std::string error_detail;

    Bytes encoded() const;
    static EndorsementResponseBody decode_bytes(ByteSpan data);
};

struct ReceiptResponseBody {
    Receipt receipt;
    std::string reason; // validation reason code, "valid" when committed

    Bytes encoded() const;
    static ReceiptResponseBody decode_bytes(ByteSpan data);
};

struct GossipPushBody {
    std::string from_org;
    std::uint64_t base_seq = 0; // sender's valid-commit sequence before txs
    std::vector<Transaction> txs;

    Bytes encoded() const;
    static GossipPushBody decode_bytes(ByteSpan data);
};

struct GossipAckBody {
    std::string from_org;
    std::uint64_t acked_seq = 0;

    Bytes encoded() const;
    static GossipAckBody decode_bytes(ByteSpan data);
};

} // namespace meld::proto
