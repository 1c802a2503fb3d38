#pragma once

#include "meld/crdt/object.hpp"
#include "meld/proto/messages.hpp"

#include <filesystem>
#include <fstream>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace meld::ledger {

using crypto::Digest;

struct Block {
    std::uint64_t height = 0;
    proto::Transaction tx;
    Bytes tx_bytes; // canonical transaction bytes, the hashing input
    Digest prev_hash{};
    Digest block_hash{};
    proto::Verdict validity = proto::Verdict::Invalid;

    static Digest compute_hash(std::uint64_t height, ByteSpan tx_bytes, const Digest& prev,
                               proto::Verdict validity);
    void encode(Writer& w) const;
    static Block decode(Reader& r);
};

struct DuplicateTransaction : std::runtime_error {
    explicit DuplicateTransaction(const std::string& what) : std::runtime_error(what) {}
};

struct LedgerConfig {
    std::optional<std::filesystem::path> dir; // durable when set
    std::size_t cache_capacity = 0;           // 0 = unbounded
};

// Per-application, per-organization ledger: an append-only hash-chain log,
// an operation store keyed by object, and a materialized object cache.
// Appends are serialized; cache updates take a per-object lock.
class Ledger {
public:
    explicit Ledger(LedgerConfig cfg = {});

    const Block& append_block(const proto::Transaction& tx, proto::Verdict validity);

    bool verify_chain() const { return !first_invalid_height().has_value(); }
    // Height of the first block whose hash or linkage fails to recompute.
    std::optional<std::uint64_t> first_invalid_height() const;

    // Serves from the cache; a miss rebuilds the object from the operation
    // store (never by log replay). Reflects every locally committed write.
    crdt::ValueView read_object(const std::string& object_id, const crdt::OperationPath& path);

    bool contains_tx(const Digest& tx_id) const;
    std::uint64_t height() const { return log_.size(); }
    const std::vector<Block>& log() const { return log_; }
    std::vector<Block>& mutable_log() { return log_; } // fault-injection tests

    // Committed-valid transactions in local commit order (the gossip feed).
    std::uint64_t valid_count() const { return valid_seq_.size(); }
    const proto::Transaction& valid_at(std::uint64_t seq) const; // seq in [0, valid_count)
    std::vector<Digest> committed_valid_ids() const;

    std::vector<std::string> object_ids() const;
    Digest state_digest() const;
    Bytes object_state(const std::string& object_id) const;          // replayed from the op store
    std::optional<Bytes> cached_state(const std::string& object_id) const;

    std::size_t cache_size() const { return cache_.size(); }
    void evict(const std::string& object_id); // eviction-equivalence tests

private:
    struct CacheEntry {
        crdt::CrdtObject object;
        std::list<std::string>::iterator lru_pos;
    };

    crdt::CrdtObject rebuild(const std::string& object_id) const;
    crdt::CrdtObject& materialize(const std::string& object_id);
    void touch(const std::string& object_id, CacheEntry& entry);
    void apply_write_set(const proto::Transaction& tx);
    void persist_block(const Block& block);
    void persist_ops(const proto::Transaction& tx);
    void load_from_dir();
    std::mutex& object_mutex(const std::string& object_id);

    LedgerConfig cfg_;
    std::vector<Block> log_;
    std::map<Digest, std::size_t> tx_index_; // tx id -> block height
    std::vector<std::size_t> valid_seq_;     // commit order of valid blocks

    // object id -> committed operations in commit order
    std::map<std::string, std::vector<crdt::Operation>> op_store_;

    std::map<std::string, CacheEntry> cache_;
    std::list<std::string> lru_;

    mutable std::mutex append_mu_;
    mutable std::mutex cache_mu_;
    std::map<std::string, std::unique_ptr<std::mutex>> object_mu_;

    std::ofstream log_out_;
    std::ofstream ops_out_;
};

} // namespace meld::ledger
