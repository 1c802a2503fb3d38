#include "meld/ledger/ledger.hpp"

#include <algorithm>

namespace meld::ledger {

Digest Block::compute_hash(std::uint64_t height, ByteSpan tx_bytes, const Digest& prev,
                           proto::Verdict validity) {
    Writer w;
    w.u64(height);
    w.raw(tx_bytes);
    w.raw(crypto::digest_span(prev));
    w.u8(static_cast<std::uint8_t>(validity));
    return crypto::sha256(w.data());
}

void Block::encode(Writer& w) const {
    w.u64(height);
    w.bytes(tx_bytes);
    w.raw(crypto::digest_span(prev_hash));
    w.raw(crypto::digest_span(block_hash));
    w.u8(static_cast<std::uint8_t>(validity));
}

Block Block::decode(Reader& r) {
    Block b;
    b.height = r.u64();
    b.tx_bytes = r.bytes();
    r.raw(b.prev_hash.data(), b.prev_hash.size());
    r.raw(b.block_hash.data(), b.block_hash.size());
    b.validity = static_cast<proto::Verdict>(r.u8());
    Reader tx_reader(b.tx_bytes);
    b.tx = proto::Transaction::decode(tx_reader);
    return b;
}

Ledger::Ledger(LedgerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.dir) {
        std::filesystem::create_directories(*cfg_.dir / "ops");
        load_from_dir();
        log_out_.open(*cfg_.dir / "log.bin", std::ios::binary | std::ios::app);
        ops_out_.open(*cfg_.dir / "ops" / "store.bin", std::ios::binary | std::ios::app);
    }
}

void Ledger::load_from_dir() {
    auto read_all = [](const std::filesystem::path& p) {
        Bytes data;
        std::ifstream in(p, std::ios::binary);
        if (!in)
            return data;
        data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        return data;
    };

    Bytes log_data = read_all(*cfg_.dir / "log.bin");
    Reader lr(log_data);
    while (!lr.done()) {
        Bytes record = lr.bytes();
        Reader br(record);
        Block b = Block::decode(br);
        tx_index_[b.tx.tx_id] = log_.size();
        if (b.validity == proto::Verdict::Valid)
            valid_seq_.push_back(log_.size());
        log_.push_back(std::move(b));
    }

    Bytes ops_data = read_all(*cfg_.dir / "ops" / "store.bin");
    Reader orr(ops_data);
    while (!orr.done()) {
        std::string object_id = orr.str();
        op_store_[object_id].push_back(crdt::Operation::decode(orr));
    }
}

void Ledger::persist_block(const Block& block) {
    if (!log_out_.is_open())
        return;
    Writer w;
    Writer inner;
    block.encode(inner);
    w.bytes(inner.data());
    log_out_.write(reinterpret_cast<const char*>(w.data().data()),
                   static_cast<std::streamsize>(w.data().size()));
    log_out_.flush();
}

void Ledger::persist_ops(const proto::Transaction& tx) {
    if (!ops_out_.is_open())
        return;
    Writer w;
    for (const auto& op : tx.write_set) {
        w.str(op.object_id);
        op.encode(w);
    }
    ops_out_.write(reinterpret_cast<const char*>(w.data().data()),
                   static_cast<std::streamsize>(w.data().size()));
    ops_out_.flush();
}

const Block& Ledger::append_block(const proto::Transaction& tx, proto::Verdict validity) {
    std::lock_guard lock(append_mu_);
    if (tx_index_.contains(tx.tx_id))
        throw DuplicateTransaction("transaction already committed");

    Block block;
    block.height = log_.size();
    block.tx = tx;
    block.tx_bytes = tx.encoded();
    block.prev_hash = log_.empty() ? crypto::kZeroDigest : log_.back().block_hash;
    block.validity = validity;
    block.block_hash = Block::compute_hash(block.height, block.tx_bytes, block.prev_hash, validity);

    tx_index_[tx.tx_id] = log_.size();
    if (validity == proto::Verdict::Valid)
        valid_seq_.push_back(log_.size());
    log_.push_back(std::move(block));
    persist_block(log_.back());

    if (validity == proto::Verdict::Valid) {
        apply_write_set(tx);
        persist_ops(tx);
    }
    return log_.back();
}

void Ledger::apply_write_set(const proto::Transaction& tx) {
    // Group by object so each object is locked once per transaction.
    std::map<std::string, crdt::WriteSet> by_object;
    for (const auto& op : tx.write_set)
        by_object[op.object_id].push_back(op);

    for (auto& [object_id, ops] : by_object) {
        std::lock_guard object_lock(object_mutex(object_id));
        auto& stored = op_store_[object_id];
        stored.insert(stored.end(), ops.begin(), ops.end());

        std::lock_guard cache_lock(cache_mu_);
        auto it = cache_.find(object_id);
        if (it != cache_.end()) {
            // A committed write-set may carry operations only q Byzantine
            // endorsers would sign; skipping them deterministically keeps
            // every organization's state identical.
            crdt::apply_operations(it->second.object, ops, crdt::ApplyPolicy::SkipInvalid);
            touch(object_id, it->second);
        }
    }
}

std::mutex& Ledger::object_mutex(const std::string& object_id) {
    std::lock_guard lock(cache_mu_);
    auto& slot = object_mu_[object_id];
    if (!slot)
        slot = std::make_unique<std::mutex>();
    return *slot;
}

crdt::CrdtObject Ledger::rebuild(const std::string& object_id) const {
    crdt::CrdtObject obj{object_id, std::nullopt};
    auto it = op_store_.find(object_id);
    if (it != op_store_.end())
        crdt::apply_operations(obj, it->second, crdt::ApplyPolicy::SkipInvalid);
    return obj;
}

void Ledger::touch(const std::string& object_id, CacheEntry& entry) {
    lru_.erase(entry.lru_pos);
    lru_.push_front(object_id);
    entry.lru_pos = lru_.begin();
}

crdt::CrdtObject& Ledger::materialize(const std::string& object_id) {
    auto it = cache_.find(object_id);
    if (it == cache_.end()) {
        if (cfg_.cache_capacity > 0 && cache_.size() >= cfg_.cache_capacity) {
            const std::string& victim = lru_.back();
            cache_.erase(victim);
            lru_.pop_back();
        }
        lru_.push_front(object_id);
        it = cache_.emplace(object_id, CacheEntry{rebuild(object_id), lru_.begin()}).first;
    } else {
        touch(object_id, it->second);
    }
    return it->second.object;
}

crdt::ValueView Ledger::read_object(const std::string& object_id,
                                    const crdt::OperationPath& path) {
    std::lock_guard object_lock(object_mutex(object_id));
    std::lock_guard cache_lock(cache_mu_);
    if (!op_store_.contains(object_id))
        return crdt::ValueView::not_found();
    return crdt::read(materialize(object_id), path);
}

bool Ledger::contains_tx(const Digest& tx_id) const {
    std::lock_guard lock(append_mu_);
    return tx_index_.contains(tx_id);
}

const proto::Transaction& Ledger::valid_at(std::uint64_t seq) const {
    return log_[valid_seq_.at(seq)].tx;
}

std::vector<Digest> Ledger::committed_valid_ids() const {
    std::vector<Digest> out;
    out.reserve(valid_seq_.size());
    for (auto idx : valid_seq_)
        out.push_back(log_[idx].tx.tx_id);
    return out;
}

std::optional<std::uint64_t> Ledger::first_invalid_height() const {
    Digest prev = crypto::kZeroDigest;
    for (std::size_t h = 0; h < log_.size(); ++h) {
        const Block& b = log_[h];
        if (b.height != h)
            return h;
        if (b.prev_hash != prev)
            return h;
        if (Block::compute_hash(b.height, b.tx_bytes, b.prev_hash, b.validity) != b.block_hash)
            return h;
        prev = b.block_hash;
    }
    return std::nullopt;
}

std::vector<std::string> Ledger::object_ids() const {
    std::vector<std::string> out;
    out.reserve(op_store_.size());
    for (const auto& [id, ops] : op_store_)
        out.push_back(id);
    return out;
}

Bytes Ledger::object_state(const std::string& object_id) const {
    return crdt::serialize_state(rebuild(object_id));
}

Digest Ledger::state_digest() const {
    // Digest over the replayed store: cache residency must never change the
    // digest (cache/replay equivalence).
    Writer w;
    w.u32(static_cast<std::uint32_t>(op_store_.size()));
    for (const auto& [object_id, ops] : op_store_)
        w.raw(crdt::serialize_state(rebuild(object_id)));
    return crypto::sha256(w.data());
}

std::optional<Bytes> Ledger::cached_state(const std::string& object_id) const {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(object_id);
    if (it == cache_.end())
        return std::nullopt;
    return crdt::serialize_state(it->second.object);
}

void Ledger::evict(const std::string& object_id) {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(object_id);
    if (it == cache_.end())
        return;
    lru_.erase(it->second.lru_pos);
    cache_.erase(it);
}

} // namespace meld::ledger
