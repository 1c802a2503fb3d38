#pragma once

#include "meld/crdt/operation.hpp"

#include <map>
#include <memory>
#include <span>
#include <optional>

namespace meld::crdt {

// Read-side view of a location. Not-found is a value, never an error.
struct ValueView {
    enum class Kind { NotFound, Counter, Values, Map };

    Kind kind = Kind::NotFound;
    std::int64_t counter = 0;
    std::vector<Bytes> values;                // register survivors, canonical order
    std::map<std::string, ValueView> entries; // map subtree

    bool found() const { return kind != Kind::NotFound; }

    static ValueView not_found() { return {}; }
    static ValueView of_counter(std::int64_t total);
    static ValueView of_values(std::vector<Bytes> vs);
};

// Set of clock values compressed into sorted closed intervals. Clocks a
// client applies at one location are usually contiguous, so membership and
// insert stay O(log intervals) with a handful of intervals.
class ClockIntervals {
public:
    bool contains(LamportClock clock) const {
        auto it = intervals_.upper_bound(clock);
        if (it == intervals_.begin())
            return false;
        --it;
        return clock <= it->second;
    }

    void insert(LamportClock clock) {
        if (contains(clock))
            return;
        LamportClock start = clock, end = clock;
        auto next = intervals_.find(clock + 1);
        if (next != intervals_.end()) {
            end = next->second;
            intervals_.erase(next);
        }
        if (clock > 0) {
            auto prev = intervals_.upper_bound(clock);
            if (prev != intervals_.begin()) {
                --prev;
                if (prev->second + 1 == clock) {
                    start = prev->first;
                    intervals_.erase(prev);
                }
            }
        }
        intervals_[start] = end;
    }

    LamportClock max_clock() const {
        return intervals_.empty() ? 0 : intervals_.rbegin()->second;
    }

    const std::map<LamportClock, LamportClock>& intervals() const { return intervals_; }

private:
    std::map<LamportClock, LamportClock> intervals_; // start -> end, disjoint
};

// Every operation id ever applied at one location (the idempotence guard),
// held per client as compressed clock intervals. Never pruned: garbage
// collection would need coordination.
struct AppliedClocks {
    std::map<std::string, ClockIntervals> by_client;

    bool contains(const OperationId& id) const {
        auto it = by_client.find(id.client_id);
        return it != by_client.end() && it->second.contains(id.clock);
    }
    void insert(const OperationId& id) { by_client[id.client_id].insert(id.clock); }
    bool dominates(const OperationId& id) const {
        auto it = by_client.find(id.client_id);
        return it != by_client.end() && it->second.max_clock() > id.clock;
    }
};

// Latest write a single client has made at one location. A missing value is
// a tombstone; tombstones are kept forever since pruning them would need
// coordination.
struct LatestWrite {
    LamportClock clock = 0;
    std::optional<Bytes> value;
};

// Assign/insert state at one location: the newest write per client plus the
// id of every operation ever applied here (the idempotence guard). Writes of
// one client are totally ordered by clock; writes of different clients are
// always concurrent, so one survivor per client can remain.
struct RegisterState {
    std::map<std::string, LatestWrite> latest; // client id -> newest write
    AppliedClocks applied;

    void apply(const OperationId& id, std::optional<Bytes> value);
    std::vector<std::pair<OperationId, Bytes>> survivors() const; // sorted (client, clock)
    bool has_survivor() const;
};

class CrdtNode {
public:
    explicit CrdtNode(CrdtKind kind) : kind_(kind) {}

    CrdtKind kind() const { return kind_; }

    // GCounter
    std::int64_t counter_total = 0;
    AppliedClocks counter_applied;

    // MVRegister
    RegisterState reg;

    // CrdtMap: nested CRDTs by key, plus scalar entries written through
    // InsertValue. A key holds either a nested node or a scalar slot.
    std::map<std::string, CrdtNode> children;
    std::map<std::string, RegisterState> slots;

    ValueView view() const;
    void encode(Writer& w) const;

private:
    CrdtKind kind_;
};

struct CrdtObject {
    std::string object_id;
    std::optional<CrdtNode> root; // kind fixed by the first creating operation
};

enum class ApplyPolicy : std::uint8_t {
    Strict,      // throw on the first malformed/mismatched operation
    SkipInvalid, // skip bad operations deterministically (commit path)
};

// Applies operations in order with built-in conflict resolution: missing
// path nodes are created, the location is resolved, the change applied, and
// the operation id recorded at the location. Re-applying an already-applied
// operation is a no-op. Returns the number of operations applied (including
// idempotent no-ops), which under SkipInvalid may be less than ops.size().
std::size_t apply_operations(CrdtObject& obj, std::span<const Operation> ops,
                             ApplyPolicy policy = ApplyPolicy::Strict);

// Conflict resolution for one operation addressing exactly this node.
void resolve_conflict(CrdtNode& existing, const Operation& op);

ValueView read(const CrdtObject& obj, const OperationPath& path);

// Canonical state serialization: deterministic byte-exact image of the
// object, identical for every operation order that converges to this state.
Bytes serialize_state(const CrdtObject& obj);
void encode_state(Writer& w, const CrdtObject& obj);

std::string conflict_key(const std::string& original_key, const OperationId& id);

} // namespace meld::crdt
