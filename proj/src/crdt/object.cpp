#include "meld/crdt/object.hpp"

#include <algorithm>

namespace meld::crdt {

ValueView ValueView::of_counter(std::int64_t total) {
    ValueView v;
    v.kind = Kind::Counter;
    v.counter = total;
    return v;
}

ValueView ValueView::of_values(std::vector<Bytes> vs) {
    ValueView v;
    v.kind = Kind::Values;
    v.values = std::move(vs);
    return v;
}

void RegisterState::apply(const OperationId& id, std::optional<Bytes> value) {
    if (applied.contains(id))
        return;
    applied.insert(id);
    auto it = latest.find(id.client_id);
    if (it == latest.end()) {
        latest.emplace(id.client_id, LatestWrite{id.clock, std::move(value)});
        return;
    }
    // Same-client clocks are totally ordered: the later clock wins, a stale
    // arrival only leaves its id behind. Equal clocks mean a duplicate id,
    // already filtered above.
    if (id.clock > it->second.clock)
        it->second = LatestWrite{id.clock, std::move(value)};
}

std::vector<std::pair<OperationId, Bytes>> RegisterState::survivors() const {
    std::vector<std::pair<OperationId, Bytes>> out;
    for (const auto& [client, write] : latest) {
        if (write.value)
            out.emplace_back(OperationId{client, write.clock}, *write.value);
    }
    return out; // latest is ordered by client id; one entry per client
}

bool RegisterState::has_survivor() const {
    return std::any_of(latest.begin(), latest.end(),
                       [](const auto& kv) { return kv.second.value.has_value(); });
}

std::string conflict_key(const std::string& original_key, const OperationId& id) {
    return original_key + "#" + id.client_id + ":" + std::to_string(id.clock);
}

namespace {

ValueView slot_view(const std::string& key, const RegisterState& slot) {
    auto survivors = slot.survivors();
    if (survivors.size() == 1)
        return ValueView::of_values({survivors.front().second});
    // Concurrent inserts under one key: a fresh map holding every conflicting
    // value under a derived key.
    ValueView conflict;
    conflict.kind = ValueView::Kind::Map;
    for (auto& [id, value] : survivors)
        conflict.entries.emplace(conflict_key(key, id), ValueView::of_values({value}));
    return conflict;
}

const std::int64_t* as_int(const OpValue& v) {
    if (v && std::holds_alternative<std::int64_t>(*v))
        return &std::get<std::int64_t>(*v);
    return nullptr;
}

std::optional<Bytes> as_payload(const Operation& op) {
    if (!op.value)
        return std::nullopt;
    if (!std::holds_alternative<Bytes>(*op.value))
        throw MalformedOperation("operation on " + op.object_id +
                                 " requires a byte-string value");
    return std::get<Bytes>(*op.value);
}

void check_shape(const Operation& op) {
    switch (op.value_type) {
    case CrdtKind::GCounter: {
        const auto* v = as_int(op.value);
        if (v == nullptr || *v <= 0)
            throw MalformedOperation("counter increment must be a positive integer");
        return;
    }
    case CrdtKind::CrdtMap:
        if (op.path.empty())
            throw MalformedOperation("map insert needs a key path");
        [[fallthrough]];
    case CrdtKind::MVRegister:
        if (op.value && !std::holds_alternative<Bytes>(*op.value))
            throw MalformedOperation("map/register value must be bytes or null");
        return;
    }
    throw MalformedOperation("unknown operation type");
}

void encode_applied(Writer& w, const AppliedClocks& applied) {
    w.u32(static_cast<std::uint32_t>(applied.by_client.size()));
    for (const auto& [client, clocks] : applied.by_client) {
        w.str(client);
        w.u32(static_cast<std::uint32_t>(clocks.intervals().size()));
        for (const auto& [start, end] : clocks.intervals()) {
            w.u64(start);
            w.u64(end);
        }
    }
}

void encode_register(Writer& w, const RegisterState& reg) {
    w.u32(static_cast<std::uint32_t>(reg.latest.size()));
    for (const auto& [client, write] : reg.latest) {
        w.str(client);
        w.u64(write.clock);
        w.u8(write.value ? 1 : 0);
        if (write.value)
            w.bytes(*write.value);
    }
    encode_applied(w, reg.applied);
}

} // namespace

ValueView CrdtNode::view() const {
    switch (kind()) {
    case CrdtKind::GCounter:
        return ValueView::of_counter(counter_total);
    case CrdtKind::MVRegister: {
        std::vector<Bytes> values;
        for (auto& [id, value] : reg.survivors())
            values.push_back(value);
        return ValueView::of_values(std::move(values));
    }
    case CrdtKind::CrdtMap: {
        ValueView v;
        v.kind = ValueView::Kind::Map;
        for (const auto& [key, child] : children)
            v.entries.emplace(key, child.view());
        for (const auto& [key, slot] : slots) {
            if (slot.has_survivor())
                v.entries.emplace(key, slot_view(key, slot));
        }
        return v;
    }
    }
    return ValueView::not_found();
}

void CrdtNode::encode(Writer& w) const {
    w.u8(static_cast<std::uint8_t>(kind()));
    switch (kind()) {
    case CrdtKind::GCounter:
        w.i64(counter_total);
        encode_applied(w, counter_applied);
        break;
    case CrdtKind::MVRegister:
        encode_register(w, reg);
        break;
    case CrdtKind::CrdtMap:
        w.u32(static_cast<std::uint32_t>(children.size()));
        for (const auto& [key, child] : children) {
            w.str(key);
            child.encode(w);
        }
        w.u32(static_cast<std::uint32_t>(slots.size()));
        for (const auto& [key, slot] : slots) {
            w.str(key);
            encode_register(w, slot);
        }
        break;
    }
}

void resolve_conflict(CrdtNode& existing, const Operation& op) {
    check_shape(op);
    CrdtKind target = op.value_type;
    if (existing.kind() != target)
        throw TypeMismatch("operation kind " + std::string(to_string(target)) +
                           " does not match node kind " + to_string(existing.kind()) +
                           " at /" + op.path.joined());

    switch (target) {
    case CrdtKind::GCounter:
        if (existing.counter_applied.contains(op.op_id))
            return;
        existing.counter_applied.insert(op.op_id);
        existing.counter_total += *as_int(op.value);
        return;
    case CrdtKind::MVRegister:
        existing.reg.apply(op.op_id, as_payload(op));
        return;
    case CrdtKind::CrdtMap: {
        const std::string& key = op.path.back();
        if (existing.children.contains(key))
            throw TypeMismatch("map key '" + key + "' holds a nested object");
        existing.slots[key].apply(op.op_id, as_payload(op));
        return;
    }
    }
}

namespace {

void apply_one(CrdtObject& obj, const Operation& op) {
    check_shape(op);

    // The modification location: map inserts address the parent map, counter
    // and register operations address the node at the full path.
    const auto& segments = op.path.segments;
    std::size_t depth =
        op.value_type == CrdtKind::CrdtMap ? segments.size() - 1 : segments.size();
    CrdtKind final_kind =
        op.value_type == CrdtKind::CrdtMap ? CrdtKind::CrdtMap : op.value_type;

    if (!obj.root)
        obj.root.emplace(depth == 0 ? final_kind : CrdtKind::CrdtMap);

    CrdtNode* node = &*obj.root;
    for (std::size_t i = 0; i < depth; ++i) {
        if (node->kind() != CrdtKind::CrdtMap)
            throw TypeMismatch("cannot traverse through " +
                               std::string(to_string(node->kind())) + " at /" +
                               op.path.joined());
        const std::string& seg = segments[i];
        if (node->slots.contains(seg))
            throw TypeMismatch("map key '" + seg + "' holds a value, not a nested object");
        CrdtKind child_kind = (i + 1 == depth) ? final_kind : CrdtKind::CrdtMap;
        auto it = node->children.find(seg);
        if (it == node->children.end())
            it = node->children.emplace(seg, CrdtNode(child_kind)).first;
        node = &it->second;
    }
    resolve_conflict(*node, op);
}

} // namespace

std::size_t apply_operations(CrdtObject& obj, std::span<const Operation> ops,
                             ApplyPolicy policy) {
    std::size_t applied = 0;
    for (const auto& op : ops) {
        if (policy == ApplyPolicy::Strict) {
            apply_one(obj, op);
            ++applied;
        } else {
            try {
                apply_one(obj, op);
                ++applied;
            } catch (const TypeMismatch&) {
            } catch (const MalformedOperation&) {
            }
        }
    }
    return applied;
}

ValueView read(const CrdtObject& obj, const OperationPath& path) {
    if (!obj.root)
        return ValueView::not_found();
    const CrdtNode* node = &*obj.root;
    for (std::size_t i = 0; i < path.segments.size(); ++i) {
        if (node->kind() != CrdtKind::CrdtMap)
            return ValueView::not_found();
        const std::string& seg = path.segments[i];
        if (auto slot = node->slots.find(seg); slot != node->slots.end()) {
            // A scalar entry: only a full match resolves, there is nothing
            // below it to descend into.
            if (i + 1 == path.segments.size() && slot->second.has_survivor())
                return slot_view(seg, slot->second);
            return ValueView::not_found();
        }
        auto child = node->children.find(seg);
        if (child == node->children.end())
            return ValueView::not_found();
        node = &child->second;
    }
    return node->view();
}

void encode_state(Writer& w, const CrdtObject& obj) {
    w.str(obj.object_id);
    w.u8(obj.root ? 1 : 0);
    if (obj.root)
        obj.root->encode(w);
}

Bytes serialize_state(const CrdtObject& obj) {
    Writer w;
    encode_state(w, obj);
    return w.take();
}

} // namespace meld::crdt
