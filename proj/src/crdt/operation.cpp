#include "meld/crdt/operation.hpp"

namespace meld::crdt {

std::string OperationPath::joined() const {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) out += '/';
        out += segments[i];
    }
    return out;
}

const char* to_string(CrdtKind k) {
    switch (k) {
    case CrdtKind::GCounter: return "gcounter";
    case CrdtKind::CrdtMap: return "map";
    case CrdtKind::MVRegister: return "mvregister";
    }
    return "?";
}

namespace {

constexpr std::uint8_t kValueNull = 0;
constexpr std::uint8_t kValueInt = 1;
constexpr std::uint8_t kValueBytes = 2;

void encode_value(Writer& w, const OpValue& v) {
    if (!v.has_value()) {
        w.u8(kValueNull);
    } else if (std::holds_alternative<std::int64_t>(*v)) {
        w.u8(kValueInt);
        w.i64(std::get<std::int64_t>(*v));
    } else {
        w.u8(kValueBytes);
        w.bytes(std::get<Bytes>(*v));
    }
}

OpValue decode_value(Reader& r) {
    switch (r.u8()) {
    case kValueNull: return std::nullopt;
    case kValueInt: return Scalar{r.i64()};
    case kValueBytes: return Scalar{r.bytes()};
    default: throw CodecError("bad value tag");
    }
}

} // namespace

void Operation::encode(Writer& w) const {
    w.str(object_id);
    w.str(op_id.client_id);
    w.u64(op_id.clock);
    w.u32(static_cast<std::uint32_t>(path.segments.size()));
    for (const auto& seg : path.segments)
        w.str(seg);
    w.u8(static_cast<std::uint8_t>(value_type));
    encode_value(w, value);
}

Operation Operation::decode(Reader& r) {
    Operation op;
    op.object_id = r.str();
    op.op_id.client_id = r.str();
    op.op_id.clock = r.u64();
    auto nsegs = r.u32();
    op.path.segments.reserve(nsegs);
    for (std::uint32_t i = 0; i < nsegs; ++i)
        op.path.segments.push_back(r.str());
    auto kind = r.u8();
    if (kind < 1 || kind > 3)
        throw CodecError("bad crdt kind");
    op.value_type = static_cast<CrdtKind>(kind);
    op.value = decode_value(r);
    return op;
}

Bytes Operation::encoded() const {
    Writer w;
    encode(w);
    return w.take();
}

Bytes encode_write_set(const WriteSet& ops) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(ops.size()));
    for (const auto& op : ops)
        op.encode(w);
    return w.take();
}

WriteSet decode_write_set(Reader& r) {
    auto n = r.u32();
    WriteSet ops;
    ops.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        ops.push_back(Operation::decode(r));
    return ops;
}

Operation add_value(std::string object_id, OperationId id, OperationPath counter_path,
                    std::int64_t value) {
    Operation op;
    op.object_id = std::move(object_id);
    op.op_id = std::move(id);
    op.path = std::move(counter_path);
    op.value = Scalar{value};
    op.value_type = CrdtKind::GCounter;
    return op;
}

Operation insert_value(std::string object_id, OperationId id, OperationPath map_path,
                       std::string key, std::optional<Bytes> value) {
    Operation op;
    op.object_id = std::move(object_id);
    op.op_id = std::move(id);
    op.path = std::move(map_path);
    op.path.segments.push_back(std::move(key));
    if (value)
        op.value = Scalar{std::move(*value)};
    op.value_type = CrdtKind::CrdtMap;
    return op;
}

Operation assign_value(std::string object_id, OperationId id, OperationPath register_path,
                       std::optional<Bytes> value) {
    Operation op;
    op.object_id = std::move(object_id);
    op.op_id = std::move(id);
    op.path = std::move(register_path);
    if (value)
        op.value = Scalar{std::move(*value)};
    op.value_type = CrdtKind::MVRegister;
    return op;
}

} // namespace meld::crdt
