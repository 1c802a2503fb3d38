#pragma once

#include "meld/bytes.hpp"
#include "meld/codec.hpp"

#include <cstdint>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace meld::crdt {

// Per-client logical clock. Clocks of different clients are never comparable;
// ordering is only inferred between operations of the same client.
using LamportClock = std::uint64_t;

struct OperationId {
    std::string client_id;
    LamportClock clock = 0;

    auto operator<=>(const OperationId&) const = default;
};

// Map keys from the object root down to the modification location. An empty
// path addresses the object root itself.
struct OperationPath {
    std::vector<std::string> segments;

    OperationPath() = default;
    OperationPath(std::initializer_list<std::string> segs) : segments(segs) {}
    explicit OperationPath(std::vector<std::string> segs) : segments(std::move(segs)) {}

    bool empty() const { return segments.empty(); }
    std::size_t size() const { return segments.size(); }
    const std::string& back() const { return segments.back(); }

    std::string joined() const;

    auto operator<=>(const OperationPath&) const = default;
};

enum class CrdtKind : std::uint8_t {
    GCounter = 1,
    CrdtMap = 2,
    MVRegister = 3,
};

const char* to_string(CrdtKind k);

// Counter increments are 64-bit integers; register and map payloads are
// opaque byte strings. A missing value is a deletion (map/register only).
using Scalar = std::variant<std::int64_t, Bytes>;
using OpValue = std::optional<Scalar>;

struct Operation {
    std::string object_id;
    OperationId op_id;
    OperationPath path;
    OpValue value;
    CrdtKind value_type = CrdtKind::GCounter;

    const LamportClock& clock() const { return op_id.clock; }

    void encode(Writer& w) const;
    static Operation decode(Reader& r);
    Bytes encoded() const;
};

using WriteSet = std::vector<Operation>;

Bytes encode_write_set(const WriteSet& ops);
WriteSet decode_write_set(Reader& r);

// Table-style constructors for the three modification APIs.
Operation add_value(std::string object_id, OperationId id, OperationPath counter_path,
                    std::int64_t value);
Operation insert_value(std::string object_id, OperationId id, OperationPath map_path,
                       std::string key, std::optional<Bytes> value);
Operation assign_value(std::string object_id, OperationId id, OperationPath register_path,
                       std::optional<Bytes> value);

struct TypeMismatch : std::runtime_error {
    explicit TypeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct MalformedOperation : std::runtime_error {
    explicit MalformedOperation(const std::string& what) : std::runtime_error(what) {}
};

} // namespace meld::crdt
