#include <doctest.h>

#include "meld/crdt/object.hpp"
#include "meld/crypto/identity.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace meld;
using namespace meld::crdt;

namespace {

OperationId id(const std::string& client, LamportClock clock) { return {client, clock}; }

Operation add(const std::string& obj, const std::string& client, LamportClock clock,
              std::int64_t v, OperationPath path = {}) {
    return add_value(obj, id(client, clock), std::move(path), v);
}

Operation assign(const std::string& obj, const std::string& client, LamportClock clock,
                 const std::string& v, OperationPath path = {}) {
    return assign_value(obj, id(client, clock), std::move(path), to_bytes(v));
}

Operation erase_reg(const std::string& obj, const std::string& client, LamportClock clock,
                    OperationPath path = {}) {
    return assign_value(obj, id(client, clock), std::move(path), std::nullopt);
}

Operation insert(const std::string& obj, const std::string& client, LamportClock clock,
                 const std::string& key, const std::string& v, OperationPath map_path = {}) {
    return insert_value(obj, id(client, clock), std::move(map_path), key, to_bytes(v));
}

CrdtObject apply_all(const WriteSet& ops, ApplyPolicy policy = ApplyPolicy::Strict) {
    CrdtObject obj{ops.empty() ? "obj" : ops.front().object_id, std::nullopt};
    apply_operations(obj, ops, policy);
    return obj;
}

std::vector<std::string> view_strings(const ValueView& v) {
    std::vector<std::string> out;
    for (const auto& b : v.values)
        out.push_back(to_string(b));
    return out;
}

// Independent survivor oracle for register-style locations: an assigned value
// survives iff no applied operation of the same client carries a higher
// clock. Works over the raw operation list, not the engine state.
std::multiset<std::string> oracle_survivors(const WriteSet& ops) {
    std::map<std::string, LamportClock> max_clock;
    std::set<OperationId> seen;
    std::vector<Operation> distinct;
    for (const auto& op : ops) {
        if (!seen.insert(op.op_id).second)
            continue;
        distinct.push_back(op);
        auto it = max_clock.find(op.op_id.client_id);
        if (it == max_clock.end() || op.op_id.clock > it->second)
            max_clock[op.op_id.client_id] = op.op_id.clock;
    }
    std::multiset<std::string> out;
    for (const auto& op : distinct) {
        if (op.value && op.op_id.clock == max_clock[op.op_id.client_id])
            out.insert(to_string(std::get<Bytes>(*op.value)));
    }
    return out;
}

} // namespace

TEST_CASE("root counter sums increments") {
    auto obj = apply_all({add("acct", "c1", 1, 50), add("acct", "c1", 2, 60)});
    auto v = read(obj, {});
    CHECK(v.kind == ValueView::Kind::Counter);
    CHECK(v.counter == 110);
}

TEST_CASE("counter increments from different clients commute") {
    WriteSet ops = {add("acct", "c1", 1, 50), add("acct", "c2", 1, 60)};
    auto forward = apply_all(ops);
    std::reverse(ops.begin(), ops.end());
    auto backward = apply_all(ops);
    CHECK(read(forward, {}).counter == 110);
    CHECK(serialize_state(forward) == serialize_state(backward));
}

TEST_CASE("non-positive counter increment is malformed") {
    CrdtObject obj{"acct", std::nullopt};
    WriteSet good = {add("acct", "c1", 1, 100)};
    apply_operations(obj, good);

    WriteSet bad = {add("acct", "c1", 2, -5)};
    CHECK_THROWS_AS(apply_operations(obj, bad), MalformedOperation);
    WriteSet zero = {add("acct", "c1", 3, 0)};
    CHECK_THROWS_AS(apply_operations(obj, zero), MalformedOperation);
    CHECK(read(obj, {}).counter == 100);

    // Null value is not legal for counters either.
    Operation null_add = add("acct", "c1", 4, 1);
    null_add.value = std::nullopt;
    WriteSet nulls = {null_add};
    CHECK_THROWS_AS(apply_operations(obj, nulls), MalformedOperation);
}

TEST_CASE("register ordered by the same client's clock keeps the later value") {
    auto obj = apply_all({assign("reg", "c1", 1, "x"), assign("reg", "c1", 2, "y")});
    CHECK(view_strings(read(obj, {})) == std::vector<std::string>{"y"});

    auto reversed = apply_all({assign("reg", "c1", 2, "y"), assign("reg", "c1", 1, "x")});
    CHECK(serialize_state(obj) == serialize_state(reversed));
}

TEST_CASE("register stores all concurrent values") {
    auto obj = apply_all({assign("reg", "c1", 1, "x"), assign("reg", "c2", 1, "y")});
    CHECK(view_strings(read(obj, {})) == std::vector<std::string>{"x", "y"});
}

TEST_CASE("later same-client assign replaces only that client's survivor") {
    // Register holds {x, y} from concurrent writers; c1 wrote x at clock 1.
    auto obj = apply_all({assign("reg", "c1", 1, "x"), assign("reg", "c2", 1, "y"),
                          assign("reg", "c1", 2, "z")});
    auto got = view_strings(read(obj, {}));
    std::multiset<std::string> expected =
        oracle_survivors({assign("reg", "c1", 1, "x"), assign("reg", "c2", 1, "y"),
                          assign("reg", "c1", 2, "z")});
    CHECK(std::multiset<std::string>(got.begin(), got.end()) == expected);
    CHECK(expected == std::multiset<std::string>{"y", "z"});
}

TEST_CASE("register tombstone removes dominated values and persists") {
    SUBCASE("delete after assign") {
        auto obj = apply_all({assign("reg", "c1", 1, "x"), erase_reg("reg", "c1", 2)});
        auto v = read(obj, {});
        CHECK(v.kind == ValueView::Kind::Values);
        CHECK(v.values.empty());
    }
    SUBCASE("stale value arriving after its tombstone stays dead") {
        auto a = apply_all({assign("reg", "c1", 1, "x"), erase_reg("reg", "c1", 2)});
        auto b = apply_all({erase_reg("reg", "c1", 2), assign("reg", "c1", 1, "x")});
        CHECK(serialize_state(a) == serialize_state(b));
        CHECK(view_strings(read(b, {})).empty());
    }
    SUBCASE("concurrent assign from another client survives the tombstone") {
        auto obj = apply_all({erase_reg("reg", "c1", 5), assign("reg", "c2", 1, "kept")});
        CHECK(view_strings(read(obj, {})) == std::vector<std::string>{"kept"});
    }
}

TEST_CASE("map inserts on different keys commute") {
    auto obj = apply_all({insert("m", "c1", 1, "a", "1"), insert("m", "c2", 1, "b", "2")});
    auto v = read(obj, {});
    REQUIRE(v.kind == ValueView::Kind::Map);
    CHECK(v.entries.size() == 2);
    CHECK(view_strings(v.entries.at("a")) == std::vector<std::string>{"1"});
    CHECK(view_strings(v.entries.at("b")) == std::vector<std::string>{"2"});
}

TEST_CASE("concurrent inserts under one key build a conflict map") {
    WriteSet ops = {insert("m", "c1", 1, "k", "red"), insert("m", "c2", 1, "k", "blue")};
    auto obj = apply_all(ops);

    auto v = read(obj, {"k"});
    REQUIRE(v.kind == ValueView::Kind::Map);
    REQUIRE(v.entries.size() == 2);
    CHECK(view_strings(v.entries.at("k#c1:1")) == std::vector<std::string>{"red"});
    CHECK(view_strings(v.entries.at("k#c2:1")) == std::vector<std::string>{"blue"});

    std::reverse(ops.begin(), ops.end());
    CHECK(serialize_state(obj) == serialize_state(apply_all(ops)));
}

TEST_CASE("same-client map insert resolves by clock") {
    auto obj = apply_all({insert("m", "c1", 1, "k", "old"), insert("m", "c1", 2, "k", "new")});
    CHECK(view_strings(read(obj, {"k"})) == std::vector<std::string>{"new"});

    auto late = apply_all({insert("m", "c1", 2, "k", "new"), insert("m", "c1", 1, "k", "old")});
    CHECK(serialize_state(obj) == serialize_state(late));
}

TEST_CASE("map delete hides the key but keeps concurrent inserts") {
    SUBCASE("dominating delete hides the key") {
        auto obj = apply_all({insert("m", "c1", 1, "k", "v"),
                              insert_value("m", id("c1", 2), {}, "k", std::nullopt)});
        CHECK_FALSE(read(obj, {"k"}).found());
        CHECK(read(obj, {}).entries.empty());
    }
    SUBCASE("concurrent insert from another client wins over the delete") {
        auto obj = apply_all({insert_value("m", id("c1", 2), {}, "k", std::nullopt),
                              insert("m", "c2", 1, "k", "v")});
        CHECK(view_strings(read(obj, {"k"})) == std::vector<std::string>{"v"});
    }
}

TEST_CASE("nested paths create intermediate maps") {
    auto obj = apply_all({add("stats", "c1", 1, 3, OperationPath{"eu", "hits"}),
                          assign("stats", "c1", 2, "on", OperationPath{"eu", "flag"})});
    CHECK(read(obj, OperationPath{"eu", "hits"}).counter == 3);
    CHECK(view_strings(read(obj, OperationPath{"eu", "flag"})) ==
          std::vector<std::string>{"on"});

    auto root = read(obj, {});
    REQUIRE(root.kind == ValueView::Kind::Map);
    REQUIRE(root.entries.contains("eu"));
    CHECK(root.entries.at("eu").entries.size() == 2);
}

TEST_CASE("type mismatches are rejected") {
    SUBCASE("counter op on an existing register node") {
        CrdtObject obj{"o", std::nullopt};
        WriteSet first = {assign("o", "c1", 1, "x")};
        apply_operations(obj, first);
        WriteSet second = {add("o", "c2", 1, 5)};
        CHECK_THROWS_AS(apply_operations(obj, second), TypeMismatch);
    }
    SUBCASE("descending through a counter") {
        CrdtObject obj{"o", std::nullopt};
        WriteSet first = {add("o", "c1", 1, 5, OperationPath{"cnt"})};
        apply_operations(obj, first);
        WriteSet second = {assign("o", "c1", 2, "x", OperationPath{"cnt", "deep"})};
        CHECK_THROWS_AS(apply_operations(obj, second), TypeMismatch);
    }
    SUBCASE("descending through a scalar map entry") {
        CrdtObject obj{"o", std::nullopt};
        WriteSet first = {insert("o", "c1", 1, "k", "v")};
        apply_operations(obj, first);
        WriteSet second = {add("o", "c1", 2, 5, OperationPath{"k", "cnt"})};
        CHECK_THROWS_AS(apply_operations(obj, second), TypeMismatch);
    }
    SUBCASE("map insert at a key already holding a nested object") {
        CrdtObject obj{"o", std::nullopt};
        WriteSet first = {add("o", "c1", 1, 5, OperationPath{"k"})};
        apply_operations(obj, first);
        WriteSet second = {insert("o", "c2", 1, "k", "v")};
        CHECK_THROWS_AS(apply_operations(obj, second), TypeMismatch);
    }
    SUBCASE("skip-invalid policy applies the good operations") {
        CrdtObject obj{"o", std::nullopt};
        WriteSet mixed = {assign("o", "c1", 1, "x"), add("o", "c2", 1, 5),
                          assign("o", "c2", 2, "y")};
        CHECK(apply_operations(obj, mixed, ApplyPolicy::SkipInvalid) == 2);
        CHECK(view_strings(read(obj, {})) == std::vector<std::string>{"x", "y"});
    }
}

TEST_CASE("map insert needs a key path") {
    CrdtObject obj{"o", std::nullopt};
    Operation op = insert("o", "c1", 1, "k", "v");
    op.path.segments.clear();
    WriteSet ops = {op};
    CHECK_THROWS_AS(apply_operations(obj, ops), MalformedOperation);
}

TEST_CASE("reads cause no side effects and misses are not errors") {
    auto obj = apply_all({add("acct", "c1", 1, 50), add("acct", "c1", 2, 60)});
    auto before = serialize_state(obj);
    CHECK_FALSE(read(obj, OperationPath{"nope"}).found());
    CHECK_FALSE(read(CrdtObject{"fresh", std::nullopt}, {}).found());
    CHECK(read(obj, {}).counter == 110);
    CHECK(serialize_state(obj) == before);
}

TEST_CASE("applying the same list twice changes nothing") {
    WriteSet ops = {assign("reg", "c1", 1, "x"), assign("reg", "c2", 1, "y"),
                    assign("reg", "c1", 2, "z")};
    CrdtObject once{"reg", std::nullopt};
    apply_operations(once, ops);
    auto baseline = serialize_state(once);

    apply_operations(once, ops);
    CHECK(serialize_state(once) == baseline);

    // Any prefix re-applied is also a no-op.
    for (std::size_t n = 0; n <= ops.size(); ++n) {
        apply_operations(once, std::span<const Operation>(ops.data(), n));
        CHECK(serialize_state(once) == baseline);
    }
}

TEST_CASE("resolve_conflict addresses exactly one node") {
    CrdtNode reg(CrdtKind::MVRegister);
    resolve_conflict(reg, assign("reg", "c1", 1, "x"));
    resolve_conflict(reg, assign("reg", "c2", 1, "y"));
    CHECK(view_strings(reg.view()) == std::vector<std::string>{"x", "y"});

    CrdtNode counter(CrdtKind::GCounter);
    CHECK_THROWS_AS(resolve_conflict(counter, assign("reg", "c1", 1, "x")), TypeMismatch);
    CHECK_THROWS_AS(resolve_conflict(counter, add("c", "c1", 1, -5)), MalformedOperation);
}

// ---- generated-batch properties ------------------------------------------

namespace {

// Kind-consistent random batches: one root location per type, same-client
// clocks unique within a batch, deletions and duplicated operations included.
WriteSet make_batch(std::mt19937_64& rng, CrdtKind kind, std::size_t size) {
    static const std::vector<std::string> clients = {"c1", "c2", "c3"};
    std::map<std::string, LamportClock> next_clock;
    WriteSet ops;
    while (ops.size() < size) {
        const auto& client = clients[rng() % clients.size()];
        LamportClock clock = ++next_clock[client];
        switch (kind) {
        case CrdtKind::GCounter:
            ops.push_back(add("obj", client, clock, 1 + static_cast<std::int64_t>(rng() % 50)));
            break;
        case CrdtKind::MVRegister:
            if (rng() % 4 == 0)
                ops.push_back(erase_reg("obj", client, clock));
            else
                ops.push_back(assign("obj", client, clock, "v" + std::to_string(rng() % 5)));
            break;
        case CrdtKind::CrdtMap: {
            std::string key = rng() % 2 == 0 ? "a" : "b";
            if (rng() % 4 == 0)
                ops.push_back(insert_value("obj", id(client, clock), {}, key, std::nullopt));
            else
                ops.push_back(insert("obj", client, clock, key, "v" + std::to_string(rng() % 5)));
            break;
        }
        }
        // Occasionally duplicate an earlier operation verbatim.
        if (ops.size() < size && rng() % 5 == 0)
            ops.push_back(ops[rng() % ops.size()]);
    }
    return ops;
}

Bytes state_after(const WriteSet& ops) { return serialize_state(apply_all(ops)); }

} // namespace

TEST_CASE("every permutation of a small batch converges to identical bytes") {
    std::mt19937_64 rng(2024);
    const CrdtKind kinds[] = {CrdtKind::GCounter, CrdtKind::CrdtMap, CrdtKind::MVRegister};
    int batches = 0;
    for (int trial = 0; trial < 60; ++trial) {
        for (auto kind : kinds) {
            WriteSet batch = make_batch(rng, kind, 2 + trial % 4);
            Bytes expected = state_after(batch);

            std::vector<std::size_t> order(batch.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end());
            do {
                WriteSet permuted;
                for (auto i : order)
                    permuted.push_back(batch[i]);
                REQUIRE(state_after(permuted) == expected);
            } while (std::next_permutation(order.begin(), order.end()));
            ++batches;
        }
    }
    CHECK(batches == 180);
}

TEST_CASE("large batches converge across random shuffles") {
    std::mt19937_64 rng(77);
    for (auto kind : {CrdtKind::GCounter, CrdtKind::CrdtMap, CrdtKind::MVRegister}) {
        WriteSet batch = make_batch(rng, kind, 40);
        Bytes expected = state_after(batch);
        for (int shuffle = 0; shuffle < 100; ++shuffle) {
            std::shuffle(batch.begin(), batch.end(), rng);
            REQUIRE(state_after(batch) == expected);
        }
    }
}

TEST_CASE("counter total equals the arithmetic sum of applied increments") {
    std::mt19937_64 rng(5);
    WriteSet batch = make_batch(rng, CrdtKind::GCounter, 200);
    std::int64_t expected = 0;
    std::set<OperationId> seen;
    for (const auto& op : batch) {
        if (seen.insert(op.op_id).second)
            expected += std::get<std::int64_t>(*op.value);
    }
    std::shuffle(batch.begin(), batch.end(), rng);
    CHECK(read(apply_all(batch), {}).counter == expected);
}

TEST_CASE("register survivors never contain dominated pairs") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        WriteSet batch = make_batch(rng, CrdtKind::MVRegister, 1 + rng() % 30);
        std::shuffle(batch.begin(), batch.end(), rng);
        auto obj = apply_all(batch);

        auto got = view_strings(read(obj, {}));
        CHECK(std::multiset<std::string>(got.begin(), got.end()) == oracle_survivors(batch));

        // Dominance check straight off the node state: no applied clock of
        // the same client may exceed a survivor's clock.
        REQUIRE(obj.root.has_value());
        const auto survivors = obj.root->reg.survivors();
        for (const auto& [sid, value] : survivors)
            CHECK_FALSE(obj.root->reg.applied.dominates(sid));
    }
}

TEST_CASE("clock intervals merge, split, and answer membership") {
    ClockIntervals set;
    CHECK_FALSE(set.contains(1));
    CHECK(set.max_clock() == 0);

    // Contiguous inserts collapse into one interval.
    for (LamportClock c = 1; c <= 100; ++c)
        set.insert(c);
    CHECK(set.intervals().size() == 1);
    CHECK(set.contains(1));
    CHECK(set.contains(100));
    CHECK_FALSE(set.contains(101));
    CHECK(set.max_clock() == 100);

    // A gap opens a second interval; filling it merges back.
    set.insert(103);
    CHECK(set.intervals().size() == 2);
    set.insert(102);
    set.insert(101);
    CHECK(set.intervals().size() == 1);
    CHECK(set.max_clock() == 103);

    // Scattered inserts against a brute-force mirror.
    std::mt19937_64 rng(13);
    ClockIntervals scattered;
    std::set<LamportClock> mirror;
    for (int i = 0; i < 2000; ++i) {
        LamportClock c = rng() % 500;
        scattered.insert(c);
        mirror.insert(c);
    }
    for (LamportClock c = 0; c < 510; ++c)
        CHECK(scattered.contains(c) == mirror.contains(c));
    CHECK(scattered.max_clock() == *mirror.rbegin());
}

TEST_CASE("canonical serialization sorts survivors deterministically") {
    auto obj = apply_all({assign("reg", "c3", 1, "w3"), assign("reg", "c1", 9, "w1"),
                          assign("reg", "c2", 4, "w2")});
    CHECK(view_strings(read(obj, {})) == std::vector<std::string>{"w1", "w2", "w3"});

    auto digest_of = [](const CrdtObject& o) { return crypto::sha256(serialize_state(o)); };
    auto again = apply_all({assign("reg", "c2", 4, "w2"), assign("reg", "c3", 1, "w3"),
                            assign("reg", "c1", 9, "w1")});
    CHECK(digest_of(obj) == digest_of(again));
}
