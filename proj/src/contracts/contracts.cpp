#include "meld/contracts/contracts.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>

namespace meld::contracts {

using nlohmann::json;

namespace {

std::string arg_str(const std::vector<Bytes>& args, std::size_t i, const char* name) {
    if (i >= args.size())
        throw ContractError("BadArguments", std::string("missing argument: ") + name);
    return to_string(args[i]);
}

std::int64_t arg_int(const std::vector<Bytes>& args, std::size_t i, const char* name) {
    std::string s = arg_str(args, i, name);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ContractError("BadArguments", std::string("not an integer: ") + name);
    return v;
}

Bytes json_result(const json& j) { return to_bytes(j.dump()); }

bool is_single_true(const crdt::ValueView& v) {
    return v.kind == crdt::ValueView::Kind::Values && v.values.size() == 1 &&
           to_string(v.values[0]) == "true";
}

} // namespace

Bytes arg_u64(std::uint64_t v) { return to_bytes(std::to_string(v)); }
Bytes arg_i64(std::int64_t v) { return to_bytes(std::to_string(v)); }

std::string voting_object_id(const std::string& election, const std::string& party) {
    return "vote/" + election + "/" + party;
}

ContractDescriptor make_voting_contract(VotingConfig cfg) {
    ContractDescriptor c;
    c.contract_id = kVotingContract;

    auto elections = cfg.elections;
    auto parties = cfg.parties;

    c.modify_fns["vote"] = [elections, parties](ContractContext& ctx,
                                                const std::vector<Bytes>& args) {
        std::string voter = arg_str(args, 0, "voter");
        std::string party = arg_str(args, 1, "party");
        std::string election = arg_str(args, 2, "election");
        if (std::find(elections.begin(), elections.end(), election) == elections.end())
            throw ContractError("UnknownElection", "no such election: " + election);
        if (std::find(parties.begin(), parties.end(), party) == parties.end())
            throw ContractError("UnknownParty", "no such party: " + party);

        // One operation per party object: true for the chosen party, false
        // under every other party for the same voter register.
        crdt::WriteSet ws;
        for (const auto& p : parties) {
            const char* flag = (p == party) ? "true" : "false";
            ws.push_back(crdt::assign_value(voting_object_id(election, p), ctx.next_op_id(),
                                            crdt::OperationPath{voter}, to_bytes(flag)));
        }
        return ws;
    };

    c.read_fns["read_vote_count"] = [elections, parties](const StateView& state,
                                                         const std::vector<Bytes>& args) {
        std::string party = arg_str(args, 0, "party");
        std::string election = arg_str(args, 1, "election");
        if (std::find(elections.begin(), elections.end(), election) == elections.end())
            throw ContractError("UnknownElection", "no such election: " + election);
        if (std::find(parties.begin(), parties.end(), party) == parties.end())
            throw ContractError("UnknownParty", "no such party: " + party);

        auto root = state.read(voting_object_id(election, party), {});
        std::uint64_t count = 0;
        if (root.kind == crdt::ValueView::Kind::Map) {
            // A register holding concurrent {true,false} survivors is not a
            // vote for this party.
            for (const auto& [voter, reg] : root.entries)
                if (is_single_true(reg))
                    ++count;
        }
        return json_result({{"election", election}, {"party", party}, {"count", count}});
    };

    return c;
}

std::string auction_object_id(const std::string& auction) { return "auction/" + auction; }

ContractDescriptor make_auction_contract(AuctionConfig cfg) {
    ContractDescriptor c;
    c.contract_id = kAuctionContract;

    auto auctions = cfg.auctions;

    c.modify_fns["bid"] = [auctions](ContractContext& ctx, const std::vector<Bytes>& args) {
        std::string bidder = arg_str(args, 0, "bidder");
        std::int64_t increase = arg_int(args, 1, "bid_increase");
        std::string auction = arg_str(args, 2, "auction");
        if (std::find(auctions.begin(), auctions.end(), auction) == auctions.end())
            throw ContractError("UnknownAuction", "no such auction: " + auction);
        if (increase <= 0)
            throw ContractError("NonPositiveBid", "bids may only increase");

        crdt::WriteSet ws;
        ws.push_back(crdt::add_value(auction_object_id(auction), ctx.next_op_id(),
                                     crdt::OperationPath{bidder}, increase));
        return ws;
    };

    c.read_fns["get_highest_bid"] = [auctions](const StateView& state,
                                               const std::vector<Bytes>& args) {
        std::string auction = arg_str(args, 0, "auction");
        if (std::find(auctions.begin(), auctions.end(), auction) == auctions.end())
            throw ContractError("UnknownAuction", "no such auction: " + auction);

        auto root = state.read(auction_object_id(auction), {});
        std::string best_bidder;
        std::int64_t best = 0;
        bool found = false;
        if (root.kind == crdt::ValueView::Kind::Map) {
            // Ties break toward the lexicographically smaller bidder id; map
            // iteration is already in that order.
            for (const auto& [bidder, counter] : root.entries) {
                if (counter.kind != crdt::ValueView::Kind::Counter)
                    continue;
                if (!found || counter.counter > best) {
                    found = true;
                    best = counter.counter;
                    best_bidder = bidder;
                }
            }
        }
        if (!found)
            return json_result({{"auction", auction}, {"found", false}});
        return json_result(
            {{"auction", auction}, {"found", true}, {"bidder", best_bidder}, {"amount", best}});
    };

    return c;
}

std::string synthetic_object_id(crdt::CrdtKind kind, std::uint64_t index,
                                std::uint64_t universe) {
    return std::string("syn/") + crdt::to_string(kind) + "/" +
           std::to_string(universe == 0 ? index : index % universe);
}

ContractDescriptor make_synthetic_contract(SyntheticConfig cfg) {
    ContractDescriptor c;
    c.contract_id = kSyntheticContract;
    const std::uint64_t universe = cfg.universe;

    c.modify_fns["modify"] = [universe](ContractContext& ctx, const std::vector<Bytes>& args) {
        std::int64_t obj_count = arg_int(args, 0, "obj_count");
        std::int64_t ops_per_obj = arg_int(args, 1, "ops_per_obj");
        std::string type = arg_str(args, 2, "crdt_type");
        if (obj_count < 1 || ops_per_obj < 1)
            throw ContractError("BadArguments", "obj_count and ops_per_obj must be >= 1");

        crdt::CrdtKind kind;
        if (type == "gcounter") kind = crdt::CrdtKind::GCounter;
        else if (type == "map") kind = crdt::CrdtKind::CrdtMap;
        else if (type == "mvregister") kind = crdt::CrdtKind::MVRegister;
        else throw ContractError("BadArguments", "unknown crdt type: " + type);

        crdt::WriteSet ws;
        ws.reserve(static_cast<std::size_t>(obj_count * ops_per_obj));
        for (std::int64_t i = 0; i < obj_count; ++i) {
            std::string object_id =
                synthetic_object_id(kind, static_cast<std::uint64_t>(i), universe);
            for (std::int64_t k = 0; k < ops_per_obj; ++k) {
                auto id = ctx.next_op_id();
                switch (kind) {
                case crdt::CrdtKind::GCounter:
                    ws.push_back(crdt::add_value(object_id, id, {}, 1 + (id.clock % 100)));
                    break;
                case crdt::CrdtKind::CrdtMap:
                    ws.push_back(crdt::insert_value(object_id, id, {},
                                                    "k" + std::to_string(k),
                                                    to_bytes("v" + std::to_string(id.clock))));
                    break;
                case crdt::CrdtKind::MVRegister:
                    ws.push_back(crdt::assign_value(object_id, id, {},
                                                    to_bytes("v" + std::to_string(id.clock))));
                    break;
                }
            }
        }
        return ws;
    };

    c.read_fns["read"] = [universe](const StateView& state, const std::vector<Bytes>& args) {
        std::int64_t obj_count = arg_int(args, 0, "obj_count");
        if (obj_count < 1)
            throw ContractError("BadArguments", "obj_count must be >= 1");
        std::string type = args.size() > 1 ? arg_str(args, 1, "crdt_type") : "gcounter";
        crdt::CrdtKind kind;
        if (type == "gcounter") kind = crdt::CrdtKind::GCounter;
        else if (type == "map") kind = crdt::CrdtKind::CrdtMap;
        else if (type == "mvregister") kind = crdt::CrdtKind::MVRegister;
        else throw ContractError("BadArguments", "unknown crdt type: " + type);

        json results = json::array();
        for (std::int64_t i = 0; i < obj_count; ++i) {
            std::string object_id =
                synthetic_object_id(kind, static_cast<std::uint64_t>(i), universe);
            auto view = state.read(object_id, {});
            json entry = {{"object", object_id}, {"found", view.found()}};
            if (view.kind == crdt::ValueView::Kind::Counter)
                entry["value"] = view.counter;
            results.push_back(entry);
        }
        return json_result(results);
    };

    return c;
}

} // namespace meld::contracts
