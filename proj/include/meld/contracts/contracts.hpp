#pragma once

#include "meld/crdt/object.hpp"
#include "meld/ledger/ledger.hpp"

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace meld::contracts {

struct ContractError : std::runtime_error {
    std::string code;
    ContractError(std::string code_, const std::string& what)
        : std::runtime_error(what), code(std::move(code_)) {}
};

// Read-only window onto an organization's committed state. Contract
// execution never mutates the ledger; re-executing a proposal is harmless.
class StateView {
public:
    explicit StateView(ledger::Ledger& ledger) : ledger_(&ledger) {}

    crdt::ValueView read(const std::string& object_id, const crdt::OperationPath& path) const {
        return ledger_->read_object(object_id, path);
    }

private:
    ledger::Ledger* ledger_;
};

// Execution context of one proposal. Operation clocks derive from the
// proposal clock and the operation's position in the write-set, so a single
// proposal can touch one object more than once while keeping operation ids
// unique and same-client ordering intact across proposals.
struct ContractContext {
    std::string client_id;
    std::uint64_t proposal_clock = 0;
    const StateView* state = nullptr;

    static constexpr unsigned kSeqBits = 16;

    crdt::OperationId next_op_id() {
        if (seq_ >= (1u << kSeqBits))
            throw ContractError("WriteSetTooLarge", "write-set exceeds per-proposal limit");
        return {client_id, (proposal_clock << kSeqBits) | seq_++};
    }

private:
    std::uint64_t seq_ = 0;
};

using ModifyHandler =
    std::function<crdt::WriteSet(ContractContext&, const std::vector<Bytes>&)>;
using ReadHandler = std::function<Bytes(const StateView&, const std::vector<Bytes>&)>;

struct ContractDescriptor {
    std::string contract_id;
    std::map<std::string, ModifyHandler> modify_fns;
    std::map<std::string, ReadHandler> read_fns;

    bool has_function(const std::string& name) const {
        return modify_fns.contains(name) || read_fns.contains(name);
    }
};

class ContractRegistry {
public:
    void add(ContractDescriptor contract) {
        contracts_[contract.contract_id] = std::move(contract);
    }
    const ContractDescriptor* find(const std::string& contract_id) const {
        auto it = contracts_.find(contract_id);
        return it == contracts_.end() ? nullptr : &it->second;
    }

private:
    std::map<std::string, ContractDescriptor> contracts_;
};

// -- voting ------------------------------------------------------------
// One object per (election, party): a map keyed by voter id holding a
// boolean register. A vote for one party assigns true there and false under
// every other party, so a voter's later vote overwrites the earlier one.
struct VotingConfig {
    std::vector<std::string> elections;
    std::vector<std::string> parties;
};

ContractDescriptor make_voting_contract(VotingConfig cfg);
std::string voting_object_id(const std::string& election, const std::string& party);

// -- auction -----------------------------------------------------------
// One object per auction: a map keyed by bidder id holding a grow-only
// counter of that bidder's cumulative bid.
struct AuctionConfig {
    std::vector<std::string> auctions;
};

ContractDescriptor make_auction_contract(AuctionConfig cfg);
std::string auction_object_id(const std::string& auction);

// -- synthetic ---------------------------------------------------------
struct SyntheticConfig {
    std::uint64_t universe = 1024; // object ids wrap modulo this universe
};

ContractDescriptor make_synthetic_contract(SyntheticConfig cfg);
std::string synthetic_object_id(crdt::CrdtKind kind, std::uint64_t index,
                                std::uint64_t universe);

// Contract ids as registered by the fixtures.
inline constexpr const char* kVotingContract = "voting";
inline constexpr const char* kAuctionContract = "auction";
inline constexpr const char* kSyntheticContract = "synthetic";

// Argument helpers: arguments travel as byte strings.
inline Bytes arg(std::string_view s) { return to_bytes(s); }
Bytes arg_u64(std::uint64_t v);
Bytes arg_i64(std::int64_t v);

} // namespace meld::contracts
