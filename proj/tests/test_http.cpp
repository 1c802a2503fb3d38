#include <doctest.h>

#include "meld/net/http_transport.hpp"

#include "harness.hpp"

using namespace meld;
using namespace meld::test;
using contracts::arg;

// Smoke test for the socket transport: the same frames drive the same node
// logic over real HTTP. All benchmark runs use the simulator instead.
TEST_CASE("two organizations commit a transaction over real sockets") {
    Harness h({.num_orgs = 2, .policy_q = 2, .start_gossip = false});
    net::HttpOrgServer s0(h.nodes[0], 18751);
    net::HttpOrgServer s1(h.nodes[1], 18752);

    crypto::Signer client(h.registry, h.client_ids[0], h.client_keys[0]);
    auto proposal = proto::Proposal::make_signed(client, 1, "voting", "vote",
                                                 {arg("v0"), arg("P1"), arg("E0")});

    // Phase 1 over HTTP.
    proto::Frame propose{proto::MsgType::ProposeRequest, proposal.encoded()};
    std::vector<proto::Endorsement> endorsements;
    for (int port : {18751, 18752}) {
        auto response = net::http_call("127.0.0.1", port, propose);
        REQUIRE(response.has_value());
        REQUIRE(response->type == proto::MsgType::EndorsementResponse);
        auto body = proto::EndorsementResponseBody::decode_bytes(response->payload);
        REQUIRE(body.status == proto::EndorsementResponseBody::Status::Endorsed);
        endorsements.push_back(body.endorsement);
    }
    CHECK(endorsements[0].write_set_digest == endorsements[1].write_set_digest);

    // Phase 2 over HTTP.
    auto tx = proto::Transaction::assemble(proposal, endorsements[0].write_set, endorsements,
                                           client);
    proto::Frame commit{proto::MsgType::CommitRequest, tx.encoded()};
    for (int port : {18751, 18752}) {
        auto response = net::http_call("127.0.0.1", port, commit);
        REQUIRE(response.has_value());
        REQUIRE(response->type == proto::MsgType::ReceiptResponse);
        auto body = proto::ReceiptResponseBody::decode_bytes(response->payload);
        CHECK(body.receipt.verdict == proto::Verdict::Valid);
        CHECK(body.reason == "valid");
        CHECK(h.registry.verify(body.receipt.org_id, body.receipt.signed_payload(),
                                body.receipt.org_signature));
    }

    CHECK(h.ledgers[0].height() == 1);
    CHECK(h.ledgers[1].height() == 1);
    CHECK(h.ledgers[0].state_digest() == h.ledgers[1].state_digest());

    // Read over HTTP.
    auto read_proposal = proto::Proposal::make_signed(client, 2, "voting", "read_vote_count",
                                                      {arg("P1"), arg("E0")});
    auto response = net::http_call("127.0.0.1", 18751,
                                   {proto::MsgType::ProposeRequest, read_proposal.encoded()});
    REQUIRE(response.has_value());
    auto body = proto::EndorsementResponseBody::decode_bytes(response->payload);
    CHECK(body.status == proto::EndorsementResponseBody::Status::ReadResult);
    CHECK(to_string(body.read_result).find("\"count\":1") != std::string::npos);

    s0.stop();
    s1.stop();
}
