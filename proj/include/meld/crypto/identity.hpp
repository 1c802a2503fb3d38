#pragma once

#include "meld/bytes.hpp"
#include "meld/codec.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace meld::crypto {

using Digest = std::array<std::uint8_t, 32>;

constexpr Digest kZeroDigest{};

Digest sha256(ByteSpan payload);
std::string to_hex(const Digest& d);

inline ByteSpan digest_span(const Digest& d) { return ByteSpan(d.data(), d.size()); }

enum class Role : std::uint8_t { Organization = 1, Client = 2 };

const char* to_string(Role r);
Role role_from_string(std::string_view s);

struct Identity {
    std::string id;
    Bytes public_key;
    Role role = Role::Client;
};

struct Signature {
    std::string signer_id;
    Bytes bytes;

    void encode(Writer& w) const;
    static Signature decode(Reader& r);
};

struct UnknownIdentity : std::runtime_error {
    explicit UnknownIdentity(const std::string& id)
        : std::runtime_error("unknown identity: " + id) {}
};

// Ed25519 key pair. Seeded construction keeps whole-network setups
// reproducible from a single benchmark seed.
class KeyPair {
public:
    KeyPair() = default; // empty; assign from generate()/from_seed() before use
    static KeyPair generate();
    static KeyPair from_seed(const Digest& seed);

    const Bytes& public_key() const { return pk_; }
    Bytes sign(const Digest& message_digest) const;

private:
    Bytes pk_;
    Bytes sk_;
};

// Network roster. Verification results are memoized by
// sha256(signer|digest|signature): the simulator validates the same
// transaction at every organization in one process.
class IdentityRegistry {
public:
    void add(Identity identity);
    const Identity* find(const std::string& id) const;
    bool contains(const std::string& id) const { return find(id) != nullptr; }
    std::size_t size() const { return identities_.size(); }

    bool verify(const std::string& signer_id, ByteSpan payload, const Signature& sig) const;
    bool verify_digest(const std::string& signer_id, const Digest& digest,
                       const Signature& sig) const;

    nlohmann::json to_genesis() const;
    static IdentityRegistry from_genesis(const nlohmann::json& genesis);

private:
    std::map<std::string, Identity> identities_;

    struct DigestHash {
        std::size_t operator()(const Digest& d) const;
    };
    struct VerifyMemo {
        std::mutex mu;
        std::unordered_map<Digest, bool, DigestHash> results;
    };
    std::shared_ptr<VerifyMemo> memo_ = std::make_shared<VerifyMemo>();
};

// Signing context for one registered identity.
class Signer {
public:
    Signer(const IdentityRegistry& registry, std::string id, KeyPair keys)
        : registry_(&registry), id_(std::move(id)), keys_(std::move(keys)) {}

    const std::string& id() const { return id_; }

    // Hashes the canonical payload and signs the 32-byte digest.
    std::pair<Digest, Signature> hash_and_sign(ByteSpan payload) const;
    Signature sign_digest(const Digest& digest) const;

private:
    void require_registered() const;

    const IdentityRegistry* registry_;
    std::string id_;
    KeyPair keys_;
};

} // namespace meld::crypto
