#include "meld/crypto/identity.hpp"

#include <nlohmann/json.hpp>
#include <sodium.h>

#include <cstring>

namespace meld::crypto {

namespace {
struct SodiumInit {
    SodiumInit() {
        if (sodium_init() < 0)
            throw std::runtime_error("sodium_init failed");
    }
};
const SodiumInit sodium_guard{};
} // namespace

Digest sha256(ByteSpan payload) {
    Digest out;
    crypto_hash_sha256(out.data(), payload.data(), payload.size());
    return out;
}

std::string to_hex(const Digest& d) {
    return meld::to_hex(digest_span(d));
}

const char* to_string(Role r) {
    return r == Role::Organization ? "organization" : "client";
}

Role role_from_string(std::string_view s) {
    if (s == "organization") return Role::Organization;
    if (s == "client") return Role::Client;
    throw std::invalid_argument("bad role: " + std::string(s));
}

void Signature::encode(Writer& w) const {
    w.str(signer_id);
    w.bytes(bytes);
}

Signature Signature::decode(Reader& r) {
    Signature s;
    s.signer_id = r.str();
    s.bytes = r.bytes();
    return s;
}

KeyPair KeyPair::generate() {
    KeyPair kp;
    kp.pk_.resize(crypto_sign_PUBLICKEYBYTES);
    kp.sk_.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_keypair(kp.pk_.data(), kp.sk_.data());
    return kp;
}

KeyPair KeyPair::from_seed(const Digest& seed) {
    static_assert(crypto_sign_SEEDBYTES == 32);
    KeyPair kp;
    kp.pk_.resize(crypto_sign_PUBLICKEYBYTES);
    kp.sk_.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.pk_.data(), kp.sk_.data(), seed.data());
    return kp;
}

Bytes KeyPair::sign(const Digest& message_digest) const {
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message_digest.data(), message_digest.size(),
                         sk_.data());
    return sig;
}

void IdentityRegistry::add(Identity identity) {
    identities_[identity.id] = std::move(identity);
}

const Identity* IdentityRegistry::find(const std::string& id) const {
    auto it = identities_.find(id);
    return it == identities_.end() ? nullptr : &it->second;
}

std::size_t IdentityRegistry::DigestHash::operator()(const Digest& d) const {
    std::size_t h;
    std::memcpy(&h, d.data(), sizeof(h));
    return h;
}

bool IdentityRegistry::verify(const std::string& signer_id, ByteSpan payload,
                              const Signature& sig) const {
    return verify_digest(signer_id, sha256(payload), sig);
}

bool IdentityRegistry::verify_digest(const std::string& signer_id, const Digest& digest,
                                     const Signature& sig) const {
    const Identity* identity = find(signer_id);
    if (identity == nullptr || identity->public_key.size() != crypto_sign_PUBLICKEYBYTES)
        return false;
    if (sig.bytes.size() != crypto_sign_BYTES)
        return false;

    Writer key;
    key.str(signer_id);
    key.raw(digest_span(digest));
    key.bytes(sig.bytes);
    Digest memo_key = sha256(key.data());
    {
        std::lock_guard lock(memo_->mu);
        auto it = memo_->results.find(memo_key);
        if (it != memo_->results.end())
            return it->second;
    }

    bool ok = crypto_sign_verify_detached(sig.bytes.data(), digest.data(), digest.size(),
                                          identity->public_key.data()) == 0;
    {
        std::lock_guard lock(memo_->mu);
        if (memo_->results.size() > 1u << 20)
            memo_->results.clear();
        memo_->results.emplace(memo_key, ok);
    }
    return ok;
}

nlohmann::json IdentityRegistry::to_genesis() const {
    nlohmann::json roster = nlohmann::json::array();
    for (const auto& [id, identity] : identities_) {
        roster.push_back({{"id", id},
                          {"role", to_string(identity.role)},
                          {"public_key", meld::to_hex(identity.public_key)}});
    }
    return nlohmann::json{{"roster", roster}};
}

IdentityRegistry IdentityRegistry::from_genesis(const nlohmann::json& genesis) {
    IdentityRegistry registry;
    for (const auto& entry : genesis.at("roster")) {
        Identity identity;
        identity.id = entry.at("id").get<std::string>();
        identity.role = role_from_string(entry.at("role").get<std::string>());
        identity.public_key = from_hex(entry.at("public_key").get<std::string>());
        registry.add(std::move(identity));
    }
    return registry;
}

std::pair<Digest, Signature> Signer::hash_and_sign(ByteSpan payload) const {
    Digest digest = sha256(payload);
    return {digest, sign_digest(digest)};
}

Signature Signer::sign_digest(const Digest& digest) const {
    require_registered();
    return Signature{id_, keys_.sign(digest)};
}

void Signer::require_registered() const {
    if (!registry_->contains(id_))
        throw UnknownIdentity(id_);
}

} // namespace meld::crypto
