#pragma once

#include "credmask/minutiae.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <variant>

namespace credmask::vault {
class Vault;
using InstanceId = std::array<std::uint8_t, 16>;
} // namespace credmask::vault

namespace credmask::auth {

enum class AuthKind : std::uint8_t { Passphrase = 1, Fingerprint = 2 };

enum class AuthPolicy : std::uint8_t { PassphraseOnly = 1, FingerprintOnly = 2, Both = 3 };

inline constexpr std::size_t kMinEnrollMinutiae = 8;
inline constexpr double kDefaultFingerprintThreshold = 0.4;

/// Argon2id(passphrase, salt) with the parameters recorded alongside it.
/// The passphrase itself is never stored.
struct PassphraseRecord {
    std::uint32_t memory_bytes = 0;
    std::uint32_t iterations = 0;
    std::array<std::uint8_t, 16> salt{};
    std::array<std::uint8_t, 32> verifier{};

    bool operator==(const PassphraseRecord&) const = default;
};

struct FingerprintRecord {
    minutiae::Template enrolled;
    double threshold = kDefaultFingerprintThreshold;

    bool operator==(const FingerprintRecord&) const = default;
};

using AuthRecord = std::variant<PassphraseRecord, FingerprintRecord>;

AuthKind kind_of(const AuthRecord& record) noexcept;

/// Evidence that one factor was presented successfully to a specific open
/// vault. Proofs from another vault instance are rejected.
struct AuthProof {
    std::set<AuthKind> kinds;
    std::optional<double> fingerprint_score;
    vault::InstanceId issuer{};
};

std::string_view to_string(AuthKind kind) noexcept;
std::string_view to_string(AuthPolicy policy) noexcept;
std::optional<AuthPolicy> parse_policy(std::string_view text) noexcept;
std::set<AuthKind> required_kinds(AuthPolicy policy);

/// Stores a passphrase verifier in the vault (not yet committed). Replacing an
/// existing one needs a passphrase proof issued by this vault.
const PassphraseRecord& enroll_passphrase(vault::Vault& vault, std::string_view passphrase,
                                          const AuthProof* existing = nullptr);

AuthProof verify_passphrase(const PassphraseRecord& record, std::string_view passphrase,
                            const vault::InstanceId& issuer);
/// Checks against the vault's enrolled record. When none is enrolled, the
/// vault passphrase itself is the factor (it already decrypted the vault).
AuthProof verify_passphrase(const vault::Vault& vault, std::string_view passphrase);

const FingerprintRecord& enroll_fingerprint(vault::Vault& vault, const minutiae::Template& enrolled,
                                            double threshold = kDefaultFingerprintThreshold,
                                            const AuthProof* existing = nullptr);

AuthProof verify_fingerprint(const FingerprintRecord& record, const minutiae::Template& probe,
                             const vault::InstanceId& issuer);
AuthProof verify_fingerprint(const vault::Vault& vault, const minutiae::Template& probe);

/// Throws PolicyUnsatisfied naming the missing kinds.
void check_policy(AuthPolicy policy, std::span<const AuthProof> proofs);

/// AuthFailed for a proof issued by another vault instance, then
/// PolicyUnsatisfied when the proofs do not cover the vault's policy.
void require_authorized(const vault::Vault& vault, std::span<const AuthProof> proofs);

/// Fingerprint-requiring policies need an enrolled fingerprint (InvalidArgument).
void set_policy(vault::Vault& vault, AuthPolicy policy);

} // namespace credmask::auth
