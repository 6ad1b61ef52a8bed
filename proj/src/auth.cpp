#include "credmask/auth.hpp"

#include "credmask/error.hpp"
#include "credmask/vault.hpp"
#include "sodium_support.hpp"

#include <cstdio>

namespace credmask::auth {

namespace {

bool proof_covers(const AuthProof* proof, const vault::Vault& v, AuthKind kind)
{
    return proof != nullptr && proof->issuer == v.instance_id() && proof->kinds.contains(kind);
}

std::string score_text(double score)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", score);
    return buf;
}

} // namespace

AuthKind kind_of(const AuthRecord& record) noexcept
{
    return std::holds_alternative<PassphraseRecord>(record) ? AuthKind::Passphrase : AuthKind::Fingerprint;
}

std::string_view to_string(AuthKind kind) noexcept
{
    return kind == AuthKind::Passphrase ? "passphrase" : "fingerprint";
}

std::string_view to_string(AuthPolicy policy) noexcept
{
    switch (policy) {
    case AuthPolicy::PassphraseOnly:
        return "passphrase-only";
    case AuthPolicy::FingerprintOnly:
        return "fingerprint-only";
    case AuthPolicy::Both:
        return "both";
    }
    return "unknown";
}

std::optional<AuthPolicy> parse_policy(std::string_view text) noexcept
{
    for (auto p : {AuthPolicy::PassphraseOnly, AuthPolicy::FingerprintOnly, AuthPolicy::Both}) {
        if (text == to_string(p)) {
            return p;
        }
    }
    return std::nullopt;
}

std::set<AuthKind> required_kinds(AuthPolicy policy)
{
    switch (policy) {
    case AuthPolicy::PassphraseOnly:
        return {AuthKind::Passphrase};
    case AuthPolicy::FingerprintOnly:
        return {AuthKind::Fingerprint};
    case AuthPolicy::Both:
        return {AuthKind::Passphrase, AuthKind::Fingerprint};
    }
    return {};
}

const PassphraseRecord& enroll_passphrase(vault::Vault& v, std::string_view passphrase, const AuthProof* existing)
{
    if (passphrase.empty()) {
        fail(ErrorCode::InvalidArgument, "passphrase must not be empty");
    }
    if (v.passphrase_record() != nullptr && !proof_covers(existing, v, AuthKind::Passphrase)) {
        fail(ErrorCode::AlreadyEnrolled, "a passphrase is already enrolled; re-enrolling needs the current one");
    }
    const auto params = vault::KdfParams::with_random_salt(v.kdf().memory_bytes, v.kdf().iterations);
    PassphraseRecord record;
    record.memory_bytes = params.memory_bytes;
    record.iterations = params.iterations;
    record.salt = params.salt;
    record.verifier = vault::derive_key(passphrase, record.salt, record.memory_bytes, record.iterations).bytes;
    v.store_auth_record(record);
    return *v.passphrase_record();
}

AuthProof verify_passphrase(const PassphraseRecord& record, std::string_view passphrase,
                            const vault::InstanceId& issuer)
{
    if (passphrase.empty()) {
        fail(ErrorCode::AuthFailed, "empty passphrase");
    }
    vault::KdfParams params;
    params.memory_bytes = record.memory_bytes;
    params.iterations = record.iterations;
    try {
        params.validate();
    } catch (const Error&) {
        fail(ErrorCode::AuthFailed, "passphrase record is unusable");
    }
    const auto candidate = vault::derive_key(passphrase, record.salt, record.memory_bytes, record.iterations);
    detail::ensure_sodium();
    if (sodium_memcmp(candidate.bytes.data(), record.verifier.data(), record.verifier.size()) != 0) {
        fail(ErrorCode::AuthFailed, "passphrase rejected");
    }
    AuthProof proof;
    proof.kinds.insert(AuthKind::Passphrase);
    proof.issuer = issuer;
    return proof;
}

AuthProof verify_passphrase(const vault::Vault& v, std::string_view passphrase)
{
    if (const auto* record = v.passphrase_record()) {
        return verify_passphrase(*record, passphrase, v.instance_id());
    }
    if (!v.passphrase_opens(passphrase)) {
        fail(ErrorCode::AuthFailed, "passphrase rejected");
    }
    AuthProof proof;
    proof.kinds.insert(AuthKind::Passphrase);
    proof.issuer = v.instance_id();
    return proof;
}

const FingerprintRecord& enroll_fingerprint(vault::Vault& v, const minutiae::Template& enrolled, double threshold,
                                            const AuthProof* existing)
{
    if (enrolled.size() < kMinEnrollMinutiae) {
        fail(ErrorCode::TooFewMinutiae, "enrollment needs at least " + std::to_string(kMinEnrollMinutiae) +
                                            " minutiae, got " + std::to_string(enrolled.size()));
    }
    minutiae::validate_threshold(threshold);
    if (v.fingerprint_record() != nullptr && !proof_covers(existing, v, AuthKind::Fingerprint)) {
        fail(ErrorCode::AlreadyEnrolled, "a fingerprint is already enrolled; re-enrolling needs a matching probe");
    }
    v.store_auth_record(FingerprintRecord{enrolled, threshold});
    return *v.fingerprint_record();
}

AuthProof verify_fingerprint(const FingerprintRecord& record, const minutiae::Template& probe,
                             const vault::InstanceId& issuer)
{
    const auto result = minutiae::match_templates(record.enrolled, probe);
    if (minutiae::decide(result, record.threshold) != minutiae::Decision::Accept) {
        fail(ErrorCode::AuthFailed, "fingerprint rejected (score " + score_text(result.score) + " below threshold " +
                                        score_text(record.threshold) + ")");
    }
    AuthProof proof;
    proof.kinds.insert(AuthKind::Fingerprint);
    proof.fingerprint_score = result.score;
    proof.issuer = issuer;
    return proof;
}

AuthProof verify_fingerprint(const vault::Vault& v, const minutiae::Template& probe)
{
    const auto* record = v.fingerprint_record();
    if (record == nullptr) {
        fail(ErrorCode::AuthFailed, "no fingerprint is enrolled");
    }
    return verify_fingerprint(*record, probe, v.instance_id());
}

void check_policy(AuthPolicy policy, std::span<const AuthProof> proofs)
{
    std::set<AuthKind> have;
    for (const auto& p : proofs) {
        have.insert(p.kinds.begin(), p.kinds.end());
    }
    std::string missing;
    for (auto kind : required_kinds(policy)) {
        if (!have.contains(kind)) {
            missing += missing.empty() ? "" : ", ";
            missing += to_string(kind);
        }
    }
    if (!missing.empty()) {
        fail(ErrorCode::PolicyUnsatisfied, "policy " + std::string(to_string(policy)) + " also needs: " + missing);
    }
}

void require_authorized(const vault::Vault& v, std::span<const AuthProof> proofs)
{
    for (const auto& p : proofs) {
        if (p.issuer != v.instance_id()) {
            fail(ErrorCode::AuthFailed, "proof was issued for a different vault session");
        }
    }
    check_policy(v.policy(), proofs);
}

void set_policy(vault::Vault& v, AuthPolicy policy)
{
    if (required_kinds(policy).contains(AuthKind::Fingerprint) && v.fingerprint_record() == nullptr) {
        fail(ErrorCode::InvalidArgument,
             "policy " + std::string(to_string(policy)) + " needs an enrolled fingerprint (run auth enroll-fingerprint)");
    }
    v.store_policy(policy);
}

} // namespace credmask::auth
