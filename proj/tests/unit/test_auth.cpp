#include "credmask/auth.hpp"
#include "credmask/error.hpp"
#include "credmask/vault.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace credmask;
using namespace credmask::auth;
using credmask::testing::TempDir;
using credmask::testing::fast_kdf;
using credmask::testing::kPassphrase;

namespace {

template <typename F>
ErrorCode code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

minutiae::Template sample(std::uint64_t seed, std::size_t n = 20)
{
    std::mt19937_64 rng(seed);
    return credmask::testing::random_template(rng, n);
}

class AuthTest : public ::testing::Test {
protected:
    TempDir dir;
    vault::Vault v = vault::create_vault(dir.file("v.cmv"), kPassphrase, fast_kdf());
};

} // namespace

TEST_F(AuthTest, EnrollThenVerifyPassphrase)
{
    const auto& rec = enroll_passphrase(v, "unlock me");
    const auto proof = verify_passphrase(rec, "unlock me", v.instance_id());
    EXPECT_EQ(proof.kinds, std::set<AuthKind>{AuthKind::Passphrase});
    EXPECT_EQ(proof.issuer, v.instance_id());
    EXPECT_EQ(code_of([&] { verify_passphrase(rec, "unlock you", v.instance_id()); }), ErrorCode::AuthFailed);
    EXPECT_EQ(code_of([&] { verify_passphrase(rec, "", v.instance_id()); }), ErrorCode::AuthFailed);
}

TEST_F(AuthTest, VerifierIsNotThePassphrase)
{
    const auto& rec = enroll_passphrase(v, "unlock me");
    const std::string secret = "unlock me";
    const auto ser = v.serialize_payload();
    EXPECT_EQ(std::search(ser.begin(), ser.end(), secret.begin(), secret.end()), ser.end());
    const auto expected = vault::derive_key("unlock me", rec.salt, rec.memory_bytes, rec.iterations);
    EXPECT_EQ(rec.verifier, expected.bytes);
}

TEST_F(AuthTest, TamperedVerifierFails)
{
    auto rec = enroll_passphrase(v, "unlock me");
    rec.verifier[5] ^= 0x01;
    EXPECT_EQ(code_of([&] { verify_passphrase(rec, "unlock me", v.instance_id()); }), ErrorCode::AuthFailed);
}

TEST_F(AuthTest, ReEnrollNeedsProof)
{
    enroll_passphrase(v, "first");
    EXPECT_EQ(code_of([&] { enroll_passphrase(v, "second"); }), ErrorCode::AlreadyEnrolled);
    const auto proof = verify_passphrase(v, "first");
    enroll_passphrase(v, "second", &proof);
    EXPECT_NO_THROW(verify_passphrase(v, "second"));
    EXPECT_EQ(code_of([&] { verify_passphrase(v, "first"); }), ErrorCode::AuthFailed);
}

TEST_F(AuthTest, ProofFromOtherVaultDoesNotReEnroll)
{
    TempDir other_dir;
    auto other = vault::create_vault(other_dir.file("o.cmv"), kPassphrase, fast_kdf());
    enroll_passphrase(v, "first");
    const auto foreign = verify_passphrase(other, kPassphrase);
    EXPECT_EQ(code_of([&] { enroll_passphrase(v, "second", &foreign); }), ErrorCode::AlreadyEnrolled);
}

TEST_F(AuthTest, VaultPassphraseIsTheDefaultFactor)
{
    EXPECT_NO_THROW(verify_passphrase(v, kPassphrase));
    EXPECT_EQ(code_of([&] { verify_passphrase(v, "wrong"); }), ErrorCode::AuthFailed);
}

TEST_F(AuthTest, EmptyPassphraseEnrollmentRejected)
{
    EXPECT_EQ(code_of([&] { enroll_passphrase(v, ""); }), ErrorCode::InvalidArgument);
}

TEST_F(AuthTest, FingerprintEnrollment)
{
    const auto t = sample(1);
    const auto& rec = enroll_fingerprint(v, t, 0.4);
    EXPECT_EQ(rec.enrolled, t);
    EXPECT_EQ(code_of([&] { enroll_fingerprint(v, sample(2, 3), 0.4); }), ErrorCode::TooFewMinutiae);
    EXPECT_EQ(code_of([&] { enroll_fingerprint(v, sample(2), 1.5); }), ErrorCode::BadThreshold);
    EXPECT_EQ(code_of([&] { enroll_fingerprint(v, sample(2), 0.0); }), ErrorCode::BadThreshold);
    EXPECT_EQ(code_of([&] { enroll_fingerprint(v, sample(2), 0.4); }), ErrorCode::AlreadyEnrolled);
    const auto proof = verify_fingerprint(v, t);
    enroll_fingerprint(v, sample(2), 0.5, &proof);
    EXPECT_EQ(v.fingerprint_record()->threshold, 0.5);
}

TEST_F(AuthTest, FingerprintSelfMatchAccepts)
{
    const auto t = sample(3);
    enroll_fingerprint(v, t, 0.4);
    const auto proof = verify_fingerprint(v, t);
    EXPECT_EQ(proof.kinds, std::set<AuthKind>{AuthKind::Fingerprint});
    ASSERT_TRUE(proof.fingerprint_score.has_value());
    EXPECT_EQ(*proof.fingerprint_score, 1.0);
}

TEST_F(AuthTest, FarAwayProbeRejected)
{
    enroll_fingerprint(v, sample(4), 0.4);
    // Spread over a field 100x larger, so almost no pair lands within tolerance.
    std::mt19937_64 rng(99);
    const auto other = credmask::testing::random_template(rng, 20, 4000, 4000);
    try {
        verify_fingerprint(v, other);
        FAIL() << "accepted an unrelated probe";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AuthFailed);
        EXPECT_NE(std::string(e.what()).find("score"), std::string::npos);
    }
}

TEST_F(AuthTest, JitteredProbeAccepted)
{
    const auto t = sample(6);
    enroll_fingerprint(v, t, 0.4);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto probe = t;
    for (auto& m : probe.minutiae) {
        m.x += noise(rng);
        m.y += noise(rng);
    }
    const auto proof = verify_fingerprint(v, probe);
    EXPECT_GE(*proof.fingerprint_score, 0.4);
}

TEST_F(AuthTest, NoFingerprintEnrolledFails)
{
    EXPECT_EQ(code_of([&] { verify_fingerprint(v, sample(1)); }), ErrorCode::AuthFailed);
}

TEST(AuthPolicy, CheckPolicy)
{
    AuthProof pass{{AuthKind::Passphrase}, std::nullopt, {}};
    AuthProof finger{{AuthKind::Fingerprint}, 1.0, {}};
    EXPECT_NO_THROW(check_policy(AuthPolicy::Both, std::vector{pass, finger}));
    EXPECT_NO_THROW(check_policy(AuthPolicy::PassphraseOnly, std::vector{pass}));
    try {
        check_policy(AuthPolicy::Both, std::vector{pass});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PolicyUnsatisfied);
        EXPECT_NE(std::string(e.what()).find("fingerprint"), std::string::npos);
    }
    EXPECT_EQ(code_of([&] { check_policy(AuthPolicy::FingerprintOnly, std::vector<AuthProof>{}); }),
              ErrorCode::PolicyUnsatisfied);
}

TEST(AuthPolicy, ParseRoundTrip)
{
    for (auto p : {AuthPolicy::PassphraseOnly, AuthPolicy::FingerprintOnly, AuthPolicy::Both}) {
        EXPECT_EQ(parse_policy(to_string(p)), p);
    }
    EXPECT_FALSE(parse_policy("either").has_value());
}

TEST_F(AuthTest, SetPolicyNeedsEnrolledFingerprint)
{
    EXPECT_EQ(code_of([&] { set_policy(v, AuthPolicy::Both); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(v.policy(), AuthPolicy::PassphraseOnly);
    enroll_fingerprint(v, sample(1), 0.4);
    set_policy(v, AuthPolicy::Both);
    EXPECT_EQ(v.policy(), AuthPolicy::Both);
}

TEST_F(AuthTest, RequireAuthorizedRejectsForeignProofs)
{
    TempDir other_dir;
    auto other = vault::create_vault(other_dir.file("o.cmv"), kPassphrase, fast_kdf());
    const std::vector<AuthProof> foreign = {verify_passphrase(other, kPassphrase)};
    EXPECT_EQ(code_of([&] { require_authorized(v, foreign); }), ErrorCode::AuthFailed);
    const std::vector<AuthProof> own = {verify_passphrase(v, kPassphrase)};
    EXPECT_NO_THROW(require_authorized(v, own));
}

TEST_F(AuthTest, RecordsPersist)
{
    const auto t = sample(8);
    enroll_passphrase(v, "unlock me");
    enroll_fingerprint(v, t, 0.45);
    set_policy(v, AuthPolicy::Both);
    v.commit();
    const auto path = v.path();
    { auto gone = std::move(v); }
    const auto reopened = vault::open_vault(path, kPassphrase);
    EXPECT_EQ(reopened.policy(), AuthPolicy::Both);
    ASSERT_NE(reopened.fingerprint_record(), nullptr);
    EXPECT_EQ(reopened.fingerprint_record()->enrolled, t);
    EXPECT_EQ(reopened.fingerprint_record()->threshold, 0.45);
    EXPECT_NO_THROW(verify_passphrase(reopened, "unlock me"));
}
