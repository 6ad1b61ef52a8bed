#pragma once

// Encrypted container for masked login rows and the authentication records
// that gate their release.
//
// File layout, all integers big-endian:
//
//   "CMV1" | version u16 | kdf memory bytes u32 | kdf iterations u32 |
//   kdf parallelism u8 | salt[16] | nonce[24] | key check[16] |
//   ciphertext | tag[16]
//
// The key is Argon2id(passphrase, salt); the payload is sealed with
// XChaCha20-Poly1305 using everything before the ciphertext as associated
// data. Every commit draws a fresh nonce and replaces the file atomically.
// The key check is a keyed BLAKE2b of a fixed label. It lets a wrong
// passphrase be told apart from a modified file.

#include "credmask/auth.hpp"
#include "credmask/file_lock.hpp"
#include "credmask/store.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace credmask::vault {

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kKeyCheckSize = 16;
inline constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 4 + 1 + 16 + 24 + kKeyCheckSize;
inline constexpr std::size_t kTagSize = 16;

struct KdfParams {
    std::uint32_t memory_bytes = 64u * 1024u * 1024u;
    std::uint32_t iterations = 3;
    std::uint8_t parallelism = 1;
    std::array<std::uint8_t, 16> salt{};

    /// Defaults (or the given cost) with a freshly drawn salt.
    static KdfParams with_random_salt(std::uint32_t memory_bytes = 64u * 1024u * 1024u,
                                      std::uint32_t iterations = 3);
    /// Throws `code` when the cost parameters are outside what this build
    /// accepts (memory 8 KiB..1 GiB, iterations 1..64, parallelism 1).
    void validate(ErrorCode code = ErrorCode::BadKdfParams) const;
};

struct VaultEntry {
    std::string hostname;
    std::vector<store::LoginRow> rows;
    std::int64_t masked_at = 0; ///< UTC seconds
    std::string store_path;
    std::vector<std::string> schema_columns;

    void validate() const;
    bool operator==(const VaultEntry&) const = default;
};

/// 32-byte symmetric key, wiped on destruction.
class SecretKey {
public:
    SecretKey() = default;
    ~SecretKey();
    SecretKey(const SecretKey&) = delete;
    SecretKey& operator=(const SecretKey&) = delete;
    SecretKey(SecretKey&& other) noexcept;
    SecretKey& operator=(SecretKey&& other) noexcept;

    std::array<std::uint8_t, 32> bytes{};
};

class Vault {
public:
    Vault(Vault&&) noexcept = default;
    Vault& operator=(Vault&&) noexcept = default;

    [[nodiscard]] const std::string& path() const noexcept { return path_; }
    [[nodiscard]] const KdfParams& kdf() const noexcept { return kdf_; }
    [[nodiscard]] std::uint16_t format_version() const noexcept { return kFormatVersion; }
    [[nodiscard]] const InstanceId& instance_id() const noexcept { return instance_; }
    /// Constant-time check that `passphrase` derives this vault's key.
    [[nodiscard]] bool passphrase_opens(std::string_view passphrase) const;

    [[nodiscard]] const std::vector<VaultEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const VaultEntry* find(std::string_view hostname) const noexcept;
    [[nodiscard]] std::vector<std::string> hostnames() const;

    /// Appends entries in memory; nothing is durable until commit().
    void put_entries(std::vector<VaultEntry> entries);
    /// Removes and returns the entries for `hosts`, all or none.
    std::vector<VaultEntry> take_entries(const std::set<std::string>& hosts);

    [[nodiscard]] const std::vector<auth::AuthRecord>& auth_records() const noexcept { return auth_records_; }
    [[nodiscard]] const auth::PassphraseRecord* passphrase_record() const noexcept;
    [[nodiscard]] const auth::FingerprintRecord* fingerprint_record() const noexcept;
    /// Inserts or replaces the record of the same kind.
    void store_auth_record(auth::AuthRecord record);

    [[nodiscard]] auth::AuthPolicy policy() const noexcept { return policy_; }
    void store_policy(auth::AuthPolicy policy) noexcept { policy_ = policy; }

    /// Key-store digest taken when masking first happened.
    [[nodiscard]] const std::optional<store::KeyStoreDigest>& keystore() const noexcept { return keystore_; }
    void record_keystore(const store::KeyStoreDigest& digest) { keystore_ = digest; }
    void clear_keystore() noexcept { keystore_.reset(); }

    /// Re-seals the full state under a fresh nonce and atomically replaces
    /// the file (temp write, fsync, rename, directory fsync).
    void commit();

    /// Canonical serialisation of the plaintext payload.
    [[nodiscard]] Bytes serialize_payload() const;

private:
    friend Vault create_vault(const std::string&, std::string_view, const KdfParams&);
    friend Vault open_vault(const std::string&, std::string_view);

    Vault(std::string path, FileLock lock, KdfParams kdf, SecretKey key);

    void parse_payload(std::span<const std::uint8_t> payload);

    std::string path_;
    FileLock lock_;
    KdfParams kdf_;
    SecretKey key_;
    InstanceId instance_{};
    std::vector<VaultEntry> entries_;
    std::vector<auth::AuthRecord> auth_records_;
    auth::AuthPolicy policy_ = auth::AuthPolicy::PassphraseOnly;
    std::optional<store::KeyStoreDigest> keystore_;
};

/// Writes a new empty vault and returns it open.
Vault create_vault(const std::string& path, std::string_view passphrase, const KdfParams& kdf);

/// WrongSecret when the key check rejects the passphrase; Tampered when the
/// key checks out but the tag fails, or for a malformed header or payload;
/// BadVersion for an unknown format version.
Vault open_vault(const std::string& path, std::string_view passphrase);

/// Argon2id with the given cost; used for the vault key and for
/// passphrase verifiers.
SecretKey derive_key(std::string_view passphrase, std::span<const std::uint8_t, 16> salt,
                     std::uint32_t memory_bytes, std::uint32_t iterations);

std::string lock_path_for(const std::string& vault_path);

} // namespace credmask::vault
