#pragma once

// Plan/apply state machine that moves a host's login rows into the vault
// and back. Ordering is chosen so that a crash at any point leaves every row
// in the store, the vault, or both:
//
//   mask:   vault commit  ->  store delete
//   unmask: store insert  ->  vault commit

#include "credmask/auth.hpp"
#include "credmask/store.hpp"
#include "credmask/vault.hpp"

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace credmask::mask {

enum class ConflictPolicy { KeepLive, OverwriteLive, Fail };

std::string_view to_string(ConflictPolicy policy) noexcept;
std::optional<ConflictPolicy> parse_conflict_policy(std::string_view text) noexcept;

struct HostSelection {
    std::string hostname;
    std::vector<store::RowId> row_ids; ///< ascending

    bool operator==(const HostSelection&) const = default;
};

struct MaskPlan {
    std::string store_path;
    std::string vault_path;
    std::vector<HostSelection> selections; ///< sorted by hostname
    std::optional<store::KeyStoreDigest> keystore_digest_before;
};

struct UnmaskPlan {
    std::string vault_path;
    std::string store_path;
    std::set<std::string> hosts;
    ConflictPolicy conflict_policy = ConflictPolicy::KeepLive;
};

enum class Mode { Normal, Masked };
std::string_view to_string(Mode mode) noexcept;

struct StatusReport {
    Mode mode = Mode::Normal;
    std::vector<std::string> masked_hosts;
    std::vector<std::string> live_hosts;
    bool keystore_ok = true;
};

struct ConflictReport {
    std::string hostname;
    std::size_t live_rows = 0;
    std::size_t vaulted_rows = 0;
    ConflictPolicy action = ConflictPolicy::KeepLive;
    std::size_t restored = 0;      ///< vaulted rows written back under their own row_id
    std::size_t remapped = 0;      ///< vaulted rows written back under a fresh row_id
    std::size_t kept_live = 0;     ///< vaulted rows dropped because a live row has the same identity
    std::size_t replaced_live = 0; ///< live rows deleted in favour of vaulted ones
};

struct UnmaskResult {
    StatusReport status;
    std::vector<ConflictReport> conflicts;
};

struct ApplyOptions {
    /// Skip the not-busy check (the store's own file lock is still taken).
    bool force = false;
    std::string browser_lock_file = std::string(store::kDefaultBrowserLockFile);
};

/// `keystore_path`, when given, is hashed into the plan (MissingKeyStore if
/// absent).
MaskPlan plan_mask(const store::StoreHandle& store, const vault::Vault& vault, const std::set<std::string>& hosts,
                   const std::optional<std::string>& keystore_path = std::nullopt);

/// Commits the vault first, then deletes from the store. StalePlan if any
/// selected host's rows changed since planning.
StatusReport apply_mask(const MaskPlan& plan, vault::Vault& vault, const ApplyOptions& options = {});

/// `hosts` = nullopt selects every vaulted host.
UnmaskPlan plan_unmask(const vault::Vault& vault, const std::string& store_path,
                       const std::optional<std::set<std::string>>& hosts, ConflictPolicy policy);

/// Authorisation is checked before the store is touched; a rejected proof
/// leaves both files untouched.
UnmaskResult apply_unmask(const UnmaskPlan& plan, vault::Vault& vault, std::span<const auth::AuthProof> proofs,
                          const ApplyOptions& options = {});

StatusReport status(const store::StoreHandle& store, const vault::Vault& vault);

/// Host -> live row count, for listing.
std::vector<std::pair<std::string, std::size_t>> host_counts(std::span<const store::LoginRow> rows);

} // namespace credmask::mask
