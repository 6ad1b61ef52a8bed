#include "credmask/mask_engine.hpp"

#include "credmask/error.hpp"
#include "credmask/fault.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>

namespace fs = std::filesystem;

namespace credmask::mask {

namespace {

std::string absolute_path(const std::string& p)
{
    std::error_code ec;
    auto abs = fs::absolute(p, ec);
    return ec ? p : abs.lexically_normal().string();
}

/// What makes two rows "the same saved login": hostname plus the encrypted
/// username cell, or every non-key cell when that column is absent. Encoded
/// as bytes so it can key a map.
Bytes identity_of(const store::LoginRow& row, const std::optional<std::string>& alias)
{
    ByteWriter key;
    key.str(row.hostname);
    auto put = [&](const store::Cell& cell) {
        key.str(cell.column);
        key.u8(static_cast<std::uint8_t>(cell.type));
        store::write_cell_value(key, cell);
    };
    if (const auto* user = row.find(store::kUsernameColumn)) {
        put(*user);
        return std::move(key).take();
    }
    std::vector<const store::Cell*> cells;
    for (const auto& cell : row.cells) {
        if (!alias || cell.column != *alias) {
            cells.push_back(&cell);
        }
    }
    std::sort(cells.begin(), cells.end(), [](const auto* a, const auto* b) { return a->column < b->column; });
    for (const auto* cell : cells) {
        put(*cell);
    }
    return std::move(key).take();
}

store::LoginRow with_row_id(store::LoginRow row, store::RowId id, const std::optional<std::string>& alias)
{
    row.row_id = id;
    if (alias) {
        if (auto* pk = row.find(*alias)) {
            *pk = store::Cell::integer(*alias, id);
        }
    }
    return row;
}

} // namespace

std::string_view to_string(ConflictPolicy policy) noexcept
{
    switch (policy) {
    case ConflictPolicy::KeepLive:
        return "keep-live";
    case ConflictPolicy::OverwriteLive:
        return "overwrite-live";
    case ConflictPolicy::Fail:
        return "fail";
    }
    return "unknown";
}

std::optional<ConflictPolicy> parse_conflict_policy(std::string_view text) noexcept
{
    for (auto p : {ConflictPolicy::KeepLive, ConflictPolicy::OverwriteLive, ConflictPolicy::Fail}) {
        if (text == to_string(p)) {
            return p;
        }
    }
    return std::nullopt;
}

std::string_view to_string(Mode mode) noexcept
{
    return mode == Mode::Masked ? "masked" : "normal";
}

std::vector<std::pair<std::string, std::size_t>> host_counts(std::span<const store::LoginRow> rows)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& row : rows) {
        ++counts[row.hostname];
    }
    return {counts.begin(), counts.end()};
}

MaskPlan plan_mask(const store::StoreHandle& store, const vault::Vault& vault, const std::set<std::string>& hosts,
                   const std::optional<std::string>& keystore_path)
{
    if (hosts.empty()) {
        fail(ErrorCode::EmptySelection, "no hosts selected");
    }
    for (const auto& host : hosts) {
        if (vault.find(host) != nullptr) {
            fail(ErrorCode::AlreadyMasked, host + " is already masked");
        }
    }
    MaskPlan plan;
    plan.store_path = absolute_path(store.path());
    plan.vault_path = vault.path();
    for (const auto& host : hosts) {
        HostSelection sel{host, {}};
        for (const auto& row : store.rows_for_host(host)) {
            sel.row_ids.push_back(row.row_id);
        }
        if (sel.row_ids.empty()) {
            fail(ErrorCode::UnknownHost, host + " has no stored logins");
        }
        std::sort(sel.row_ids.begin(), sel.row_ids.end());
        plan.selections.push_back(std::move(sel));
    }
    if (keystore_path) {
        plan.keystore_digest_before = store::keystore_digest(*keystore_path);
    }
    return plan;
}

StatusReport apply_mask(const MaskPlan& plan, vault::Vault& vault, const ApplyOptions& options)
{
    if (plan.selections.empty()) {
        fail(ErrorCode::EmptySelection, "plan selects no hosts");
    }
    if (!options.force) {
        store::check_not_busy(plan.store_path, options.browser_lock_file);
    }
    auto store = store::open_store(plan.store_path, store::OpenMode::ReadWrite);

    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    std::vector<vault::VaultEntry> entries;
    std::set<store::RowId> doomed;
    for (const auto& sel : plan.selections) {
        if (vault.find(sel.hostname) != nullptr) {
            fail(ErrorCode::StalePlan, sel.hostname + " was masked after the plan was made");
        }
        auto rows = store.rows_for_host(sel.hostname);
        std::vector<store::RowId> ids;
        for (const auto& r : rows) {
            ids.push_back(r.row_id);
        }
        if (ids != sel.row_ids) {
            fail(ErrorCode::StalePlan, "rows for " + sel.hostname + " changed since the plan was made");
        }
        doomed.insert(ids.begin(), ids.end());
        entries.push_back(vault::VaultEntry{sel.hostname, std::move(rows), now, plan.store_path, store.schema()});
    }

    std::set<std::string> added;
    for (const auto& e : entries) {
        added.insert(e.hostname);
    }
    const auto previous_keystore = vault.keystore();
    vault.put_entries(std::move(entries));
    if (!vault.keystore() && plan.keystore_digest_before) {
        vault.record_keystore(*plan.keystore_digest_before);
    }
    try {
        vault.commit();
    } catch (...) {
        // Keep the in-memory vault equal to what is on disk.
        vault.take_entries(added);
        if (!previous_keystore) {
            vault.clear_keystore();
        }
        throw;
    }
    fault::point(fault::kAfterVaultCommit);

    store.apply(doomed, {});
    fault::point(fault::kAfterStoreDelete);

    return status(store, vault);
}

UnmaskPlan plan_unmask(const vault::Vault& vault, const std::string& store_path,
                       const std::optional<std::set<std::string>>& hosts, ConflictPolicy policy)
{
    if (vault.entries().empty()) {
        fail(ErrorCode::NothingMasked, "the vault holds no masked hosts");
    }
    UnmaskPlan plan;
    plan.vault_path = vault.path();
    plan.store_path = absolute_path(store_path);
    plan.conflict_policy = policy;
    if (!hosts) {
        for (const auto& e : vault.entries()) {
            plan.hosts.insert(e.hostname);
        }
        return plan;
    }
    if (hosts->empty()) {
        fail(ErrorCode::EmptySelection, "no hosts selected");
    }
    for (const auto& h : *hosts) {
        if (vault.find(h) == nullptr) {
            fail(ErrorCode::UnknownHost, h + " is not masked");
        }
    }
    plan.hosts = *hosts;
    return plan;
}

UnmaskResult apply_unmask(const UnmaskPlan& plan, vault::Vault& vault, std::span<const auth::AuthProof> proofs,
                          const ApplyOptions& options)
{
    auth::require_authorized(vault, proofs);

    if (plan.hosts.empty()) {
        fail(ErrorCode::EmptySelection, "plan selects no hosts");
    }
    std::vector<const vault::VaultEntry*> entries;
    for (const auto& h : plan.hosts) {
        const auto* e = vault.find(h);
        if (e == nullptr) {
            fail(ErrorCode::StalePlan, h + " is no longer masked");
        }
        entries.push_back(e);
    }
    if (!options.force) {
        store::check_not_busy(plan.store_path, options.browser_lock_file);
    }
    auto store = store::open_store(plan.store_path, store::OpenMode::ReadWrite);
    const auto& alias = store.rowid_alias();

    const auto live = store.list_logins();
    std::map<store::RowId, const store::LoginRow*> live_by_id;
    std::multimap<Bytes, const store::LoginRow*> live_by_identity;
    std::map<std::string, std::size_t> live_per_host;
    for (const auto& row : live) {
        live_by_id[row.row_id] = &row;
        live_by_identity.emplace(identity_of(row, alias), &row);
        ++live_per_host[row.hostname];
    }

    store::RowId next_id = store.max_row_id();
    for (const auto* e : entries) {
        for (const auto& row : e->rows) {
            next_id = std::max(next_id, row.row_id);
        }
    }

    std::set<store::RowId> remove;
    std::vector<store::LoginRow> add;
    std::vector<ConflictReport> conflicts;
    for (const auto* e : entries) {
        ConflictReport report;
        report.hostname = e->hostname;
        report.live_rows = live_per_host.contains(e->hostname) ? live_per_host[e->hostname] : 0;
        report.vaulted_rows = e->rows.size();
        report.action = plan.conflict_policy;

        bool any_collision = report.live_rows > 0;
        for (const auto& row : e->rows) {
            const auto same = live_by_identity.equal_range(identity_of(row, alias));
            const bool id_taken = live_by_id.contains(row.row_id);
            switch (plan.conflict_policy) {
            case ConflictPolicy::Fail:
                if (id_taken || same.first != same.second) {
                    any_collision = true;
                }
                add.push_back(row);
                ++report.restored;
                break;
            case ConflictPolicy::KeepLive:
                if (same.first != same.second) {
                    ++report.kept_live;
                    any_collision = true;
                } else if (id_taken) {
                    add.push_back(with_row_id(row, ++next_id, alias));
                    ++report.remapped;
                    any_collision = true;
                } else {
                    add.push_back(row);
                    ++report.restored;
                }
                break;
            case ConflictPolicy::OverwriteLive:
                for (auto it = same.first; it != same.second; ++it) {
                    if (remove.insert(it->second->row_id).second) {
                        ++report.replaced_live;
                    }
                }
                if (id_taken && remove.insert(row.row_id).second) {
                    ++report.replaced_live;
                }
                any_collision = any_collision || id_taken || same.first != same.second;
                add.push_back(row);
                ++report.restored;
                break;
            }
        }
        if (any_collision) {
            conflicts.push_back(report);
        }
    }

    if (plan.conflict_policy == ConflictPolicy::Fail && !conflicts.empty()) {
        std::string hosts;
        for (const auto& c : conflicts) {
            hosts += hosts.empty() ? "" : ", ";
            hosts += c.hostname;
        }
        fail(ErrorCode::UnresolvedConflict, "live rows collide with vaulted rows for: " + hosts);
    }

    store.apply(remove, add);
    fault::point(fault::kAfterStoreInsert);

    auto taken = vault.take_entries(plan.hosts);
    const auto previous_keystore = vault.keystore();
    if (vault.entries().empty()) {
        vault.clear_keystore();
    }
    try {
        vault.commit();
    } catch (...) {
        vault.put_entries(std::move(taken));
        if (previous_keystore) {
            vault.record_keystore(*previous_keystore);
        }
        throw;
    }

    return UnmaskResult{status(store, vault), std::move(conflicts)};
}

StatusReport status(const store::StoreHandle& store, const vault::Vault& vault)
{
    StatusReport report;
    report.masked_hosts = vault.hostnames();
    std::sort(report.masked_hosts.begin(), report.masked_hosts.end());
    report.mode = report.masked_hosts.empty() ? Mode::Normal : Mode::Masked;
    for (const auto& [host, count] : host_counts(store.list_logins())) {
        report.live_hosts.push_back(host);
    }
    if (const auto& recorded = vault.keystore()) {
        try {
            report.keystore_ok = store::keystore_digest(recorded->path).digest == recorded->digest;
        } catch (const Error&) {
            report.keystore_ok = false;
        }
    }
    return report;
}

} // namespace credmask::mask
