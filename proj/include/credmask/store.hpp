#pragma once

#include "credmask/byte_io.hpp"
#include "credmask/file_lock.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

struct sqlite3;

namespace credmask::store {

inline constexpr std::string_view kLoginsTable = "moz_logins";
inline constexpr std::string_view kDisabledHostsTable = "moz_disabledHosts";
inline constexpr std::string_view kHostnameColumn = "hostname";
inline constexpr std::string_view kUsernameColumn = "encryptedUsername";
/// Sibling file the browser keeps while a profile is in use (a dangling
/// symlink named `lock` on Linux Firefox profiles).
inline constexpr std::string_view kDefaultBrowserLockFile = "lock";

enum class OpenMode { ReadOnly, ReadWrite };

/// SQLite storage class of a cell. Values are kept as raw bytes:
/// Integer and Real as 8 big-endian bytes, Text and Blob verbatim.
enum class CellType : std::uint8_t { Null = 0, Integer = 1, Real = 2, Text = 3, Blob = 4 };

struct Cell {
    std::string column;
    CellType type = CellType::Null;
    Bytes value;

    static Cell null(std::string column);
    static Cell integer(std::string column, std::int64_t v);
    static Cell real(std::string column, double v);
    static Cell text(std::string column, std::string_view v);
    static Cell blob(std::string column, Bytes v);

    [[nodiscard]] std::int64_t as_integer() const;
    [[nodiscard]] std::string as_text() const { return {value.begin(), value.end()}; }

    bool operator==(const Cell&) const = default;
};

using RowId = std::int64_t;

/// One moz_logins row, every column verbatim.
struct LoginRow {
    RowId row_id = 0;
    std::string hostname;
    std::vector<Cell> cells;

    [[nodiscard]] const Cell* find(std::string_view column) const noexcept;
    Cell* find(std::string_view column) noexcept;

    bool operator==(const LoginRow&) const = default;
};

struct KeyStoreDigest {
    std::string path;
    std::array<std::uint8_t, 32> digest{};

    bool operator==(const KeyStoreDigest&) const = default;
};

class StoreHandle {
public:
    StoreHandle(StoreHandle&&) noexcept;
    StoreHandle& operator=(StoreHandle&&) noexcept;
    ~StoreHandle();

    [[nodiscard]] const std::string& path() const noexcept { return path_; }
    [[nodiscard]] OpenMode mode() const noexcept { return mode_; }
    /// moz_logins columns in declaration order, as discovered at open time.
    [[nodiscard]] const std::vector<std::string>& schema() const noexcept { return columns_; }
    /// Name of the INTEGER PRIMARY KEY column aliasing rowid, if any.
    [[nodiscard]] const std::optional<std::string>& rowid_alias() const noexcept { return rowid_alias_; }

    /// All rows ordered by row_id.
    [[nodiscard]] std::vector<LoginRow> list_logins() const;
    [[nodiscard]] std::vector<LoginRow> rows_for_host(std::string_view hostname) const;
    [[nodiscard]] std::vector<std::string> list_disabled_hosts() const;
    [[nodiscard]] Bytes dump_canonical() const;
    [[nodiscard]] RowId max_row_id() const;

    std::size_t delete_rows(const std::set<RowId>& row_ids);
    std::size_t insert_rows(std::span<const LoginRow> rows);
    /// Deletes `remove` then inserts `add` inside one transaction. Either all
    /// of it happens or none of it does.
    void apply(const std::set<RowId>& remove, std::span<const LoginRow> add);

private:
    friend StoreHandle open_store(const std::string& path, OpenMode mode);

    struct DbCloser {
        void operator()(sqlite3* db) const noexcept;
    };

    StoreHandle(std::string path, OpenMode mode, sqlite3* db, std::optional<FileLock> lock);

    void introspect();
    void require_writable() const;
    [[nodiscard]] bool row_exists(RowId id) const;
    [[nodiscard]] std::vector<LoginRow> query_rows(const std::string& where_clause,
                                                   std::string_view bound_text) const;
    void insert_one(const LoginRow& row);

    std::string path_;
    OpenMode mode_;
    std::unique_ptr<sqlite3, DbCloser> db_;
    std::optional<FileLock> lock_;
    std::vector<std::string> columns_;
    std::optional<std::string> rowid_alias_;
};

/// Opens an existing login store. Read-write handles take an exclusive
/// advisory lock on the database file for their lifetime.
StoreHandle open_store(const std::string& path, OpenMode mode);

/// Creates a store with the canonical schema, populated with `rows` and
/// `disabled`. Returns a read-write handle.
StoreHandle init_fixture(const std::string& path, std::span<const LoginRow> rows,
                         std::span<const std::string> disabled);

/// Throws StoreBusy if a database-level lock is held on `path` or the
/// browser's sibling lock file exists next to it.
void check_not_busy(const std::string& path,
                    std::string_view browser_lock_file = kDefaultBrowserLockFile);

KeyStoreDigest keystore_digest(const std::string& path);

/// Columns of the canonical fixture schema, in order.
const std::vector<std::string>& canonical_columns();

/// Builds a row in the canonical schema.
LoginRow canonical_row(RowId id, std::string_view hostname, std::string_view encrypted_username,
                       std::string_view encrypted_password, std::string_view guid);

/// Deterministic canonical-schema rows: row k (id k + 1) belongs to host
/// k mod `hosts`, so every host has at least one row when rows >= hosts.
std::vector<LoginRow> fixture_rows(std::size_t rows, std::size_t hosts, std::uint64_t seed);
std::string fixture_hostname(std::size_t index);

/// Canonical dump encoding of a row list (rows must already be sorted).
Bytes encode_canonical(std::span<const LoginRow> rows);

/// Writes one cell in the dump encoding: u32 length + bytes, NULL = 0xFFFFFFFF.
void write_cell_value(ByteWriter& out, const Cell& cell);

} // namespace credmask::store
