#include "credmask/store.hpp"

#include "credmask/error.hpp"
#include "sodium_support.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

namespace fs = std::filesystem;

namespace credmask::store {

namespace {

constexpr std::string_view kSqliteMagic{"SQLite format 3\0", 16};
constexpr std::uint8_t kDumpVersion = 0x01;

std::string quote_ident(std::string_view name)
{
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

bool iequals(std::string_view a, std::string_view b)
{
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
    });
}

class Statement {
public:
    Statement(sqlite3* db, const std::string& sql) : db_(db)
    {
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK) {
            fail(ErrorCode::IoError, std::string("prepare failed: ") + sqlite3_errmsg(db));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    /// True while a row is available.
    bool step()
    {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) {
            return true;
        }
        if (rc == SQLITE_DONE) {
            return false;
        }
        if (rc == SQLITE_BUSY || rc == SQLITE_LOCKED) {
            fail(ErrorCode::StoreBusy, sqlite3_errmsg(db_));
        }
        if (rc == SQLITE_CONSTRAINT) {
            fail(ErrorCode::RowIdConflict, sqlite3_errmsg(db_));
        }
        fail(ErrorCode::IoError, sqlite3_errmsg(db_));
    }

    void reset()
    {
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }

    void bind_int(int index, std::int64_t v) { check(sqlite3_bind_int64(stmt_, index, v)); }
    void bind_text(int index, std::string_view v)
    {
        check(sqlite3_bind_text(stmt_, index, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    }

    void bind_cell(int index, const Cell& cell)
    {
        switch (cell.type) {
        case CellType::Null:
            check(sqlite3_bind_null(stmt_, index));
            break;
        case CellType::Integer:
            check(sqlite3_bind_int64(stmt_, index, cell.as_integer()));
            break;
        case CellType::Real: {
            ByteReader r(cell.value);
            check(sqlite3_bind_double(stmt_, index, r.f64()));
            break;
        }
        case CellType::Text:
            check(sqlite3_bind_text(stmt_, index, reinterpret_cast<const char*>(cell.value.data()),
                                    static_cast<int>(cell.value.size()), SQLITE_TRANSIENT));
            break;
        case CellType::Blob:
            // A null data pointer would bind SQL NULL; zero-length blobs stay blobs.
            if (cell.value.empty()) {
                check(sqlite3_bind_zeroblob(stmt_, index, 0));
            } else {
                check(sqlite3_bind_blob(stmt_, index, cell.value.data(), static_cast<int>(cell.value.size()),
                                        SQLITE_TRANSIENT));
            }
            break;
        }
    }

    [[nodiscard]] std::int64_t column_int(int index) const { return sqlite3_column_int64(stmt_, index); }
    [[nodiscard]] std::string column_text(int index) const
    {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, index));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, index))) : std::string();
    }

    [[nodiscard]] Cell column_cell(int index, std::string name) const
    {
        switch (sqlite3_column_type(stmt_, index)) {
        case SQLITE_INTEGER:
            return Cell::integer(std::move(name), sqlite3_column_int64(stmt_, index));
        case SQLITE_FLOAT:
            return Cell::real(std::move(name), sqlite3_column_double(stmt_, index));
        case SQLITE_TEXT:
            return Cell::text(std::move(name), column_text(index));
        case SQLITE_BLOB: {
            const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt_, index));
            const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt_, index));
            return Cell::blob(std::move(name), p ? Bytes(p, p + n) : Bytes{});
        }
        default:
            return Cell::null(std::move(name));
        }
    }

private:
    void check(int rc) const
    {
        if (rc != SQLITE_OK) {
            fail(ErrorCode::IoError, std::string("bind failed: ") + sqlite3_errmsg(db_));
        }
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const std::string& sql)
{
    char* err = nullptr;
    const int rc = sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        std::string msg = err ? err : sqlite3_errstr(rc);
        sqlite3_free(err);
        if (rc == SQLITE_BUSY || rc == SQLITE_LOCKED) {
            fail(ErrorCode::StoreBusy, msg);
        }
        fail(ErrorCode::IoError, msg);
    }
}

/// Rolls back unless commit() was reached.
class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
    ~Transaction()
    {
        if (!done_) {
            sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
        }
    }
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;

    void commit()
    {
        exec(db_, "COMMIT");
        done_ = true;
    }

private:
    sqlite3* db_;
    bool done_ = false;
};

bool has_sqlite_header(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    char header[16] = {};
    in.read(header, sizeof header);
    return in.gcount() == sizeof header && std::string_view(header, sizeof header) == kSqliteMagic;
}

bool table_exists(sqlite3* db, std::string_view table)
{
    Statement st(db, "SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = ?1");
    st.bind_text(1, table);
    return st.step();
}

sqlite3* open_raw(const std::string& path, int flags)
{
    sqlite3* db = nullptr;
    const int rc = sqlite3_open_v2(path.c_str(), &db, flags, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
        sqlite3_close_v2(db);
        fail(ErrorCode::IoError, "cannot open " + path + ": " + msg);
    }
    sqlite3_busy_timeout(db, 0);
    return db;
}

} // namespace

Cell Cell::null(std::string column)
{
    return {std::move(column), CellType::Null, {}};
}

Cell Cell::integer(std::string column, std::int64_t v)
{
    ByteWriter w;
    w.i64(v);
    return {std::move(column), CellType::Integer, std::move(w).take()};
}

Cell Cell::real(std::string column, double v)
{
    ByteWriter w;
    w.f64(v);
    return {std::move(column), CellType::Real, std::move(w).take()};
}

Cell Cell::text(std::string column, std::string_view v)
{
    return {std::move(column), CellType::Text, Bytes(v.begin(), v.end())};
}

Cell Cell::blob(std::string column, Bytes v)
{
    return {std::move(column), CellType::Blob, std::move(v)};
}

std::int64_t Cell::as_integer() const
{
    if (type != CellType::Integer || value.size() != 8) {
        fail(ErrorCode::InvalidArgument, "cell " + column + " is not an integer");
    }
    ByteReader r(value);
    return r.i64();
}

const Cell* LoginRow::find(std::string_view column) const noexcept
{
    auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) { return c.column == column; });
    return it == cells.end() ? nullptr : &*it;
}

Cell* LoginRow::find(std::string_view column) noexcept
{
    auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) { return c.column == column; });
    return it == cells.end() ? nullptr : &*it;
}

void StoreHandle::DbCloser::operator()(sqlite3* db) const noexcept
{
    sqlite3_close_v2(db);
}

StoreHandle::StoreHandle(std::string path, OpenMode mode, sqlite3* db, std::optional<FileLock> lock)
    : path_(std::move(path)), mode_(mode), db_(db), lock_(std::move(lock))
{
}

StoreHandle::StoreHandle(StoreHandle&&) noexcept = default;
StoreHandle& StoreHandle::operator=(StoreHandle&&) noexcept = default;
StoreHandle::~StoreHandle() = default;

void StoreHandle::introspect()
{
    if (!table_exists(db_.get(), kLoginsTable)) {
        fail(ErrorCode::SchemaError, path_ + " has no " + std::string(kLoginsTable) + " table");
    }
    Statement st(db_.get(), "PRAGMA table_info(" + quote_ident(kLoginsTable) + ")");
    std::vector<std::string> pk_columns;
    std::string pk_type;
    while (st.step()) {
        auto name = st.column_text(1);
        if (st.column_int(5) > 0) {
            pk_columns.push_back(name);
            pk_type = st.column_text(2);
        }
        columns_.push_back(std::move(name));
    }
    if (std::find(columns_.begin(), columns_.end(), kHostnameColumn) == columns_.end()) {
        fail(ErrorCode::SchemaError, std::string(kLoginsTable) + " has no hostname column");
    }
    if (pk_columns.size() == 1 && iequals(pk_type, "INTEGER")) {
        rowid_alias_ = pk_columns.front();
    }
}

void StoreHandle::require_writable() const
{
    if (mode_ != OpenMode::ReadWrite) {
        fail(ErrorCode::ReadOnly, "store opened read-only: " + path_);
    }
}

std::vector<LoginRow> StoreHandle::query_rows(const std::string& where_clause, std::string_view bound_text) const
{
    std::string sql = "SELECT rowid";
    for (const auto& c : columns_) {
        sql += ", " + quote_ident(c);
    }
    sql += " FROM " + quote_ident(kLoginsTable) + where_clause + " ORDER BY rowid";
    Statement st(db_.get(), sql);
    if (!where_clause.empty()) {
        st.bind_text(1, bound_text);
    }
    std::vector<LoginRow> rows;
    while (st.step()) {
        LoginRow row;
        row.row_id = st.column_int(0);
        row.cells.reserve(columns_.size());
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            row.cells.push_back(st.column_cell(static_cast<int>(i) + 1, columns_[i]));
        }
        if (const Cell* host = row.find(kHostnameColumn);
            host && (host->type == CellType::Text || host->type == CellType::Blob)) {
            row.hostname = host->as_text();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<LoginRow> StoreHandle::list_logins() const
{
    return query_rows({}, {});
}

std::vector<LoginRow> StoreHandle::rows_for_host(std::string_view hostname) const
{
    return query_rows(" WHERE " + quote_ident(kHostnameColumn) + " = ?1", hostname);
}

std::vector<std::string> StoreHandle::list_disabled_hosts() const
{
    std::vector<std::string> hosts;
    if (!table_exists(db_.get(), kDisabledHostsTable)) {
        return hosts;
    }
    Statement st(db_.get(), "SELECT " + quote_ident(kHostnameColumn) + " FROM " +
                                quote_ident(kDisabledHostsTable) + " ORDER BY rowid");
    while (st.step()) {
        hosts.push_back(st.column_text(0));
    }
    return hosts;
}

Bytes StoreHandle::dump_canonical() const
{
    return encode_canonical(list_logins());
}

RowId StoreHandle::max_row_id() const
{
    Statement st(db_.get(), "SELECT COALESCE(MAX(rowid), 0) FROM " + quote_ident(kLoginsTable));
    st.step();
    return st.column_int(0);
}

bool StoreHandle::row_exists(RowId id) const
{
    Statement st(db_.get(), "SELECT 1 FROM " + quote_ident(kLoginsTable) + " WHERE rowid = ?1");
    st.bind_int(1, id);
    return st.step();
}

std::size_t StoreHandle::delete_rows(const std::set<RowId>& row_ids)
{
    apply(row_ids, {});
    return row_ids.size();
}

std::size_t StoreHandle::insert_rows(std::span<const LoginRow> rows)
{
    apply({}, rows);
    return rows.size();
}

void StoreHandle::insert_one(const LoginRow& row)
{
    // Cells may arrive in any order; bind them in schema order.
    std::string sql = "INSERT INTO " + quote_ident(kLoginsTable) + " (";
    std::string values;
    const bool explicit_rowid = !rowid_alias_.has_value();
    if (explicit_rowid) {
        sql += "rowid";
        values += "?";
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i > 0 || explicit_rowid) {
            sql += ", ";
            values += ", ";
        }
        sql += quote_ident(columns_[i]);
        values += "?";
    }
    sql += ") VALUES (" + values + ")";
    Statement st(db_.get(), sql);
    int index = 1;
    if (explicit_rowid) {
        st.bind_int(index++, row.row_id);
    }
    for (const auto& column : columns_) {
        st.bind_cell(index++, *row.find(column));
    }
    st.step();
}

void StoreHandle::apply(const std::set<RowId>& remove, std::span<const LoginRow> add)
{
    require_writable();
    if (remove.empty() && add.empty()) {
        return;
    }
    const std::set<std::string> schema_set(columns_.begin(), columns_.end());
    std::set<RowId> incoming;
    for (const auto& row : add) {
        std::set<std::string> cols;
        for (const auto& c : row.cells) {
            cols.insert(c.column);
        }
        if (cols != schema_set || row.cells.size() != columns_.size()) {
            fail(ErrorCode::SchemaMismatch, "row " + std::to_string(row.row_id) + " does not match the store schema");
        }
        if (rowid_alias_) {
            const Cell* pk = row.find(*rowid_alias_);
            if (pk->type != CellType::Integer || pk->as_integer() != row.row_id) {
                fail(ErrorCode::InvalidArgument, "row_id disagrees with primary key cell");
            }
        }
        if (!incoming.insert(row.row_id).second) {
            fail(ErrorCode::RowIdConflict, "duplicate row_id " + std::to_string(row.row_id) + " in insert batch");
        }
    }

    Transaction tx(db_.get());
    for (RowId id : remove) {
        if (!row_exists(id)) {
            fail(ErrorCode::RowNotFound, "no row with id " + std::to_string(id));
        }
    }
    if (!remove.empty()) {
        Statement del(db_.get(), "DELETE FROM " + quote_ident(kLoginsTable) + " WHERE rowid = ?1");
        for (RowId id : remove) {
            del.reset();
            del.bind_int(1, id);
            del.step();
        }
    }
    for (const auto& row : add) {
        if (row_exists(row.row_id)) {
            fail(ErrorCode::RowIdConflict, "row_id " + std::to_string(row.row_id) + " already present");
        }
        insert_one(row);
    }
    tx.commit();
}

StoreHandle open_store(const std::string& path, OpenMode mode)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorCode::IoError, "no such store file: " + path);
    }
    if (!has_sqlite_header(path)) {
        fail(ErrorCode::NotADatabase, path + " is not an SQLite database");
    }
    std::optional<FileLock> lock;
    int flags = SQLITE_OPEN_READONLY;
    if (mode == OpenMode::ReadWrite) {
        lock.emplace(path, false, ErrorCode::StoreBusy);
        flags = SQLITE_OPEN_READWRITE;
    }
    StoreHandle handle(path, mode, open_raw(path, flags), std::move(lock));
    try {
        handle.introspect();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) {
            // Header looked right but the pages do not parse.
            fail(ErrorCode::NotADatabase, e.what());
        }
        throw;
    }
    return handle;
}

const std::vector<std::string>& canonical_columns()
{
    static const std::vector<std::string> columns = {
        "id",           "hostname",          "httpRealm",         "formSubmitURL", "usernameField",
        "passwordField", "encryptedUsername", "encryptedPassword", "guid",          "encType",
    };
    return columns;
}

LoginRow canonical_row(RowId id, std::string_view hostname, std::string_view encrypted_username,
                       std::string_view encrypted_password, std::string_view guid)
{
    LoginRow row;
    row.row_id = id;
    row.hostname = std::string(hostname);
    row.cells = {
        Cell::integer("id", id),
        Cell::text("hostname", hostname),
        Cell::null("httpRealm"),
        Cell::text("formSubmitURL", hostname),
        Cell::text("usernameField", "username"),
        Cell::text("passwordField", "password"),
        Cell::text("encryptedUsername", encrypted_username),
        Cell::text("encryptedPassword", encrypted_password),
        Cell::text("guid", guid),
        Cell::integer("encType", 1),
    };
    return row;
}

std::string fixture_hostname(std::size_t index)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "https://site%02zu.example", index);
    return buf;
}

std::vector<LoginRow> fixture_rows(std::size_t rows, std::size_t hosts, std::uint64_t seed)
{
    if (hosts == 0 || rows < hosts) {
        fail(ErrorCode::InvalidArgument, "fixture needs at least one row per host");
    }
    static constexpr std::string_view kAlphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::mt19937_64 rng(seed);
    auto token = [&](std::size_t n) {
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            out += kAlphabet[rng() % kAlphabet.size()];
        }
        return out;
    };
    std::vector<LoginRow> out;
    for (std::size_t k = 0; k < rows; ++k) {
        char guid[48];
        std::snprintf(guid, sizeof guid, "{%08llx-%04llx-%04llx}", static_cast<unsigned long long>(rng() >> 32),
                      static_cast<unsigned long long>(rng() >> 48), static_cast<unsigned long long>(rng() >> 48));
        const auto user = "MD" + token(30);
        const auto pass = "MD" + token(38);
        out.push_back(canonical_row(static_cast<RowId>(k + 1), fixture_hostname(k % hosts), user, pass, guid));
    }
    return out;
}

StoreHandle init_fixture(const std::string& path, std::span<const LoginRow> rows,
                         std::span<const std::string> disabled)
{
    std::error_code ec;
    if (fs::exists(fs::symlink_status(path, ec))) {
        fail(ErrorCode::AlreadyExists, path + " already exists");
    }
    {
        std::unique_ptr<sqlite3, void (*)(sqlite3*)> db(
            open_raw(path, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE),
            [](sqlite3* p) { sqlite3_close_v2(p); });
        exec(db.get(), "CREATE TABLE moz_logins ("
                       "id INTEGER PRIMARY KEY, hostname TEXT NOT NULL, httpRealm TEXT, formSubmitURL TEXT, "
                       "usernameField TEXT NOT NULL, passwordField TEXT NOT NULL, "
                       "encryptedUsername TEXT NOT NULL, encryptedPassword TEXT NOT NULL, "
                       "guid TEXT, encType INTEGER);"
                       "CREATE INDEX moz_logins_hostname_index ON moz_logins (hostname);"
                       "CREATE TABLE moz_disabledHosts (id INTEGER PRIMARY KEY, hostname TEXT UNIQUE ON CONFLICT REPLACE);");
        Statement st(db.get(), "INSERT INTO moz_disabledHosts (hostname) VALUES (?1)");
        for (const auto& host : disabled) {
            st.reset();
            st.bind_text(1, host);
            st.step();
        }
    }
    auto handle = open_store(path, OpenMode::ReadWrite);
    handle.insert_rows(rows);
    return handle;
}

void check_not_busy(const std::string& path, std::string_view browser_lock_file)
{
    if (!browser_lock_file.empty()) {
        const auto sibling = fs::path(path).parent_path() / browser_lock_file;
        std::error_code ec;
        if (fs::exists(fs::symlink_status(sibling, ec))) {
            fail(ErrorCode::StoreBusy, "browser lock file present: " + sibling.string());
        }
    }
    std::unique_ptr<sqlite3, void (*)(sqlite3*)> db(open_raw(path, SQLITE_OPEN_READWRITE),
                                                    [](sqlite3* p) { sqlite3_close_v2(p); });
    char* err = nullptr;
    const int rc = sqlite3_exec(db.get(), "BEGIN EXCLUSIVE", nullptr, nullptr, &err);
    sqlite3_free(err);
    if (rc == SQLITE_BUSY || rc == SQLITE_LOCKED) {
        fail(ErrorCode::StoreBusy, "database lock held on " + path);
    }
    if (rc != SQLITE_OK) {
        fail(ErrorCode::IoError, std::string("lock probe failed: ") + sqlite3_errstr(rc));
    }
    sqlite3_exec(db.get(), "ROLLBACK", nullptr, nullptr, nullptr);
}

KeyStoreDigest keystore_digest(const std::string& path)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorCode::MissingKeyStore, "key store not found: " + path);
    }
    detail::ensure_sodium();
    const Bytes content = read_file(path);
    KeyStoreDigest out;
    out.path = path;
    crypto_hash_sha256(out.digest.data(), content.data(), content.size());
    return out;
}

void write_cell_value(ByteWriter& out, const Cell& cell)
{
    if (cell.type == CellType::Null) {
        out.u32(0xFFFFFFFFu);
        return;
    }
    out.u32(static_cast<std::uint32_t>(cell.value.size()));
    out.raw(cell.value);
}

Bytes encode_canonical(std::span<const LoginRow> rows)
{
    ByteWriter out;
    out.u8(kDumpVersion);
    for (const auto& row : rows) {
        out.i64(row.row_id);
        out.u16(static_cast<std::uint16_t>(row.cells.size()));
        for (const auto& cell : row.cells) {
            write_cell_value(out, cell);
        }
    }
    return std::move(out).take();
}

} // namespace credmask::store
