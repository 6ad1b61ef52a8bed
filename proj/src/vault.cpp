#include "credmask/vault.hpp"

#include "credmask/error.hpp"
#include "credmask/fault.hpp"
#include "sodium_support.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <filesystem>
#include <unistd.h>

namespace fs = std::filesystem;

namespace credmask::vault {

namespace {

constexpr std::string_view kMagic = "CMV1";
constexpr std::uint8_t kPayloadVersion = 1;
constexpr std::uint32_t kMinMemory = crypto_pwhash_MEMLIMIT_MIN;
constexpr std::uint32_t kMaxMemory = 1u << 30;
constexpr std::uint32_t kMaxIterations = 64;
constexpr std::size_t kNonceSize = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;

static_assert(crypto_aead_xchacha20poly1305_ietf_ABYTES == kTagSize);
static_assert(crypto_aead_xchacha20poly1305_ietf_KEYBYTES == 32);
static_assert(crypto_pwhash_SALTBYTES == 16);
static_assert(kNonceSize == 24);

constexpr std::string_view kKeyCheckLabel = "credmask vault key check v1";

std::array<std::uint8_t, kKeyCheckSize> key_check(const SecretKey& key)
{
    std::array<std::uint8_t, kKeyCheckSize> out{};
    crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(kKeyCheckLabel.data()),
                       kKeyCheckLabel.size(), key.bytes.data(), key.bytes.size());
    return out;
}

Bytes encode_header(const KdfParams& kdf, std::span<const std::uint8_t> nonce, const SecretKey& key)
{
    ByteWriter w;
    w.raw(kMagic);
    w.u16(kFormatVersion);
    w.u32(kdf.memory_bytes);
    w.u32(kdf.iterations);
    w.u8(kdf.parallelism);
    w.raw(kdf.salt);
    w.raw(nonce);
    w.raw(key_check(key));
    return std::move(w).take();
}

void write_row(ByteWriter& w, const store::LoginRow& row)
{
    w.i64(row.row_id);
    w.str(row.hostname);
    w.u16(static_cast<std::uint16_t>(row.cells.size()));
    for (const auto& cell : row.cells) {
        w.str(cell.column);
        w.u8(static_cast<std::uint8_t>(cell.type));
        store::write_cell_value(w, cell);
    }
}

store::LoginRow read_row(ByteReader& r)
{
    store::LoginRow row;
    row.row_id = r.i64();
    row.hostname = r.str();
    const auto ncells = r.u16();
    for (std::uint16_t i = 0; i < ncells; ++i) {
        store::Cell cell;
        cell.column = r.str();
        const auto type = r.u8();
        if (type > static_cast<std::uint8_t>(store::CellType::Blob)) {
            fail(ErrorCode::BadFormat, "unknown cell type");
        }
        cell.type = static_cast<store::CellType>(type);
        const auto len = r.u32();
        if (len == 0xFFFFFFFFu) {
            if (cell.type != store::CellType::Null) {
                fail(ErrorCode::BadFormat, "NULL length on non-null cell");
            }
        } else {
            auto bytes = r.raw(len);
            cell.value.assign(bytes.begin(), bytes.end());
        }
        row.cells.push_back(std::move(cell));
    }
    return row;
}

void write_template(ByteWriter& w, const minutiae::Template& t)
{
    w.str(t.source_id);
    w.u32(static_cast<std::uint32_t>(t.size()));
    for (const auto& m : t.minutiae) {
        w.f64(m.x);
        w.f64(m.y);
        w.f64(m.theta);
        w.u8(static_cast<std::uint8_t>(m.kind));
    }
}

minutiae::Template read_template(ByteReader& r)
{
    minutiae::Template t;
    t.source_id = r.str();
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        minutiae::Minutia m;
        m.x = r.f64();
        m.y = r.f64();
        m.theta = r.f64();
        const auto kind = r.u8();
        if (kind > 1) {
            fail(ErrorCode::BadFormat, "unknown minutia kind");
        }
        m.kind = static_cast<minutiae::MinutiaKind>(kind);
        t.minutiae.push_back(m);
    }
    return t;
}

void sync_fd(int fd, const std::string& what)
{
    if (::fsync(fd) != 0) {
        fail(ErrorCode::IoError, "fsync " + what + ": " + std::strerror(errno));
    }
}

/// Temp file, fsync, rename over the target, fsync the directory.
void atomic_replace(const std::string& path, std::span<const std::uint8_t> content)
{
    const std::string tmp = path + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
    if (fd < 0) {
        fail(ErrorCode::IoError, "cannot create " + tmp + ": " + std::strerror(errno));
    }
    std::size_t written = 0;
    while (written < content.size()) {
        const auto n = ::write(fd, content.data() + written, content.size() - written);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            const int err = errno;
            ::close(fd);
            ::unlink(tmp.c_str());
            fail(ErrorCode::IoError, "write " + tmp + ": " + std::strerror(err));
        }
        written += static_cast<std::size_t>(n);
    }
    try {
        sync_fd(fd, tmp);
    } catch (...) {
        ::close(fd);
        ::unlink(tmp.c_str());
        throw;
    }
    ::close(fd);

    fault::point(fault::kVaultBeforeRename);

    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        const int err = errno;
        ::unlink(tmp.c_str());
        fail(ErrorCode::IoError, "rename " + tmp + ": " + std::strerror(err));
    }
    auto dir = fs::path(path).parent_path();
    if (dir.empty()) {
        dir = ".";
    }
    const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (dfd >= 0) {
        ::fsync(dfd);
        ::close(dfd);
    }
}

InstanceId random_instance()
{
    detail::ensure_sodium();
    InstanceId id;
    randombytes_buf(id.data(), id.size());
    return id;
}

} // namespace

KdfParams KdfParams::with_random_salt(std::uint32_t memory_bytes, std::uint32_t iterations)
{
    detail::ensure_sodium();
    KdfParams p;
    p.memory_bytes = memory_bytes;
    p.iterations = iterations;
    randombytes_buf(p.salt.data(), p.salt.size());
    return p;
}

void KdfParams::validate(ErrorCode code) const
{
    if (memory_bytes < kMinMemory || memory_bytes > kMaxMemory) {
        fail(code, "kdf memory cost out of range");
    }
    if (iterations < 1 || iterations > kMaxIterations) {
        fail(code, "kdf iteration count out of range");
    }
    if (parallelism != 1) {
        fail(code, "kdf parallelism must be 1");
    }
}

void VaultEntry::validate() const
{
    if (rows.empty()) {
        fail(ErrorCode::InvalidEntry, "entry for " + hostname + " has no rows");
    }
    for (const auto& row : rows) {
        if (row.hostname != hostname) {
            fail(ErrorCode::InvalidEntry, "row " + std::to_string(row.row_id) + " does not belong to " + hostname);
        }
    }
}

SecretKey::~SecretKey()
{
    sodium_memzero(bytes.data(), bytes.size());
}

SecretKey::SecretKey(SecretKey&& other) noexcept : bytes(other.bytes)
{
    sodium_memzero(other.bytes.data(), other.bytes.size());
}

SecretKey& SecretKey::operator=(SecretKey&& other) noexcept
{
    if (this != &other) {
        bytes = other.bytes;
        sodium_memzero(other.bytes.data(), other.bytes.size());
    }
    return *this;
}

SecretKey derive_key(std::string_view passphrase, std::span<const std::uint8_t, 16> salt,
                     std::uint32_t memory_bytes, std::uint32_t iterations)
{
    detail::ensure_sodium();
    SecretKey key;
    if (crypto_pwhash(key.bytes.data(), key.bytes.size(), passphrase.data(), passphrase.size(), salt.data(),
                      iterations, memory_bytes, crypto_pwhash_ALG_ARGON2ID13) != 0) {
        fail(ErrorCode::IoError, "key derivation failed (out of memory?)");
    }
    return key;
}

std::string lock_path_for(const std::string& vault_path)
{
    return vault_path + ".lock";
}

Vault::Vault(std::string path, FileLock lock, KdfParams kdf, SecretKey key)
    : path_(std::move(path)), lock_(std::move(lock)), kdf_(kdf), key_(std::move(key)), instance_(random_instance())
{
}

bool Vault::passphrase_opens(std::string_view passphrase) const
{
    if (passphrase.empty()) {
        return false;
    }
    const SecretKey candidate = derive_key(passphrase, kdf_.salt, kdf_.memory_bytes, kdf_.iterations);
    return sodium_memcmp(candidate.bytes.data(), key_.bytes.data(), key_.bytes.size()) == 0;
}

const VaultEntry* Vault::find(std::string_view hostname) const noexcept
{
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.hostname == hostname; });
    return it == entries_.end() ? nullptr : &*it;
}

std::vector<std::string> Vault::hostnames() const
{
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        out.push_back(e.hostname);
    }
    return out;
}

void Vault::put_entries(std::vector<VaultEntry> entries)
{
    std::set<std::string> seen;
    for (const auto& e : entries) {
        e.validate();
        if (find(e.hostname) != nullptr || !seen.insert(e.hostname).second) {
            fail(ErrorCode::DuplicateHost, e.hostname + " is already in the vault");
        }
    }
    for (auto& e : entries) {
        entries_.push_back(std::move(e));
    }
}

std::vector<VaultEntry> Vault::take_entries(const std::set<std::string>& hosts)
{
    for (const auto& h : hosts) {
        if (find(h) == nullptr) {
            fail(ErrorCode::UnknownHost, h + " is not in the vault");
        }
    }
    std::vector<VaultEntry> taken;
    std::vector<VaultEntry> kept;
    for (auto& e : entries_) {
        (hosts.contains(e.hostname) ? taken : kept).push_back(std::move(e));
    }
    entries_ = std::move(kept);
    return taken;
}

const auth::PassphraseRecord* Vault::passphrase_record() const noexcept
{
    for (const auto& r : auth_records_) {
        if (const auto* p = std::get_if<auth::PassphraseRecord>(&r)) {
            return p;
        }
    }
    return nullptr;
}

const auth::FingerprintRecord* Vault::fingerprint_record() const noexcept
{
    for (const auto& r : auth_records_) {
        if (const auto* p = std::get_if<auth::FingerprintRecord>(&r)) {
            return p;
        }
    }
    return nullptr;
}

void Vault::store_auth_record(auth::AuthRecord record)
{
    const auto kind = auth::kind_of(record);
    for (auto& r : auth_records_) {
        if (auth::kind_of(r) == kind) {
            r = std::move(record);
            return;
        }
    }
    auth_records_.push_back(std::move(record));
}

Bytes Vault::serialize_payload() const
{
    ByteWriter w;
    w.u8(kPayloadVersion);
    w.u8(static_cast<std::uint8_t>(policy_));
    w.u8(keystore_ ? 1 : 0);
    if (keystore_) {
        w.str(keystore_->path);
        w.raw(keystore_->digest);
    }
    w.u32(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        w.str(e.hostname);
        w.i64(e.masked_at);
        w.str(e.store_path);
        w.u16(static_cast<std::uint16_t>(e.schema_columns.size()));
        for (const auto& c : e.schema_columns) {
            w.str(c);
        }
        w.u32(static_cast<std::uint32_t>(e.rows.size()));
        for (const auto& row : e.rows) {
            write_row(w, row);
        }
    }
    w.u32(static_cast<std::uint32_t>(auth_records_.size()));
    for (const auto& rec : auth_records_) {
        w.u8(static_cast<std::uint8_t>(auth::kind_of(rec)));
        if (const auto* p = std::get_if<auth::PassphraseRecord>(&rec)) {
            w.u32(p->memory_bytes);
            w.u32(p->iterations);
            w.raw(p->salt);
            w.raw(p->verifier);
        } else {
            const auto& f = std::get<auth::FingerprintRecord>(rec);
            w.f64(f.threshold);
            write_template(w, f.enrolled);
        }
    }
    return std::move(w).take();
}

void Vault::parse_payload(std::span<const std::uint8_t> payload)
{
    ByteReader r(payload);
    if (r.u8() != kPayloadVersion) {
        fail(ErrorCode::BadFormat, "unknown payload version");
    }
    const auto policy = r.u8();
    if (policy < 1 || policy > 3) {
        fail(ErrorCode::BadFormat, "unknown policy");
    }
    policy_ = static_cast<auth::AuthPolicy>(policy);
    if (r.u8() != 0) {
        store::KeyStoreDigest ks;
        ks.path = r.str();
        auto d = r.raw(ks.digest.size());
        std::copy(d.begin(), d.end(), ks.digest.begin());
        keystore_ = std::move(ks);
    }
    const auto n_entries = r.u32();
    for (std::uint32_t i = 0; i < n_entries; ++i) {
        VaultEntry e;
        e.hostname = r.str();
        e.masked_at = r.i64();
        e.store_path = r.str();
        const auto ncols = r.u16();
        for (std::uint16_t c = 0; c < ncols; ++c) {
            e.schema_columns.push_back(r.str());
        }
        const auto nrows = r.u32();
        for (std::uint32_t k = 0; k < nrows; ++k) {
            e.rows.push_back(read_row(r));
        }
        entries_.push_back(std::move(e));
    }
    const auto n_records = r.u32();
    for (std::uint32_t i = 0; i < n_records; ++i) {
        const auto kind = r.u8();
        if (kind == static_cast<std::uint8_t>(auth::AuthKind::Passphrase)) {
            auth::PassphraseRecord p;
            p.memory_bytes = r.u32();
            p.iterations = r.u32();
            auto salt = r.raw(p.salt.size());
            std::copy(salt.begin(), salt.end(), p.salt.begin());
            auto verifier = r.raw(p.verifier.size());
            std::copy(verifier.begin(), verifier.end(), p.verifier.begin());
            auth_records_.emplace_back(p);
        } else if (kind == static_cast<std::uint8_t>(auth::AuthKind::Fingerprint)) {
            auth::FingerprintRecord f;
            f.threshold = r.f64();
            f.enrolled = read_template(r);
            auth_records_.emplace_back(std::move(f));
        } else {
            fail(ErrorCode::BadFormat, "unknown auth record kind");
        }
    }
    if (!r.done()) {
        fail(ErrorCode::BadFormat, "trailing payload bytes");
    }
}

void Vault::commit()
{
    detail::ensure_sodium();
    std::array<std::uint8_t, kNonceSize> nonce{};
    randombytes_buf(nonce.data(), nonce.size());
    Bytes file = encode_header(kdf_, nonce, key_);
    const std::size_t header_size = file.size();
    Bytes payload = serialize_payload();
    file.resize(header_size + payload.size() + kTagSize);
    unsigned long long sealed_len = 0;
    crypto_aead_xchacha20poly1305_ietf_encrypt(file.data() + header_size, &sealed_len, payload.data(),
                                               payload.size(), file.data(), header_size, nullptr, nonce.data(),
                                               key_.bytes.data());
    sodium_memzero(payload.data(), payload.size());
    file.resize(header_size + sealed_len);
    atomic_replace(path_, file);
}

Vault create_vault(const std::string& path, std::string_view passphrase, const KdfParams& kdf)
{
    if (passphrase.empty()) {
        fail(ErrorCode::InvalidArgument, "vault passphrase must not be empty");
    }
    kdf.validate();
    FileLock lock(lock_path_for(path), true, ErrorCode::VaultLocked);
    std::error_code ec;
    if (fs::exists(fs::symlink_status(path, ec))) {
        fail(ErrorCode::AlreadyExists, path + " already exists");
    }
    Vault v(path, std::move(lock), kdf, derive_key(passphrase, kdf.salt, kdf.memory_bytes, kdf.iterations));
    v.commit();
    return v;
}

Vault open_vault(const std::string& path, std::string_view passphrase)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorCode::IoError, "no such vault: " + path);
    }
    FileLock lock(lock_path_for(path), true, ErrorCode::VaultLocked);
    const Bytes file = read_file(path);
    if (file.size() < kHeaderSize + kTagSize) {
        fail(ErrorCode::Tampered, "vault file truncated");
    }

    ByteReader header(std::span<const std::uint8_t>(file).first(kHeaderSize));
    auto magic = header.raw(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
        fail(ErrorCode::Tampered, "bad vault magic");
    }
    const auto version = header.u16();
    if (version != kFormatVersion) {
        fail(ErrorCode::BadVersion, "unsupported vault format version " + std::to_string(version));
    }
    KdfParams kdf;
    kdf.memory_bytes = header.u32();
    kdf.iterations = header.u32();
    kdf.parallelism = header.u8();
    auto salt = header.raw(kdf.salt.size());
    std::copy(salt.begin(), salt.end(), kdf.salt.begin());
    auto nonce = header.raw(kNonceSize);
    auto check = header.raw(kKeyCheckSize);
    kdf.validate(ErrorCode::Tampered);

    SecretKey key = derive_key(passphrase, kdf.salt, kdf.memory_bytes, kdf.iterations);
    if (sodium_memcmp(key_check(key).data(), check.data(), kKeyCheckSize) != 0) {
        fail(ErrorCode::WrongSecret, "wrong vault passphrase");
    }
    Bytes payload(file.size() - kHeaderSize - kTagSize);
    unsigned long long payload_len = 0;
    if (crypto_aead_xchacha20poly1305_ietf_decrypt(payload.data(), &payload_len, nullptr, file.data() + kHeaderSize,
                                                   file.size() - kHeaderSize, file.data(), kHeaderSize,
                                                   nonce.data(), key.bytes.data()) != 0) {
        fail(ErrorCode::Tampered, "vault contents fail authentication (file modified)");
    }
    payload.resize(payload_len);

    Vault v(path, std::move(lock), kdf, std::move(key));
    try {
        v.parse_payload(payload);
    } catch (const Error& e) {
        sodium_memzero(payload.data(), payload.size());
        fail(ErrorCode::Tampered, std::string("vault payload malformed: ") + e.what());
    }
    sodium_memzero(payload.data(), payload.size());
    return v;
}

} // namespace credmask::vault
