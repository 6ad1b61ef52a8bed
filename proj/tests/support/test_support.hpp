#pragma once

#include "credmask/minutiae.hpp"
#include "credmask/store.hpp"
#include "credmask/vault.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <random>
#include <string>
#include <vector>

namespace credmask::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::string file(std::string_view name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline constexpr std::uint32_t kFastKdfMemory = 8192;
inline constexpr std::uint32_t kFastKdfIterations = 1;
inline constexpr const char* kPassphrase = "correct horse battery staple";

/// Cheapest KDF cost the vault accepts; keeps tests fast.
vault::KdfParams fast_kdf();

struct Fixture {
    TempDir dir;
    std::string store;
    std::string keystore;
    std::string vault;
    std::vector<store::LoginRow> rows;
};

/// Canonical store with `rows` logins over `hosts` hosts plus a random
/// key3.db of `keystore_bytes` bytes next to it. The vault path is reserved
/// but not created.
std::unique_ptr<Fixture> make_fixture(std::size_t rows = 25, std::size_t hosts = 10, std::uint64_t seed = 1,
                                      std::size_t keystore_bytes = 1024);

std::array<std::uint8_t, 32> file_hash(const std::string& path);
Bytes file_bytes(const std::string& path);
void write_bytes(const std::string& path, const Bytes& bytes);

/// Rows as a multiset of full cell lists, ignoring order.
std::multiset<Bytes> row_multiset(const std::vector<store::LoginRow>& rows);

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI in-process. Passphrases are fed through a pipe named by
/// --passphrase-fd; `input` feeds menu prompts.
CliResult run_cli(std::vector<std::string> args, const std::vector<std::string>& passphrases = {},
                  const std::string& input = {});

/// Runs the real binary in a child process, optionally with a crash point
/// armed through the environment. Returns the exit status (or 128 + signal).
int spawn_cli(const std::vector<std::string>& args, const std::vector<std::string>& passphrases,
              const std::string& crash_point = {});

/// Uniform random template inside [0, w) x [0, h).
minutiae::Template random_template(std::mt19937_64& rng, std::size_t n, double w = 400, double h = 400);

double uniform(std::mt19937_64& rng, double lo, double hi);

/// Crossing-number oracle: maximal circular runs of set pixels.
int ring_runs(const std::array<std::uint8_t, 8>& ring);

/// EER oracle: brute-force FAR/FRR sweep over midpoints between distinct
/// scores, interpolated at the first point where FRR reaches FAR.
double brute_force_eer(const std::vector<double>& genuine, const std::vector<double>& impostor);

} // namespace credmask::testing
