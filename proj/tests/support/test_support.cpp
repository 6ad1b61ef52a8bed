#include "test_support.hpp"

#include "credmask/cli.hpp"
#include "credmask/fault.hpp"

#include <fcntl.h>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace credmask::testing {

namespace {

int passphrase_pipe(const std::vector<std::string>& passphrases)
{
    int fds[2];
    if (::pipe(fds) != 0) {
        throw std::runtime_error("pipe failed");
    }
    std::string payload;
    for (const auto& p : passphrases) {
        payload += p + "\n";
    }
    if (::write(fds[1], payload.data(), payload.size()) != static_cast<ssize_t>(payload.size())) {
        throw std::runtime_error("pipe write failed");
    }
    ::close(fds[1]);
    return fds[0];
}

} // namespace

TempDir::TempDir()
{
    std::string tmpl = (fs::temp_directory_path() / "credmask-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
        throw std::runtime_error("mkdtemp failed");
    }
    path_ = tmpl;
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

vault::KdfParams fast_kdf()
{
    return vault::KdfParams::with_random_salt(kFastKdfMemory, kFastKdfIterations);
}

std::unique_ptr<Fixture> make_fixture(std::size_t rows, std::size_t hosts, std::uint64_t seed,
                                      std::size_t keystore_bytes)
{
    auto f = std::make_unique<Fixture>();
    f->store = f->dir.file("signons.sqlite");
    f->keystore = f->dir.file("key3.db");
    f->vault = f->dir.file("masked.cmv");
    f->rows = store::fixture_rows(rows, hosts, seed);
    store::init_fixture(f->store, f->rows, std::vector<std::string>{"https://never.example"});
    std::mt19937_64 rng(seed * 31 + 5);
    Bytes ks(keystore_bytes);
    for (auto& b : ks) {
        b = static_cast<std::uint8_t>(rng());
    }
    write_bytes(f->keystore, ks);
    return f;
}

std::array<std::uint8_t, 32> file_hash(const std::string& path)
{
    return store::keystore_digest(path).digest;
}

Bytes file_bytes(const std::string& path)
{
    return read_file(path);
}

void write_bytes(const std::string& path, const Bytes& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) {
        throw std::runtime_error("cannot write " + path);
    }
}

std::multiset<Bytes> row_multiset(const std::vector<store::LoginRow>& rows)
{
    std::multiset<Bytes> out;
    for (const auto& r : rows) {
        auto cells = r.cells;
        std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.column < b.column; });
        ByteWriter w;
        for (const auto& c : cells) {
            w.str(c.column);
            w.u8(static_cast<std::uint8_t>(c.type));
            store::write_cell_value(w, c);
        }
        out.insert(std::move(w).take());
    }
    return out;
}

CliResult run_cli(std::vector<std::string> args, const std::vector<std::string>& passphrases,
                  const std::string& input)
{
    int fd = -1;
    if (!passphrases.empty()) {
        fd = passphrase_pipe(passphrases);
        args.insert(args.begin(), {"--passphrase-fd", std::to_string(fd)});
    }
    std::istringstream in(input);
    std::ostringstream out;
    std::ostringstream err;
    CliResult r;
    r.code = cli::run(args, in, out, err);
    if (fd >= 0) {
        ::close(fd);
    }
    r.out = out.str();
    r.err = err.str();
    return r;
}

int spawn_cli(const std::vector<std::string>& args, const std::vector<std::string>& passphrases,
              const std::string& crash_point)
{
    const int fd = passphrase_pipe(passphrases);
    std::vector<std::string> full = {CREDMASK_CLI_PATH, "--passphrase-fd", std::to_string(fd)};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : full) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid == 0) {
        if (!crash_point.empty()) {
            ::setenv(std::string(fault::kEnvVar).c_str(), crash_point.c_str(), 1);
        } else {
            ::unsetenv(std::string(fault::kEnvVar).c_str());
        }
        const int devnull = ::open("/dev/null", O_RDWR);
        ::dup2(devnull, STDIN_FILENO);
        ::dup2(devnull, STDOUT_FILENO);
        ::dup2(devnull, STDERR_FILENO);
        ::execv(argv[0], argv.data());
        ::_exit(127);
    }
    ::close(fd);
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (WIFEXITED(status)) {
        return WEXITSTATUS(status);
    }
    return 128 + WTERMSIG(status);
}

/// Oracle: number of maximal circular runs of set pixels. A full ring has
/// no transitions, hence zero.
int ring_runs(const std::array<std::uint8_t, 8>& ring)
{
    int set = 0;
    for (auto v : ring) {
        set += v;
    }
    if (set == 8) {
        return 0;
    }
    int runs = 0;
    for (int i = 0; i < 8; ++i) {
        if (ring[i] == 1 && ring[(i + 7) % 8] == 0) {
            ++runs;
        }
    }
    return runs;
}

/// Brute-force EER: sweep the midpoints between consecutive distinct scores
/// (plus one point below and one above everything), count directly, and
/// interpolate where FRR first overtakes FAR.
double brute_force_eer(const std::vector<double>& genuine, const std::vector<double>& impostor)
{
    std::set<double> distinct(genuine.begin(), genuine.end());
    distinct.insert(impostor.begin(), impostor.end());
    std::vector<double> cuts{-1.0};
    for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) {
        cuts.push_back((*it + *std::next(it)) / 2.0);
    }
    cuts.push_back(2.0);

    std::vector<double> far;
    std::vector<double> frr;
    for (double t : cuts) {
        double fa = 0;
        double fr = 0;
        for (double s : impostor) {
            fa += s >= t ? 1 : 0;
        }
        for (double s : genuine) {
            fr += s < t ? 1 : 0;
        }
        far.push_back(fa / double(impostor.size()));
        frr.push_back(fr / double(genuine.size()));
    }
    for (std::size_t k = 1; k < cuts.size(); ++k) {
        if (far[k] <= frr[k]) {
            // Intersect segment (far[k-1],frr[k-1]) -> (far[k],frr[k]) with FAR = FRR.
            const double d0 = far[k - 1] - frr[k - 1];
            const double d1 = far[k] - frr[k];
            if (d1 == 0.0) {
                return far[k];
            }
            const double w = d0 / (d0 - d1);
            return (1 - w) * far[k - 1] + w * far[k];
        }
    }
    throw std::logic_error("sweep has no crossing");
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * (double(rng() >> 11) * 0x1.0p-53);
}

minutiae::Template random_template(std::mt19937_64& rng, std::size_t n, double w, double h)
{
    minutiae::Template t;
    for (std::size_t i = 0; i < n; ++i) {
        minutiae::Minutia m;
        m.x = uniform(rng, 0, w);
        m.y = uniform(rng, 0, h);
        m.theta = uniform(rng, 0, 2 * std::numbers::pi);
        m.kind = (rng() & 1) ? minutiae::MinutiaKind::Bifurcation : minutiae::MinutiaKind::Termination;
        t.minutiae.push_back(m);
    }
    return t;
}

} // namespace credmask::testing
