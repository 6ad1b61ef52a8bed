#include "credmask/cli.hpp"

#include "credmask/auth.hpp"
#include "credmask/fault.hpp"
#include "credmask/mask_engine.hpp"
#include "credmask/minutiae.hpp"
#include "credmask/store.hpp"
#include "credmask/vault.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <termios.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace credmask::cli {

namespace {

constexpr std::uint32_t kDefaultKdfMemory = 64u * 1024u * 1024u;
constexpr std::uint32_t kDefaultKdfIterations = 3;
constexpr const char* kLogOffNotice =
    "Log off and log in again so the browser reloads its saved logins. "
    "Masked sites will ask for credentials until you unmask them.";

struct Config {
    std::string lock_file = std::string(store::kDefaultBrowserLockFile);
    std::optional<std::string> vault;
};

Config load_config(const std::string& path)
{
    Config cfg;
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot read config " + path);
    }
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "lock_file") {
            cfg.lock_file = value;
        } else if (key == "vault") {
            cfg.vault = value;
        } else {
            fail(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

/// Reads passphrases from a descriptor, the terminal with echo off, or the
/// input stream, in that order of preference.
class SecretReader {
public:
    SecretReader(int fd, std::istream& in, std::ostream& err) : fd_(fd), in_(in), err_(err) {}

    std::string read(std::string_view prompt)
    {
        if (fd_ >= 0) {
            return read_fd();
        }
        err_ << prompt << std::flush;
        std::string line;
        const bool tty = &in_ == &std::cin && ::isatty(STDIN_FILENO);
        termios saved{};
        if (tty && ::tcgetattr(STDIN_FILENO, &saved) == 0) {
            termios quiet = saved;
            quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
            ::tcsetattr(STDIN_FILENO, TCSAFLUSH, &quiet);
            std::getline(in_, line);
            ::tcsetattr(STDIN_FILENO, TCSAFLUSH, &saved);
            err_ << '\n';
        } else if (!std::getline(in_, line)) {
            fail(ErrorCode::InvalidArgument, "no passphrase supplied");
        }
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        return line;
    }

    std::string read_new(std::string_view what)
    {
        auto first = read("New " + std::string(what) + ": ");
        auto second = read("Repeat " + std::string(what) + ": ");
        if (first != second) {
            fail(ErrorCode::InvalidArgument, std::string(what) + "s do not match");
        }
        if (first.empty()) {
            fail(ErrorCode::InvalidArgument, std::string(what) + " must not be empty");
        }
        return first;
    }

private:
    // One byte at a time so later lines stay in the descriptor.
    std::string read_fd()
    {
        std::string line;
        char c;
        bool any = false;
        while (true) {
            const auto n = ::read(fd_, &c, 1);
            if (n < 0 && errno == EINTR) {
                continue;
            }
            if (n <= 0) {
                break;
            }
            any = true;
            if (c == '\n') {
                break;
            }
            line += c;
        }
        if (!any) {
            fail(ErrorCode::InvalidArgument, "no passphrase available on descriptor " + std::to_string(fd_));
        }
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        return line;
    }

    int fd_;
    std::istream& in_;
    std::ostream& err_;
};

std::optional<std::string> default_keystore(const std::string& store_path)
{
    const auto dir = fs::path(store_path).parent_path();
    for (const char* name : {"key3.db", "key4.db"}) {
        std::error_code ec;
        const auto candidate = dir / name;
        if (fs::is_regular_file(candidate, ec)) {
            return candidate.string();
        }
    }
    return std::nullopt;
}

std::set<std::string> split_hosts(const std::string& csv)
{
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) {
            out.insert(item.substr(b, e - b + 1));
        }
    }
    return out;
}

/// Numbered multi-select. Accepts numbers separated by spaces or commas, or
/// "all"; an empty answer selects nothing.
std::set<std::string> choose_hosts(const std::vector<std::pair<std::string, std::size_t>>& choices,
                                   std::string_view verb, std::istream& in, std::ostream& err)
{
    if (choices.empty()) {
        fail(ErrorCode::EmptySelection, "nothing to " + std::string(verb));
    }
    err << "Sites with saved logins:\n";
    for (std::size_t i = 0; i < choices.size(); ++i) {
        err << "  " << std::setw(3) << i + 1 << ") " << choices[i].first << " (" << choices[i].second
            << (choices[i].second == 1 ? " login" : " logins") << ")\n";
    }
    err << "Select sites to " << verb << " (e.g. 1 3 5, or 'all'; empty to cancel): " << std::flush;
    std::string line;
    std::getline(in, line);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::stringstream ss(line);
    std::string tok;
    std::set<std::string> out;
    while (ss >> tok) {
        if (tok == "all") {
            for (const auto& c : choices) {
                out.insert(c.first);
            }
            continue;
        }
        std::size_t used = 0;
        long n = 0;
        try {
            n = std::stol(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || n < 1 || static_cast<std::size_t>(n) > choices.size()) {
            fail(ErrorCode::InvalidArgument, "'" + tok + "' is not a menu number");
        }
        out.insert(choices[static_cast<std::size_t>(n) - 1].first);
    }
    if (out.empty()) {
        fail(ErrorCode::EmptySelection, "no sites selected");
    }
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ")
{
    std::string out;
    for (const auto& s : items) {
        out += out.empty() ? "" : std::string(sep);
        out += s;
    }
    return out;
}

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void print_status(std::ostream& out, const mask::StatusReport& s)
{
    out << "mode: " << mask::to_string(s.mode) << '\n';
    out << "masked hosts: " << (s.masked_hosts.empty() ? "(none)" : join(s.masked_hosts)) << '\n';
    out << "live hosts: " << s.live_hosts.size() << '\n';
    out << "keystore_ok: " << (s.keystore_ok ? "yes" : "no") << '\n';
}

/// Everything the vault's policy asks for, gathered interactively.
std::vector<auth::AuthProof> collect_proofs(const vault::Vault& v, const std::string& vault_passphrase,
                                            const std::optional<std::string>& fingerprint, SecretReader& secrets)
{
    std::vector<auth::AuthProof> proofs;
    const auto required = auth::required_kinds(v.policy());
    if (required.contains(auth::AuthKind::Passphrase)) {
        if (v.passphrase_record() != nullptr) {
            proofs.push_back(auth::verify_passphrase(v, secrets.read("Authentication passphrase: ")));
        } else {
            proofs.push_back(auth::verify_passphrase(v, vault_passphrase));
        }
    }
    if (required.contains(auth::AuthKind::Fingerprint)) {
        if (!fingerprint) {
            fail(ErrorCode::PolicyUnsatisfied,
                 "policy " + std::string(auth::to_string(v.policy())) + " needs a fingerprint probe (--fingerprint)");
        }
        proofs.push_back(auth::verify_fingerprint(v, minutiae::read_min_file(*fingerprint)));
    }
    return proofs;
}

struct Globals {
    std::string config_path;
    int passphrase_fd = -1;
    Config config;
};

vault::KdfParams kdf_from(std::uint32_t memory, std::uint32_t iterations)
{
    auto kdf = vault::KdfParams::with_random_salt(memory, iterations);
    kdf.validate();
    return kdf;
}

std::string resolve_vault(const std::string& flag, const Globals& g)
{
    if (!flag.empty()) {
        return flag;
    }
    if (g.config.vault) {
        return *g.config.vault;
    }
    fail(ErrorCode::InvalidArgument, "no vault given (--vault or 'vault=' in the config file)");
}

bool file_exists(const std::string& path)
{
    std::error_code ec;
    return fs::exists(fs::symlink_status(path, ec));
}

// ---- commands --------------------------------------------------------------

struct ListArgs {
    std::string store;
    std::string vault;
    std::string format = "table";
};

int cmd_list(const ListArgs& a, const Globals& g, std::istream& in, std::ostream& out, std::ostream& err)
{
    const auto store = store::open_store(a.store, store::OpenMode::ReadOnly);
    const auto live = store.list_logins();

    struct Line {
        std::string host;
        std::size_t rows;
        std::string state;
    };
    std::vector<Line> lines;
    for (const auto& [host, count] : mask::host_counts(live)) {
        lines.push_back({host, count, "live"});
    }
    if (!a.vault.empty() || g.config.vault) {
        const auto path = resolve_vault(a.vault, g);
        if (file_exists(path)) {
            SecretReader secrets(g.passphrase_fd, in, err);
            const auto v = vault::open_vault(path, secrets.read("Vault passphrase: "));
            for (const auto& e : v.entries()) {
                lines.push_back({e.hostname, e.rows.size(), "masked"});
            }
        }
    }
    std::sort(lines.begin(), lines.end(),
              [](const Line& x, const Line& y) { return std::tie(x.host, x.state) < std::tie(y.host, y.state); });

    if (a.format == "json-lines") {
        for (const auto& l : lines) {
            out << nlohmann::json{{"hostname", l.host}, {"rows", l.rows}, {"state", l.state}}.dump() << '\n';
        }
    } else if (a.format == "csv") {
        out << "hostname,rows,state\n";
        for (const auto& l : lines) {
            out << l.host << ',' << l.rows << ',' << l.state << '\n';
        }
    } else {
        std::size_t width = 8;
        for (const auto& l : lines) {
            width = std::max(width, l.host.size());
        }
        out << std::left << std::setw(static_cast<int>(width)) << "HOSTNAME" << "  " << std::right << std::setw(5)
            << "ROWS" << "  STATE\n";
        for (const auto& l : lines) {
            out << std::left << std::setw(static_cast<int>(width)) << l.host << "  " << std::right << std::setw(5)
                << l.rows << "  " << l.state << '\n';
        }
    }
    return kExitOk;
}

struct InitArgs {
    std::string vault;
    std::uint32_t kdf_memory = kDefaultKdfMemory;
    std::uint32_t kdf_iterations = kDefaultKdfIterations;
};

int cmd_init(const InitArgs& a, const Globals& g, std::istream& in, std::ostream& out, std::ostream& err)
{
    const auto path = resolve_vault(a.vault, g);
    if (file_exists(path)) {
        fail(ErrorCode::AlreadyExists, path + " already exists");
    }
    const auto kdf = kdf_from(a.kdf_memory, a.kdf_iterations);
    SecretReader secrets(g.passphrase_fd, in, err);
    vault::create_vault(path, secrets.read_new("vault passphrase"), kdf);
    out << "created vault " << path << '\n';
    return kExitOk;
}

struct MaskArgs {
    std::string store;
    std::string vault;
    std::string hosts;
    std::string keystore;
    bool dry_run = false;
    bool force = false;
    bool init = false;
    std::uint32_t kdf_memory = kDefaultKdfMemory;
    std::uint32_t kdf_iterations = kDefaultKdfIterations;
};

int cmd_mask(const MaskArgs& a, const Globals& g, std::istream& in, std::ostream& out, std::ostream& err)
{
    const auto vault_path = resolve_vault(a.vault, g);
    SecretReader secrets(g.passphrase_fd, in, err);

    // Fail on an unreadable store before any prompt or vault creation.
    auto store = store::open_store(a.store, store::OpenMode::ReadOnly);
    if (!a.dry_run && !a.force) {
        store::check_not_busy(a.store, g.config.lock_file);
    }

    std::optional<vault::Vault> v;
    if (!file_exists(vault_path)) {
        if (!a.init) {
            fail(ErrorCode::InvalidArgument, "no vault at " + vault_path + " (pass --init to create it)");
        }
        if (a.dry_run) {
            fail(ErrorCode::InvalidArgument, "--dry-run cannot create a vault");
        }
        const auto kdf = kdf_from(a.kdf_memory, a.kdf_iterations);
        v.emplace(vault::create_vault(vault_path, secrets.read_new("vault passphrase"), kdf));
        err << "created vault " << vault_path << '\n';
    } else {
        v.emplace(vault::open_vault(vault_path, secrets.read("Vault passphrase: ")));
    }

    std::set<std::string> hosts;
    if (!a.hosts.empty()) {
        hosts = split_hosts(a.hosts);
    } else {
        std::vector<std::pair<std::string, std::size_t>> choices;
        for (const auto& c : mask::host_counts(store.list_logins())) {
            if (v->find(c.first) == nullptr) {
                choices.push_back(c);
            }
        }
        hosts = choose_hosts(choices, "mask", in, err);
    }

    std::optional<std::string> keystore =
        a.keystore.empty() ? default_keystore(a.store) : std::optional<std::string>(a.keystore);
    const auto plan = mask::plan_mask(store, *v, hosts, keystore);

    if (a.dry_run) {
        out << "dry run: nothing written\n";
        for (const auto& sel : plan.selections) {
            std::vector<std::string> ids;
            for (auto id : sel.row_ids) {
                ids.push_back(std::to_string(id));
            }
            out << "would mask " << sel.hostname << " (rows " << join(ids, ",") << ")\n";
        }
        return kExitOk;
    }

    mask::ApplyOptions opts;
    opts.force = a.force;
    opts.browser_lock_file = g.config.lock_file;
    const auto report = mask::apply_mask(plan, *v, opts);
    for (const auto& sel : plan.selections) {
        out << "masked " << sel.hostname << " (" << sel.row_ids.size()
            << (sel.row_ids.size() == 1 ? " login" : " logins") << ")\n";
    }
    print_status(out, report);
    out << kLogOffNotice << '\n';
    return kExitOk;
}

struct UnmaskArgs {
    std::string store;
    std::string vault;
    std::string hosts;
    bool all = false;
    std::string conflicts = "keep-live";
    std::string fingerprint;
    bool force = false;
};

int cmd_unmask(const UnmaskArgs& a, const Globals& g, std::istream& in, std::ostream& out, std::ostream& err)
{
    const auto policy = mask::parse_conflict_policy(a.conflicts);
    if (!policy) {
        fail(ErrorCode::InvalidArgument, "unknown conflict policy '" + a.conflicts + "'");
    }
    const auto vault_path = resolve_vault(a.vault, g);
    SecretReader secrets(g.passphrase_fd, in, err);
    const auto vault_passphrase = secrets.read("Vault passphrase: ");
    auto v = vault::open_vault(vault_path, vault_passphrase);

    // Authenticate before looking at the store.
    const auto proofs = collect_proofs(v, vault_passphrase,
                                       a.fingerprint.empty() ? std::nullopt : std::optional(a.fingerprint), secrets);
    auth::require_authorized(v, proofs);

    std::optional<std::set<std::string>> hosts;
    if (!a.hosts.empty()) {
        hosts = split_hosts(a.hosts);
    } else if (!a.all) {
        if (v.entries().empty()) {
            fail(ErrorCode::NothingMasked, "the vault holds no masked hosts");
        }
        std::vector<std::pair<std::string, std::size_t>> choices;
        for (const auto& e : v.entries()) {
            choices.emplace_back(e.hostname, e.rows.size());
        }
        std::sort(choices.begin(), choices.end());
        hosts = choose_hosts(choices, "unmask", in, err);
    }
    const auto plan = mask::plan_unmask(v, a.store, hosts, *policy);

    mask::ApplyOptions opts;
    opts.force = a.force;
    opts.browser_lock_file = g.config.lock_file;
    const auto result = mask::apply_unmask(plan, v, proofs, opts);
    for (const auto& c : result.conflicts) {
        out << "conflict " << c.hostname << ": " << c.live_rows << " live, " << c.vaulted_rows << " vaulted; "
            << mask::to_string(c.action) << ": " << c.restored << " restored, " << c.remapped << " under new ids, "
            << c.kept_live << " kept live, " << c.replaced_live << " live replaced\n";
    }
    for (const auto& h : plan.hosts) {
        out << "unmasked " << h << '\n';
    }
    print_status(out, result.status);
    out << "Auto-login is available again for the unmasked sites.\n";
    return kExitOk;
}

struct StatusArgs {
    std::string store;
    std::string vault;
};

int cmd_status(const StatusArgs& a, const Globals& g, std::istream& in, std::ostream& out, std::ostream& err)
{
    const auto store = store::open_store(a.store, store::OpenMode::ReadOnly);
    const auto vault_path = resolve_vault(a.vault, g);
    if (!file_exists(vault_path)) {
        out << "mode: normal (no vault)\n";
        out << "live hosts: " << mask::host_counts(store.list_logins()).size() << '\n';
        return kExitOk;
    }
    SecretReader secrets(g.passphrase_fd, in, err);
    const auto v = vault::open_vault(vault_path, secrets.read("Vault passphrase: "));
    print_status(out, mask::status(store, v));
    out << "policy: " << auth::to_string(v.policy()) << '\n';
    return kExitOk;
}

struct AuthArgs {
    std::string vault;
    std::string template_path;
    double threshold = auth::kDefaultFingerprintThreshold;
    std::string fingerprint;
    std::string policy;
};

int cmd_enroll_passphrase(const AuthArgs& a, const Globals& g, std::istream& in, std::ostream& out,
                          std::ostream& err)
{
    SecretReader secrets(g.passphrase_fd, in, err);
    auto v = vault::open_vault(resolve_vault(a.vault, g), secrets.read("Vault passphrase: "));
    std::optional<auth::AuthProof> current;
    if (v.passphrase_record() != nullptr) {
        current = auth::verify_passphrase(v, secrets.read("Current authentication passphrase: "));
    }
    auth::enroll_passphrase(v, secrets.read_new("authentication passphrase"), current ? &*current : nullptr);
    v.commit();
    out << "passphrase enrolled\n";
    return kExitOk;
}

int cmd_enroll_fingerprint(const AuthArgs& a, const Globals& g, std::istream& in, std::ostream& out,
                           std::ostream& err)
{
    const auto enrolled = minutiae::read_min_file(a.template_path);
    SecretReader secrets(g.passphrase_fd, in, err);
    auto v = vault::open_vault(resolve_vault(a.vault, g), secrets.read("Vault passphrase: "));
    std::optional<auth::AuthProof> current;
    if (v.fingerprint_record() != nullptr && !a.fingerprint.empty()) {
        current = auth::verify_fingerprint(v, minutiae::read_min_file(a.fingerprint));
    }
    auth::enroll_fingerprint(v, enrolled, a.threshold, current ? &*current : nullptr);
    v.commit();
    out << "fingerprint enrolled (" << enrolled.size() << " minutiae, threshold " << fixed(a.threshold, 2)
        << ")\n";
    return kExitOk;
}

int cmd_set_policy(const AuthArgs& a, const Globals& g, std::istream& in, std::ostream& out, std::ostream& err)
{
    const auto policy = auth::parse_policy(a.policy);
    if (!policy) {
        fail(ErrorCode::InvalidArgument, "unknown policy '" + a.policy + "' (passphrase-only, fingerprint-only, both)");
    }
    SecretReader secrets(g.passphrase_fd, in, err);
    const auto vault_passphrase = secrets.read("Vault passphrase: ");
    auto v = vault::open_vault(resolve_vault(a.vault, g), vault_passphrase);
    const auto proofs = collect_proofs(v, vault_passphrase,
                                       a.fingerprint.empty() ? std::nullopt : std::optional(a.fingerprint), secrets);
    auth::require_authorized(v, proofs);
    auth::set_policy(v, *policy);
    v.commit();
    out << "policy: " << auth::to_string(*policy) << '\n';
    return kExitOk;
}

struct BioEvalArgs {
    std::string dataset;
    bool synthetic = false;
    minutiae::SyntheticParams params;
    std::string format = "table";
};

int cmd_bio_eval(const BioEvalArgs& a, std::ostream& out, std::ostream& err)
{
    minutiae::ScoreSets scores;
    if (a.synthetic) {
        scores = minutiae::score_dataset(minutiae::generate_synthetic(a.params));
    } else if (!a.dataset.empty()) {
        const auto ds = minutiae::load_probe_dataset(a.dataset);
        for (const auto& p : ds.genuine) {
            scores.genuine.push_back(minutiae::match_templates(ds.enrolled, p).score);
        }
        for (const auto& p : ds.impostor) {
            scores.impostor.push_back(minutiae::match_templates(ds.enrolled, p).score);
        }
    } else {
        fail(ErrorCode::InvalidArgument, "give --dataset DIR or --synthetic");
    }
    const auto report = minutiae::evaluate(scores.genuine, scores.impostor);

    if (a.format == "csv") {
        out << "threshold,far,frr\n";
        for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
            out << fixed(report.thresholds[i], 6) << ',' << fixed(report.far[i], 6) << ',' << fixed(report.frr[i], 6)
                << '\n';
        }
        err << "EER " << fixed(report.eer) << '\n';
        return kExitOk;
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) {
            s += x;
        }
        return s / double(v.size());
    };
    out << "genuine comparisons: " << scores.genuine.size() << " (mean score " << fixed(mean(scores.genuine))
        << ")\n";
    out << "impostor comparisons: " << scores.impostor.size() << " (mean score " << fixed(mean(scores.impostor))
        << ")\n";
    out << "threshold     FAR     FRR\n";
    for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
        out << std::setw(9) << fixed(report.thresholds[i]) << "  " << fixed(report.far[i]) << "  "
            << fixed(report.frr[i]) << '\n';
    }
    out << "EER " << fixed(report.eer) << '\n';
    return kExitOk;
}

struct ExtractArgs {
    std::string image;
    std::string output;
    int margin = 10;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out)
{
    const auto image = minutiae::read_pbm_pgm(a.image);
    auto t = minutiae::extract_minutiae(image, a.margin);
    t.source_id = fs::path(a.output).stem().string();
    minutiae::write_min_file(a.output, t);
    out << "wrote " << t.size() << " minutiae to " << a.output << '\n';
    return kExitOk;
}

struct FixtureArgs {
    std::string store;
    std::string keystore;
    std::size_t rows = 25;
    std::size_t hosts = 10;
    std::uint64_t seed = 1;
    std::size_t keystore_size = 1024;
    std::vector<std::string> disabled;
};

int cmd_make_fixture(const FixtureArgs& a, std::ostream& out)
{
    const auto rows = store::fixture_rows(a.rows, a.hosts, a.seed);
    store::init_fixture(a.store, rows, a.disabled);
    const auto keystore = a.keystore.empty() ? (fs::path(a.store).parent_path() / "key3.db").string() : a.keystore;
    if (file_exists(keystore)) {
        fail(ErrorCode::AlreadyExists, keystore + " already exists");
    }
    std::mt19937_64 rng(a.seed ^ 0x6b657973746f7265ULL);
    std::string bytes(a.keystore_size, '\0');
    for (auto& b : bytes) {
        b = static_cast<char>(rng() & 0xFF);
    }
    std::ofstream ks(keystore, std::ios::binary);
    if (!(ks << bytes) || !ks.flush()) {
        fail(ErrorCode::IoError, "cannot write " + keystore);
    }
    out << "wrote " << a.rows << " logins over " << a.hosts << " hosts to " << a.store << " and a "
        << a.keystore_size << "-byte key store to " << keystore << '\n';
    return kExitOk;
}

} // namespace

int exit_code_for(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::AuthFailed:
    case ErrorCode::PolicyUnsatisfied:
    case ErrorCode::WrongSecret:
        return kExitAuth;
    case ErrorCode::StoreBusy:
    case ErrorCode::VaultLocked:
        return kExitBusy;
    case ErrorCode::Tampered:
    case ErrorCode::BadVersion:
        return kExitTampered;
    case ErrorCode::UnresolvedConflict:
        return kExitConflict;
    default:
        return kExitUsage;
    }
}

int run(std::span<const std::string> args, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Masks saved browser logins into an encrypted vault and restores them after authentication.",
                 "credmask"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Globals g;
    app.add_option("--config", g.config_path, "key=value file (lock_file, vault)");
    app.add_option("--passphrase-fd", g.passphrase_fd, "Read passphrases, one per line, from this descriptor")
        ->check(CLI::NonNegativeNumber);

    const std::vector<std::string> table_formats = {"table", "json-lines", "csv"};

    ListArgs list_args;
    auto* list = app.add_subcommand("list", "Show sites with saved logins");
    list->add_option("--store", list_args.store, "Login store (signons.sqlite)")->required();
    list->add_option("--vault", list_args.vault, "Also show hosts masked in this vault");
    list->add_option("--format", list_args.format)->check(CLI::IsMember(table_formats));

    InitArgs init_args;
    auto* init = app.add_subcommand("init", "Create an empty vault");
    init->add_option("--vault", init_args.vault);
    init->add_option("--kdf-memory", init_args.kdf_memory)->group("");
    init->add_option("--kdf-iterations", init_args.kdf_iterations)->group("");

    MaskArgs mask_args;
    auto* mask = app.add_subcommand("mask", "Move logins for selected sites into the vault");
    mask->add_option("--store", mask_args.store)->required();
    mask->add_option("--vault", mask_args.vault);
    mask->add_option("--hosts", mask_args.hosts, "Comma-separated hostnames (default: interactive menu)");
    mask->add_option("--keystore", mask_args.keystore, "Key store to fingerprint (default: key3.db/key4.db)");
    mask->add_flag("--dry-run", mask_args.dry_run, "Print the plan without writing anything");
    mask->add_flag("--force", mask_args.force, "Skip the browser-running check");
    mask->add_flag("--init", mask_args.init, "Create the vault if it does not exist");
    mask->add_option("--kdf-memory", mask_args.kdf_memory)->group("");
    mask->add_option("--kdf-iterations", mask_args.kdf_iterations)->group("");

    UnmaskArgs unmask_args;
    auto* unmask = app.add_subcommand("unmask", "Restore masked logins after authentication");
    unmask->add_option("--store", unmask_args.store)->required();
    unmask->add_option("--vault", unmask_args.vault);
    auto* unmask_hosts = unmask->add_option("--hosts", unmask_args.hosts, "Comma-separated hostnames");
    unmask->add_flag("--all", unmask_args.all, "Restore every masked site")->excludes(unmask_hosts);
    unmask->add_option("--conflicts", unmask_args.conflicts, "keep-live | overwrite-live | fail");
    unmask->add_option("--fingerprint", unmask_args.fingerprint, "Probe template (.min)");
    unmask->add_flag("--force", unmask_args.force, "Skip the browser-running check");

    StatusArgs status_args;
    auto* status = app.add_subcommand("status", "Show whether masked mode is active");
    status->add_option("--store", status_args.store)->required();
    status->add_option("--vault", status_args.vault);

    AuthArgs auth_args;
    auto* auth_cmd = app.add_subcommand("auth", "Manage authentication factors");
    auth_cmd->require_subcommand(1);
    auto* enroll_pass = auth_cmd->add_subcommand("enroll-passphrase", "Set the unlock passphrase");
    enroll_pass->add_option("--vault", auth_args.vault);
    auto* enroll_fp = auth_cmd->add_subcommand("enroll-fingerprint", "Enroll a fingerprint template");
    enroll_fp->add_option("--vault", auth_args.vault);
    enroll_fp->add_option("--template", auth_args.template_path, "Enrolled template (.min)")->required();
    enroll_fp->add_option("--threshold", auth_args.threshold, "Decision threshold in (0, 1)");
    enroll_fp->add_option("--fingerprint", auth_args.fingerprint, "Probe for the current template when replacing it");
    auto* set_policy = auth_cmd->add_subcommand("set-policy", "Choose which factors unmask requires");
    set_policy->add_option("policy", auth_args.policy, "passphrase-only | fingerprint-only | both")->required();
    set_policy->add_option("--vault", auth_args.vault);
    set_policy->add_option("--fingerprint", auth_args.fingerprint, "Probe template when the current policy needs it");

    BioEvalArgs bio_args;
    auto* bio = app.add_subcommand("bio-eval", "FAR/FRR/EER of the fingerprint matcher");
    bio->add_option("--dataset", bio_args.dataset, "Directory with enrolled.min, genuine/, impostor/");
    bio->add_flag("--synthetic", bio_args.synthetic, "Use generated templates");
    bio->add_option("--seed", bio_args.params.seed);
    bio->add_option("--templates", bio_args.params.n_templates);
    bio->add_option("--minutiae", bio_args.params.minutiae_per_template);
    bio->add_option("--width", bio_args.params.width);
    bio->add_option("--height", bio_args.params.height);
    bio->add_option("--jitter-px", bio_args.params.position_sigma);
    bio->add_option("--jitter-rad", bio_args.params.angle_sigma);
    bio->add_option("--deletion", bio_args.params.deletion_rate);
    bio->add_option("--genuine", bio_args.params.genuine_per_template);
    bio->add_option("--impostors", bio_args.params.impostors_per_template);
    bio->add_option("--format", bio_args.format)->check(CLI::IsMember({"table", "csv"}));

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand("extract", "Extract minutiae from a thinned PBM/PGM image");
    extract->add_option("--image", extract_args.image)->required();
    extract->add_option("--out", extract_args.output)->required();
    extract->add_option("--margin", extract_args.margin, "Ignore minutiae this close to the border");

    FixtureArgs fixture_args;
    auto* fixture = app.add_subcommand("make-fixture", "Write a sample login store and key store");
    fixture->add_option("--store", fixture_args.store)->required();
    fixture->add_option("--keystore", fixture_args.keystore);
    fixture->add_option("--rows", fixture_args.rows);
    fixture->add_option("--hosts", fixture_args.hosts);
    fixture->add_option("--seed", fixture_args.seed);
    fixture->add_option("--keystore-size", fixture_args.keystore_size);
    fixture->add_option("--disabled", fixture_args.disabled, "Hosts for the never-save list");

    for (auto* sub : {list, init, mask, unmask, status, auth_cmd, enroll_pass, enroll_fp, set_policy, bio, extract,
                      fixture}) {
        sub->fallthrough();
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "credmask: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (!g.config_path.empty()) {
            g.config = load_config(g.config_path);
        }
        if (*list) {
            return cmd_list(list_args, g, in, out, err);
        }
        if (*init) {
            return cmd_init(init_args, g, in, out, err);
        }
        if (*mask) {
            return cmd_mask(mask_args, g, in, out, err);
        }
        if (*unmask) {
            return cmd_unmask(unmask_args, g, in, out, err);
        }
        if (*status) {
            return cmd_status(status_args, g, in, out, err);
        }
        if (*enroll_pass) {
            return cmd_enroll_passphrase(auth_args, g, in, out, err);
        }
        if (*enroll_fp) {
            return cmd_enroll_fingerprint(auth_args, g, in, out, err);
        }
        if (*set_policy) {
            return cmd_set_policy(auth_args, g, in, out, err);
        }
        if (*bio) {
            return cmd_bio_eval(bio_args, out, err);
        }
        if (*extract) {
            return cmd_extract(extract_args, out);
        }
        if (*fixture) {
            return cmd_make_fixture(fixture_args, out);
        }
    } catch (const Error& e) {
        err << "credmask: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fault::InjectedCrash&) {
        throw;
    } catch (const std::exception& e) {
        err << "credmask: internal error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace credmask::cli
