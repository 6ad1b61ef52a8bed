#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace credmask::minutiae {

Template parse_min(std::istream& in, std::string source_id)
{
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorCode::BadFormat, "empty minutiae file");
    }
    std::istringstream header(line);
    std::string magic;
    long long count = -1;
    if (!(header >> magic >> count) || magic != "MIN1" || count < 0) {
        fail(ErrorCode::BadFormat, "expected 'MIN1 <count>' header");
    }
    Template t;
    t.source_id = std::move(source_id);
    t.minutiae.reserve(static_cast<std::size_t>(std::min<long long>(count, 100000)));
    for (long long i = 0; i < count; ++i) {
        if (!std::getline(in, line)) {
            fail(ErrorCode::BadFormat, "header announces " + std::to_string(count) + " minutiae, found " +
                                           std::to_string(i));
        }
        std::istringstream fields(line);
        Minutia m;
        std::string kind;
        std::string extra;
        if (!(fields >> m.x >> m.y >> m.theta >> kind) || (fields >> extra)) {
            fail(ErrorCode::BadFormat, "bad minutia line " + std::to_string(i + 2));
        }
        if (!std::isfinite(m.x) || !std::isfinite(m.y) || !std::isfinite(m.theta)) {
            fail(ErrorCode::BadFormat, "non-finite value on line " + std::to_string(i + 2));
        }
        if (kind == "T") {
            m.kind = MinutiaKind::Termination;
        } else if (kind == "B") {
            m.kind = MinutiaKind::Bifurcation;
        } else {
            fail(ErrorCode::BadFormat, "kind must be T or B on line " + std::to_string(i + 2));
        }
        m.theta = normalize_angle(m.theta);
        t.minutiae.push_back(m);
    }
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            fail(ErrorCode::BadFormat, "trailing data after " + std::to_string(count) + " minutiae");
        }
    }
    return t;
}

Template read_min_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return parse_min(in, path.stem().string());
}

void write_min(std::ostream& out, const Template& t)
{
    out << "MIN1 " << t.size() << '\n';
    char buf[128];
    for (const auto& m : t.minutiae) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %c\n", m.x, m.y, m.theta,
                      m.kind == MinutiaKind::Termination ? 'T' : 'B');
        out << buf;
    }
}

void write_min_file(const fs::path& path, const Template& t)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    write_min(out, t);
    if (!out.flush()) {
        fail(ErrorCode::IoError, "write failed: " + path.string());
    }
}

namespace {

/// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in)
{
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            if (!tok.empty()) {
                break;
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) {
                break;
            }
            continue;
        }
        tok += static_cast<char>(c);
    }
    if (tok.empty()) {
        fail(ErrorCode::BadFormat, "truncated image header");
    }
    return tok;
}

int header_int(std::istream& in)
{
    const auto tok = header_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 0) {
            throw std::invalid_argument(tok);
        }
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::BadFormat, "bad image header value '" + tok + "'");
    }
}

} // namespace

BinaryImage parse_pbm_pgm(std::istream& in)
{
    const auto magic = header_token(in);
    if (magic != "P1" && magic != "P4" && magic != "P5") {
        fail(ErrorCode::BadFormat, "unsupported image type " + magic + " (need P1, P4 or P5)");
    }
    const int width = header_int(in);
    const int height = header_int(in);
    if (width <= 0 || height <= 0 || static_cast<long long>(width) * height > (1LL << 28)) {
        fail(ErrorCode::BadFormat, "bad image dimensions");
    }
    BinaryImage image(width, height);

    if (magic == "P1") {
        for (auto& px : image.pixels) {
            int c;
            do {
                c = in.get();
                if (c == '#') {
                    while ((c = in.get()) != EOF && c != '\n') {
                    }
                }
            } while (c != EOF && c != '0' && c != '1');
            if (c == EOF) {
                fail(ErrorCode::BadFormat, "truncated P1 raster");
            }
            px = c == '1' ? 1 : 0;
        }
        return image;
    }

    if (magic == "P4") {
        const std::size_t stride = (static_cast<std::size_t>(width) + 7) / 8;
        std::vector<char> row(stride);
        for (int r = 0; r < height; ++r) {
            if (!in.read(row.data(), static_cast<std::streamsize>(stride))) {
                fail(ErrorCode::BadFormat, "truncated P4 raster");
            }
            for (int c = 0; c < width; ++c) {
                const auto byte = static_cast<unsigned char>(row[static_cast<std::size_t>(c) / 8]);
                image.set(r, c, (byte >> (7 - c % 8)) & 1U);
            }
        }
        return image;
    }

    const int maxval = header_int(in);
    if (maxval != 255) {
        fail(ErrorCode::BadFormat, "P5 images must use maxval 255");
    }
    std::vector<char> raster(image.pixels.size());
    if (!in.read(raster.data(), static_cast<std::streamsize>(raster.size()))) {
        fail(ErrorCode::BadFormat, "truncated P5 raster");
    }
    for (std::size_t i = 0; i < raster.size(); ++i) {
        image.pixels[i] = static_cast<unsigned char>(raster[i]) > 127 ? 1 : 0;
    }
    return image;
}

BinaryImage read_pbm_pgm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return parse_pbm_pgm(in);
}

namespace {

std::vector<Template> load_probe_dir(const fs::path& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        fail(ErrorCode::EmptyScores, "missing probe directory " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".min") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Template> out;
    for (const auto& f : files) {
        out.push_back(read_min_file(f));
    }
    return out;
}

} // namespace

ProbeDataset load_probe_dataset(const fs::path& dir)
{
    ProbeDataset ds;
    ds.enrolled = read_min_file(dir / "enrolled.min");
    ds.genuine = load_probe_dir(dir / "genuine");
    ds.impostor = load_probe_dir(dir / "impostor");
    return ds;
}

void save_probe_dataset(const fs::path& dir, const ProbeDataset& dataset)
{
    fs::create_directories(dir / "genuine");
    fs::create_directories(dir / "impostor");
    write_min_file(dir / "enrolled.min", dataset.enrolled);
    char name[32];
    for (std::size_t i = 0; i < dataset.genuine.size(); ++i) {
        std::snprintf(name, sizeof name, "%04zu.min", i);
        write_min_file(dir / "genuine" / name, dataset.genuine[i]);
    }
    for (std::size_t i = 0; i < dataset.impostor.size(); ++i) {
        std::snprintf(name, sizeof name, "%04zu.min", i);
        write_min_file(dir / "impostor" / name, dataset.impostor[i]);
    }
}

} // namespace credmask::minutiae
