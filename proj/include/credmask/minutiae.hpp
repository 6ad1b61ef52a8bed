#pragma once

// Fingerprint minutiae: crossing-number extraction from skeleton images,
// rigid-alignment template matching and FAR/FRR/EER evaluation.
//
// Coordinates: x grows to the right, y grows upward, theta is measured
// counter-clockwise from +x in [0, 2pi). Image rows grow downward, so a
// pixel at (row, col) in an image of height h sits at x = col, y = h-1-row.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace credmask::minutiae {

enum class MinutiaKind : std::uint8_t { Termination = 0, Bifurcation = 1 };

struct Minutia {
    double x = 0;
    double y = 0;
    double theta = 0;
    MinutiaKind kind = MinutiaKind::Termination;

    bool operator==(const Minutia&) const = default;
};

struct Template {
    std::vector<Minutia> minutiae;
    std::string source_id;

    [[nodiscard]] std::size_t size() const noexcept { return minutiae.size(); }
    [[nodiscard]] bool empty() const noexcept { return minutiae.empty(); }

    bool operator==(const Template&) const = default;
};

/// Wraps any finite angle into [0, 2pi).
double normalize_angle(double theta) noexcept;
/// Smallest absolute difference between two angles, in [0, pi].
double angle_distance(double a, double b) noexcept;

// ---------------------------------------------------------------------------
// Skeleton images and extraction

/// Row-major image; extraction expects every pixel to be 0 or 1 (1 = ridge).
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

    [[nodiscard]] bool inside(int row, int col) const noexcept
    {
        return row >= 0 && col >= 0 && row < height && col < width;
    }
    /// Out-of-bounds reads return 0.
    [[nodiscard]] std::uint8_t at(int row, int col) const noexcept
    {
        return inside(row, col) ? pixels[static_cast<std::size_t>(row) * width + col] : 0;
    }
    void set(int row, int col, std::uint8_t v) { pixels.at(static_cast<std::size_t>(row) * width + col) = v; }
};

struct PixelPoint {
    int row = 0;
    int col = 0;

    bool operator==(const PixelPoint&) const = default;
};

/// Neighbour offsets in clockwise screen order starting east:
/// E, SE, S, SW, W, NW, N, NE.
inline constexpr std::array<PixelPoint, 8> kRingOffsets = {{
    {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1},
}};

/// The 8 neighbours of (row, col) in kRingOffsets order.
std::array<std::uint8_t, 8> neighborhood(const BinaryImage& image, PixelPoint p) noexcept;

/// Half the number of 0/1 transitions walking once around the ring.
/// CN = 1 marks a ridge ending, CN = 3 a bifurcation.
int crossing_number(std::span<const std::uint8_t, 8> ring) noexcept;

inline constexpr int kDefaultTraceLength = 5;

/// Ridge direction at a minutia pixel, obtained by walking trace_length
/// pixels along the ridge (each branch, for a bifurcation). Endings point
/// along the ridge away from the end; bifurcations point along the branch
/// most opposed to the mean of the other two.
double estimate_direction(const BinaryImage& skeleton, PixelPoint point, int trace_length = kDefaultTraceLength);

/// One minutia per ridge pixel with CN 1 or 3 lying at least border_margin
/// pixels inside the image, in row-major order. Candidates whose ridge is too
/// short to trace are dropped.
Template extract_minutiae(const BinaryImage& skeleton, int border_margin, int trace_length = kDefaultTraceLength);

// ---------------------------------------------------------------------------
// Matching

struct MatchParams {
    double distance_tolerance = 10.0;
    double angle_tolerance = std::numbers::pi / 6.0;
    bool kind_strict = true;

    void validate() const;
};

/// p' = R(rotation) p + (dx, dy); theta' = theta + rotation.
struct RigidTransform {
    double dx = 0;
    double dy = 0;
    double rotation = 0;

    [[nodiscard]] Minutia apply(const Minutia& m) const noexcept;
    [[nodiscard]] RigidTransform inverse() const noexcept;
};

Template transform_template(const Template& t, const RigidTransform& motion);

struct MatchResult {
    double score = 0;
    std::size_t matched_pairs = 0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    /// Best hypothesis, expressed as the motion taking b into a's frame.
    RigidTransform transform;
};

/// Exhaustive reference-pair alignment search with greedy nearest-first
/// pairing, evaluated in both directions. score = 2m / (n1 + n2).
MatchResult match_templates(const Template& a, const Template& b, const MatchParams& params = {});

enum class Decision { Accept, Reject };

void validate_threshold(double threshold);
/// Accepts when score >= threshold.
Decision decide(const MatchResult& result, double threshold);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
    std::vector<double> thresholds;
    std::vector<double> far; ///< a.k.a. FMR: impostor scores >= t
    std::vector<double> frr; ///< a.k.a. FNMR: genuine scores < t
    double eer = 0;
};

EvalReport evaluate(std::span<const double> genuine, std::span<const double> impostor);

struct SyntheticParams {
    std::uint64_t seed = 7;
    std::size_t n_templates = 50;
    std::size_t minutiae_per_template = 20;
    double width = 400;
    double height = 400;
    double position_sigma = 2.0;
    double angle_sigma = 0.1;
    double deletion_rate = 0.1;
    std::size_t genuine_per_template = 3;
    std::size_t impostors_per_template = 10;
    double max_translation = 50.0;

    void validate() const;
};

struct SyntheticSubject {
    Template enrolled;
    std::vector<Template> genuine;
    std::vector<Template> impostors;
};

using SyntheticDataset = std::vector<SyntheticSubject>;

/// Deterministic for a fixed seed on every platform.
SyntheticDataset generate_synthetic(const SyntheticParams& params);

struct ScoreSets {
    std::vector<double> genuine;
    std::vector<double> impostor;
};

ScoreSets score_dataset(const SyntheticDataset& dataset, const MatchParams& params = {});

// ---------------------------------------------------------------------------
// File formats

/// `MIN1 <count>` followed by `x y theta kind` lines, kind in {T, B}.
Template parse_min(std::istream& in, std::string source_id = {});
Template read_min_file(const std::filesystem::path& path);
void write_min(std::ostream& out, const Template& t);
void write_min_file(const std::filesystem::path& path, const Template& t);

/// Reads P1, P4 or P5 (maxval 255, value > 127 is ridge) into a 0/1 image.
BinaryImage read_pbm_pgm(const std::filesystem::path& path);
BinaryImage parse_pbm_pgm(std::istream& in);

/// enrolled.min plus genuine/*.min and impostor/*.min probes.
struct ProbeDataset {
    Template enrolled;
    std::vector<Template> genuine;
    std::vector<Template> impostor;
};

ProbeDataset load_probe_dataset(const std::filesystem::path& dir);
void save_probe_dataset(const std::filesystem::path& dir, const ProbeDataset& dataset);

} // namespace credmask::minutiae
