#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace credmask::minutiae {

namespace {

struct Vec2 {
    double x = 0;
    double y = 0;
};

bool is_four_connected(const PixelPoint& offset) noexcept
{
    return offset.row == 0 || offset.col == 0;
}

/// Unvisited ridge neighbours of p, 4-connected ones first, ring order within.
std::vector<PixelPoint> open_neighbours(const BinaryImage& image, PixelPoint p,
                                        const std::set<std::pair<int, int>>& visited)
{
    std::vector<PixelPoint> four;
    std::vector<PixelPoint> diagonal;
    for (const auto& off : kRingOffsets) {
        const PixelPoint q{p.row + off.row, p.col + off.col};
        if (image.at(q.row, q.col) == 0 || visited.contains({q.row, q.col})) {
            continue;
        }
        (is_four_connected(off) ? four : diagonal).push_back(q);
    }
    four.insert(four.end(), diagonal.begin(), diagonal.end());
    return four;
}

/// Walks from `first` away from `origin` for up to `length` pixels (first
/// counts as one). Returns the number of steps made and the final pixel.
std::pair<int, PixelPoint> trace(const BinaryImage& image, PixelPoint first, int length,
                                 std::set<std::pair<int, int>> visited)
{
    PixelPoint cur = first;
    visited.insert({cur.row, cur.col});
    int steps = 1;
    while (steps < length) {
        const auto next = open_neighbours(image, cur, visited);
        if (next.empty()) {
            break;
        }
        cur = next.front();
        visited.insert({cur.row, cur.col});
        ++steps;
    }
    return {steps, cur};
}

/// Image displacement converted to the y-up frame.
Vec2 displacement(PixelPoint from, PixelPoint to) noexcept
{
    return {double(to.col - from.col), double(from.row - to.row)};
}

Vec2 unit(Vec2 v) noexcept
{
    const double n = std::hypot(v.x, v.y);
    return n > 0 ? Vec2{v.x / n, v.y / n} : Vec2{};
}

struct Branch {
    PixelPoint start;
    std::vector<PixelPoint> run;
};

/// One branch per run of set pixels around the ring. Each branch starts at
/// the run's 4-connected member when it has one.
std::vector<Branch> branches(const BinaryImage& image, PixelPoint p)
{
    const auto ring = neighborhood(image, p);
    // Begin the walk on a clear pixel so runs never wrap around.
    std::size_t start = 0;
    while (start < 8 && ring[start] != 0) {
        ++start;
    }
    std::vector<Branch> out;
    if (start == 8) {
        return out;
    }
    std::vector<std::size_t> run;
    auto flush = [&] {
        if (run.empty()) {
            return;
        }
        std::size_t pick = run.front();
        for (auto idx : run) {
            if (is_four_connected(kRingOffsets[idx])) {
                pick = idx;
                break;
            }
        }
        Branch b;
        b.start = {p.row + kRingOffsets[pick].row, p.col + kRingOffsets[pick].col};
        for (auto idx : run) {
            b.run.push_back({p.row + kRingOffsets[idx].row, p.col + kRingOffsets[idx].col});
        }
        out.push_back(std::move(b));
        run.clear();
    };
    for (std::size_t k = 1; k <= 8; ++k) {
        const std::size_t idx = (start + k) % 8;
        if (ring[idx] != 0) {
            run.push_back(idx);
        } else {
            flush();
        }
    }
    flush();
    return out;
}

/// Traces branch `which`; the junction and the other branches' first pixels
/// are fenced off so the walk cannot leak into a sibling branch.
std::pair<int, PixelPoint> trace_branch(const BinaryImage& image, PixelPoint origin,
                                        const std::vector<Branch>& all, std::size_t which, int length)
{
    std::set<std::pair<int, int>> visited{{origin.row, origin.col}};
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i == which) {
            continue;
        }
        for (const auto& q : all[i].run) {
            visited.insert({q.row, q.col});
        }
    }
    return trace(image, all[which].start, length, std::move(visited));
}

} // namespace

double estimate_direction(const BinaryImage& skeleton, PixelPoint point, int trace_length)
{
    if (trace_length < 2) {
        fail(ErrorCode::InvalidArgument, "trace length must be at least 2");
    }
    if (skeleton.at(point.row, point.col) == 0) {
        fail(ErrorCode::InvalidArgument, "direction requested at a background pixel");
    }
    const auto ring = neighborhood(skeleton, point);
    const int cn = crossing_number(ring);

    if (cn != 1 && cn != 3) {
        fail(ErrorCode::InvalidArgument, "pixel is not a minutia (crossing number " + std::to_string(cn) + ")");
    }
    const auto all = branches(skeleton, point);
    std::vector<Vec2> dirs;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto [steps, end] = trace_branch(skeleton, point, all, i, trace_length);
        if (steps < 2) {
            fail(ErrorCode::TraceTooShort, "ridge shorter than 2 pixels");
        }
        dirs.push_back(unit(displacement(point, end)));
    }
    if (cn == 1) {
        return normalize_angle(std::atan2(dirs.front().y, dirs.front().x));
    }

    std::size_t best = 0;
    double best_opposition = -2.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        Vec2 mean{};
        for (std::size_t j = 0; j < dirs.size(); ++j) {
            if (j != i) {
                mean.x += dirs[j].x;
                mean.y += dirs[j].y;
            }
        }
        mean = unit(mean);
        const double opposition = -(dirs[i].x * mean.x + dirs[i].y * mean.y);
        if (opposition > best_opposition) {
            best_opposition = opposition;
            best = i;
        }
    }
    return normalize_angle(std::atan2(dirs[best].y, dirs[best].x));
}

Template extract_minutiae(const BinaryImage& skeleton, int border_margin, int trace_length)
{
    const bool empty_image = skeleton.width == 0 || skeleton.height == 0;
    if (border_margin < 0 || (!empty_image && 2 * border_margin >= std::min(skeleton.width, skeleton.height))) {
        fail(ErrorCode::BadMargin, "border margin " + std::to_string(border_margin) + " leaves no interior");
    }
    if (std::any_of(skeleton.pixels.begin(), skeleton.pixels.end(), [](std::uint8_t v) { return v > 1; })) {
        fail(ErrorCode::NotBinary, "skeleton pixels must be 0 or 1");
    }

    Template out;
    for (int row = border_margin; row < skeleton.height - border_margin; ++row) {
        for (int col = border_margin; col < skeleton.width - border_margin; ++col) {
            if (skeleton.at(row, col) == 0) {
                continue;
            }
            const int cn = crossing_number(neighborhood(skeleton, {row, col}));
            if (cn != 1 && cn != 3) {
                continue;
            }
            double theta = 0;
            try {
                theta = estimate_direction(skeleton, {row, col}, trace_length);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::TraceTooShort) {
                    continue;
                }
                throw;
            }
            out.minutiae.push_back({double(col), double(skeleton.height - 1 - row), theta,
                                    cn == 1 ? MinutiaKind::Termination : MinutiaKind::Bifurcation});
        }
    }
    return out;
}

} // namespace credmask::minutiae
