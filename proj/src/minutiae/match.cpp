#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace credmask::minutiae {

void MatchParams::validate() const
{
    if (!(distance_tolerance > 0) || !std::isfinite(distance_tolerance)) {
        fail(ErrorCode::BadParams, "distance tolerance must be positive");
    }
    if (!(angle_tolerance > 0) || angle_tolerance > std::numbers::pi) {
        fail(ErrorCode::BadParams, "angle tolerance must lie in (0, pi]");
    }
}

Minutia RigidTransform::apply(const Minutia& m) const noexcept
{
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    return {c * m.x - s * m.y + dx, s * m.x + c * m.y + dy, normalize_angle(m.theta + rotation), m.kind};
}

RigidTransform RigidTransform::inverse() const noexcept
{
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    // p = R^T (p' - d)
    return {-(c * dx + s * dy), -(-s * dx + c * dy), normalize_angle(-rotation)};
}

Template transform_template(const Template& t, const RigidTransform& motion)
{
    Template out;
    out.source_id = t.source_id;
    out.minutiae.reserve(t.size());
    for (const auto& m : t.minutiae) {
        out.minutiae.push_back(motion.apply(m));
    }
    return out;
}

namespace {

/// Motion that lands `from` exactly on `onto`, position and direction.
RigidTransform align(const Minutia& onto, const Minutia& from) noexcept
{
    const double rotation = normalize_angle(onto.theta - from.theta);
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    return {onto.x - (c * from.x - s * from.y), onto.y - (s * from.x + c * from.y), rotation};
}

struct Candidate {
    double distance;
    std::size_t fixed_index;
    std::size_t moving_index;
};

class GreedyPairer {
public:
    GreedyPairer(const Template& fixed, const MatchParams& params) : fixed_(fixed), params_(params)
    {
        fixed_taken_.resize(fixed.size());
    }

    /// Pairs moved minutiae with fixed ones, nearest first.
    std::size_t count(const std::vector<Minutia>& moved)
    {
        candidates_.clear();
        const double r2 = params_.distance_tolerance * params_.distance_tolerance;
        for (std::size_t i = 0; i < fixed_.size(); ++i) {
            const auto& f = fixed_.minutiae[i];
            for (std::size_t j = 0; j < moved.size(); ++j) {
                const auto& m = moved[j];
                if (params_.kind_strict && f.kind != m.kind) {
                    continue;
                }
                const double ddx = f.x - m.x;
                const double ddy = f.y - m.y;
                const double d2 = ddx * ddx + ddy * ddy;
                if (d2 > r2 || angle_distance(f.theta, m.theta) > params_.angle_tolerance) {
                    continue;
                }
                candidates_.push_back({std::sqrt(d2), i, j});
            }
        }
        std::sort(candidates_.begin(), candidates_.end(), [](const Candidate& l, const Candidate& r) {
            return std::tie(l.distance, l.fixed_index, l.moving_index) <
                   std::tie(r.distance, r.fixed_index, r.moving_index);
        });
        std::fill(fixed_taken_.begin(), fixed_taken_.end(), false);
        moving_taken_.assign(moved.size(), false);
        std::size_t pairs = 0;
        for (const auto& c : candidates_) {
            if (fixed_taken_[c.fixed_index] || moving_taken_[c.moving_index]) {
                continue;
            }
            fixed_taken_[c.fixed_index] = true;
            moving_taken_[c.moving_index] = true;
            ++pairs;
        }
        return pairs;
    }

private:
    const Template& fixed_;
    const MatchParams& params_;
    std::vector<Candidate> candidates_;
    std::vector<bool> fixed_taken_;
    std::vector<bool> moving_taken_;
};

struct Best {
    std::size_t pairs = 0;
    RigidTransform motion;
    bool found = false;
};

/// Best pair count over every hypothesis that moves `moving` onto `fixed`.
Best search(const Template& fixed, const Template& moving, const MatchParams& params)
{
    Best best;
    GreedyPairer pairer(fixed, params);
    std::vector<Minutia> moved(moving.size());
    for (const auto& ref_fixed : fixed.minutiae) {
        for (const auto& ref_moving : moving.minutiae) {
            const RigidTransform motion = align(ref_fixed, ref_moving);
            for (std::size_t k = 0; k < moving.size(); ++k) {
                moved[k] = motion.apply(moving.minutiae[k]);
            }
            const std::size_t pairs = pairer.count(moved);
            if (!best.found || pairs > best.pairs) {
                best = {pairs, motion, true};
            }
        }
    }
    return best;
}

} // namespace

MatchResult match_templates(const Template& a, const Template& b, const MatchParams& params)
{
    params.validate();
    MatchResult result;
    result.n1 = a.size();
    result.n2 = b.size();
    if (a.empty() || b.empty()) {
        return result;
    }
    const Best forward = search(a, b, params);
    const Best backward = search(b, a, params);
    if (backward.pairs > forward.pairs) {
        result.matched_pairs = backward.pairs;
        result.transform = backward.motion.inverse();
    } else {
        result.matched_pairs = forward.pairs;
        result.transform = forward.motion;
    }
    result.score = 2.0 * double(result.matched_pairs) / double(result.n1 + result.n2);
    return result;
}

void validate_threshold(double threshold)
{
    if (!(threshold > 0.0 && threshold < 1.0)) {
        fail(ErrorCode::BadThreshold, "threshold must lie strictly between 0 and 1");
    }
}

Decision decide(const MatchResult& result, double threshold)
{
    validate_threshold(threshold);
    return result.score >= threshold ? Decision::Accept : Decision::Reject;
}

} // namespace credmask::minutiae
