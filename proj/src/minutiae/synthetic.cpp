#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include <cmath>
#include <random>

namespace credmask::minutiae {

namespace {

/// mt19937_64's output sequence is fixed by the standard; the library
/// distributions are not, so uniform and normal draws are derived here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal(double sigma)
    {
        if (sigma == 0.0) {
            return 0.0;
        }
        // Box-Muller; 1 - u keeps the log argument in (0, 1].
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)) % n; }

private:
    std::mt19937_64 engine_;
};

Template random_template(Rng& rng, const SyntheticParams& p, std::string id)
{
    Template t;
    t.source_id = std::move(id);
    for (std::size_t i = 0; i < p.minutiae_per_template; ++i) {
        Minutia m;
        m.x = rng.uniform(0.0, p.width);
        m.y = rng.uniform(0.0, p.height);
        m.theta = normalize_angle(rng.uniform(0.0, 2.0 * std::numbers::pi));
        m.kind = rng.uniform() < 0.5 ? MinutiaKind::Termination : MinutiaKind::Bifurcation;
        t.minutiae.push_back(m);
    }
    return t;
}

/// Another capture of the same finger: dropped minutiae, jitter, then a
/// random rigid motion about the field centre.
Template capture(Rng& rng, const SyntheticParams& p, const Template& base, std::string id)
{
    Template t;
    t.source_id = std::move(id);
    for (const auto& m : base.minutiae) {
        const bool dropped = rng.uniform() < p.deletion_rate;
        Minutia j = m;
        j.x += rng.normal(p.position_sigma);
        j.y += rng.normal(p.position_sigma);
        j.theta = normalize_angle(j.theta + rng.normal(p.angle_sigma));
        if (!dropped) {
            t.minutiae.push_back(j);
        }
    }
    if (t.minutiae.empty()) {
        t.minutiae.push_back(base.minutiae[rng.index(base.size())]);
    }

    const double rotation = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double tx = rng.uniform(-p.max_translation, p.max_translation);
    const double ty = rng.uniform(-p.max_translation, p.max_translation);
    const double cx = p.width / 2.0;
    const double cy = p.height / 2.0;
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    // Rotate about the centre, then translate.
    const RigidTransform motion{cx - (c * cx - s * cy) + tx, cy - (s * cx + c * cy) + ty, rotation};
    return transform_template(t, motion);
}

} // namespace

void SyntheticParams::validate() const
{
    if (n_templates < 2) {
        fail(ErrorCode::BadParams, "need at least two templates");
    }
    if (minutiae_per_template == 0) {
        fail(ErrorCode::BadParams, "templates need at least one minutia");
    }
    if (!(width > 0) || !(height > 0)) {
        fail(ErrorCode::BadParams, "field must have positive size");
    }
    if (!(position_sigma >= 0) || !(angle_sigma >= 0) || !(max_translation >= 0)) {
        fail(ErrorCode::BadParams, "jitter and translation must be non-negative");
    }
    if (!(deletion_rate >= 0.0 && deletion_rate < 1.0)) {
        fail(ErrorCode::BadParams, "deletion rate must lie in [0, 1)");
    }
    if (genuine_per_template == 0) {
        fail(ErrorCode::BadParams, "need at least one genuine probe per template");
    }
}

SyntheticDataset generate_synthetic(const SyntheticParams& params)
{
    params.validate();
    Rng rng(params.seed);
    SyntheticDataset data(params.n_templates);
    for (std::size_t i = 0; i < params.n_templates; ++i) {
        data[i].enrolled = random_template(rng, params, "subject-" + std::to_string(i));
    }
    for (std::size_t i = 0; i < params.n_templates; ++i) {
        for (std::size_t g = 0; g < params.genuine_per_template; ++g) {
            data[i].genuine.push_back(capture(rng, params, data[i].enrolled,
                                              "subject-" + std::to_string(i) + "-probe-" + std::to_string(g)));
        }
    }
    // Impostors for subject i are the first captures of the subjects after it.
    const std::size_t k = std::min(params.impostors_per_template, params.n_templates - 1);
    for (std::size_t i = 0; i < params.n_templates; ++i) {
        for (std::size_t d = 1; d <= k; ++d) {
            data[i].impostors.push_back(data[(i + d) % params.n_templates].genuine.front());
        }
    }
    return data;
}

ScoreSets score_dataset(const SyntheticDataset& dataset, const MatchParams& params)
{
    ScoreSets out;
    for (const auto& subject : dataset) {
        for (const auto& probe : subject.genuine) {
            out.genuine.push_back(match_templates(subject.enrolled, probe, params).score);
        }
        for (const auto& probe : subject.impostors) {
            out.impostor.push_back(match_templates(subject.enrolled, probe, params).score);
        }
    }
    return out;
}

} // namespace credmask::minutiae
