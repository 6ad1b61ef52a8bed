#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include <algorithm>
#include <cmath>

namespace credmask::minutiae {

namespace {

void check_scores(std::span<const double> scores, const char* name)
{
    if (scores.empty()) {
        fail(ErrorCode::EmptyScores, std::string(name) + " score list is empty");
    }
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) {
            fail(ErrorCode::BadParams, std::string(name) + " scores must lie in [0, 1]");
        }
    }
}

} // namespace

EvalReport evaluate(std::span<const double> genuine, std::span<const double> impostor)
{
    check_scores(genuine, "genuine");
    check_scores(impostor, "impostor");

    std::vector<double> g(genuine.begin(), genuine.end());
    std::vector<double> imp(impostor.begin(), impostor.end());
    std::sort(g.begin(), g.end());
    std::sort(imp.begin(), imp.end());

    EvalReport report;
    report.thresholds.reserve(g.size() + imp.size() + 2);
    report.thresholds.push_back(0.0);
    report.thresholds.insert(report.thresholds.end(), g.begin(), g.end());
    report.thresholds.insert(report.thresholds.end(), imp.begin(), imp.end());
    report.thresholds.push_back(1.0);
    std::sort(report.thresholds.begin(), report.thresholds.end());
    report.thresholds.erase(std::unique(report.thresholds.begin(), report.thresholds.end()),
                            report.thresholds.end());

    const double ng = double(g.size());
    const double ni = double(imp.size());
    for (double t : report.thresholds) {
        // impostors at or above t; genuines strictly below t
        const auto accepted = imp.end() - std::lower_bound(imp.begin(), imp.end(), t);
        const auto rejected = std::lower_bound(g.begin(), g.end(), t) - g.begin();
        report.far.push_back(double(accepted) / ni);
        report.frr.push_back(double(rejected) / ng);
    }

    // FAR - FRR is non-increasing and starts at 1 (t = 0). Find where it
    // reaches zero and interpolate linearly inside that interval.
    const std::size_t n = report.thresholds.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double diff = report.far[k] - report.frr[k];
        if (diff == 0.0) {
            report.eer = report.far[k];
            return report;
        }
        if (diff < 0.0) {
            const double prev = report.far[k - 1] - report.frr[k - 1];
            const double alpha = prev / (prev - diff);
            report.eer = report.far[k - 1] + alpha * (report.far[k] - report.far[k - 1]);
            return report;
        }
    }
    // No crossing: some impostors score 1.0 and outnumber genuine rejects
    // even at the top threshold.
    report.eer = 0.5 * (report.far.back() + report.frr.back());
    return report;
}

} // namespace credmask::minutiae
