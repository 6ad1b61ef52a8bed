#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace credmask;
using namespace credmask::minutiae;

namespace {

ErrorCode eval_error(const std::vector<double>& g, const std::vector<double>& i)
{
    try {
        (void)evaluate(g, i);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST(Evaluate, SeparableScores)
{
    const auto r = evaluate(std::vector{0.9, 0.8}, std::vector{0.1, 0.2});
    EXPECT_EQ(r.eer, 0.0);
    EXPECT_EQ(r.thresholds, (std::vector{0.0, 0.1, 0.2, 0.8, 0.9, 1.0}));
    EXPECT_EQ(r.far, (std::vector{1.0, 1.0, 0.5, 0.0, 0.0, 0.0}));
    EXPECT_EQ(r.frr, (std::vector{0.0, 0.0, 0.0, 0.0, 0.5, 1.0}));
}

TEST(Evaluate, SymmetricOverlap)
{
    EXPECT_EQ(evaluate(std::vector{0.5}, std::vector{0.5}).eer, 0.5);
}

TEST(Evaluate, InvertedScoresGiveFullError)
{
    EXPECT_DOUBLE_EQ(evaluate(std::vector{0.1, 0.2}, std::vector{0.8, 0.9}).eer, 1.0);
}

TEST(Evaluate, MatchesBruteForceOnRandomSets)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> g(1 + rng() % 60);
        std::vector<double> imp(1 + rng() % 60);
        const bool coarse = trial % 2 == 0; // ties on a 0.05 grid
        auto draw = [&](double lo, double hi) {
            const double v = credmask::testing::uniform(rng, lo, hi);
            return coarse ? std::round(v * 20) / 20 : v;
        };
        for (auto& s : g) {
            s = draw(0.2, 1.0);
        }
        for (auto& s : imp) {
            s = draw(0.0, 0.8);
        }
        const auto r = evaluate(g, imp);
        EXPECT_NEAR(r.eer, credmask::testing::brute_force_eer(g, imp), 1e-9) << "trial " << trial;
        EXPECT_TRUE(std::is_sorted(r.thresholds.begin(), r.thresholds.end()));
        EXPECT_TRUE(std::is_sorted(r.far.rbegin(), r.far.rend()));
        EXPECT_TRUE(std::is_sorted(r.frr.begin(), r.frr.end()));
    }
}

TEST(Evaluate, Errors)
{
    EXPECT_EQ(eval_error({}, {0.1}), ErrorCode::EmptyScores);
    EXPECT_EQ(eval_error({0.1}, {}), ErrorCode::EmptyScores);
    EXPECT_EQ(eval_error({1.5}, {0.1}), ErrorCode::BadParams);
}
