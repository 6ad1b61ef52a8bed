#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include <gtest/gtest.h>

using namespace credmask;
using namespace credmask::minutiae;

namespace {

SyntheticParams small()
{
    SyntheticParams p;
    p.n_templates = 6;
    p.minutiae_per_template = 12;
    p.genuine_per_template = 2;
    p.impostors_per_template = 3;
    return p;
}

} // namespace

TEST(Synthetic, DeterministicForSeed)
{
    const auto a = generate_synthetic(small());
    const auto b = generate_synthetic(small());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].enrolled, b[i].enrolled);
        EXPECT_EQ(a[i].genuine, b[i].genuine);
        EXPECT_EQ(a[i].impostors, b[i].impostors);
    }
    auto other = small();
    other.seed = 8;
    EXPECT_NE(generate_synthetic(other)[0].enrolled, a[0].enrolled);
}

TEST(Synthetic, Shape)
{
    const auto p = small();
    const auto data = generate_synthetic(p);
    ASSERT_EQ(data.size(), p.n_templates);
    for (const auto& s : data) {
        EXPECT_EQ(s.enrolled.size(), p.minutiae_per_template);
        EXPECT_EQ(s.genuine.size(), p.genuine_per_template);
        EXPECT_EQ(s.impostors.size(), p.impostors_per_template);
        for (const auto& m : s.enrolled.minutiae) {
            EXPECT_GE(m.x, 0.0);
            EXPECT_LT(m.x, p.width);
            EXPECT_GE(m.theta, 0.0);
            EXPECT_LT(m.theta, 2 * std::numbers::pi);
        }
        for (const auto& g : s.genuine) {
            EXPECT_FALSE(g.empty());
        }
    }
}

TEST(Synthetic, ExactCopiesScorePerfectly)
{
    auto p = small();
    p.position_sigma = 0;
    p.angle_sigma = 0;
    p.deletion_rate = 0;
    const auto scores = score_dataset(generate_synthetic(p));
    ASSERT_FALSE(scores.genuine.empty());
    for (double s : scores.genuine) {
        EXPECT_DOUBLE_EQ(s, 1.0);
    }
}

TEST(Synthetic, BadParams)
{
    auto p = small();
    p.deletion_rate = 1.0;
    EXPECT_THROW(generate_synthetic(p), Error);
    p = small();
    p.n_templates = 1;
    EXPECT_THROW(generate_synthetic(p), Error);
    p = small();
    p.position_sigma = -1;
    EXPECT_THROW(generate_synthetic(p), Error);
    try {
        p = small();
        p.deletion_rate = 1.0;
        generate_synthetic(p);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadParams);
    }
}
