#include "credmask/error.hpp"
#include "credmask/minutiae.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace credmask;
using namespace credmask::minutiae;

namespace {

ErrorCode parse_error(const std::string& text)
{
    std::istringstream in(text);
    try {
        (void)parse_min(in);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

ErrorCode image_error(const std::string& text)
{
    std::istringstream in(text);
    try {
        (void)parse_pbm_pgm(in);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST(MinFormat, Parse)
{
    std::istringstream in("MIN1 2\n10 20.5 1.5 T\n3 4 7 B\n");
    const auto t = parse_min(in, "probe");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t.source_id, "probe");
    EXPECT_EQ(t.minutiae[0], (Minutia{10, 20.5, 1.5, MinutiaKind::Termination}));
    EXPECT_EQ(t.minutiae[1].kind, MinutiaKind::Bifurcation);
    EXPECT_NEAR(t.minutiae[1].theta, 7 - 2 * std::numbers::pi, 1e-12); // normalised
}

TEST(MinFormat, RoundTripIsExact)
{
    std::mt19937_64 rng(3);
    const auto t = credmask::testing::random_template(rng, 25);
    std::stringstream io;
    write_min(io, t);
    EXPECT_EQ(parse_min(io, t.source_id), t);
}

TEST(MinFormat, Errors)
{
    EXPECT_EQ(parse_error(""), ErrorCode::BadFormat);
    EXPECT_EQ(parse_error("MIN2 0\n"), ErrorCode::BadFormat);
    EXPECT_EQ(parse_error("MIN1 2\n1 2 3 T\n"), ErrorCode::BadFormat);
    EXPECT_EQ(parse_error("MIN1 1\n1 2 3 X\n"), ErrorCode::BadFormat);
    EXPECT_EQ(parse_error("MIN1 1\n1 2 T\n"), ErrorCode::BadFormat);
    EXPECT_EQ(parse_error("MIN1 1\n1 2 3 T extra\n"), ErrorCode::BadFormat);
    EXPECT_EQ(parse_error("MIN1 1\n1 2 3 T\n4 5 6 B\n"), ErrorCode::BadFormat);
    EXPECT_EQ(parse_error("MIN1 1\ninf 2 3 T\n"), ErrorCode::BadFormat);
}

TEST(Images, AsciiBitmap)
{
    const auto img = [] {
        std::istringstream in("P1\n# comment\n3 2\n0 1 0\n1 0 1\n");
        return parse_pbm_pgm(in);
    }();
    EXPECT_EQ(img.width, 3);
    EXPECT_EQ(img.height, 2);
    EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 1, 0, 1, 0, 1}));
}

TEST(Images, PackedBitmap)
{
    std::string data = "P4\n10 2\n";
    data += static_cast<char>(0b10000000);
    data += static_cast<char>(0b01000000);
    data += static_cast<char>(0b00000000);
    data += static_cast<char>(0b11000000);
    std::istringstream in(data);
    const auto img = parse_pbm_pgm(in);
    EXPECT_EQ(img.at(0, 0), 1);
    EXPECT_EQ(img.at(0, 9), 1);
    EXPECT_EQ(img.at(0, 1), 0);
    EXPECT_EQ(img.at(1, 8), 1);
    EXPECT_EQ(img.at(1, 9), 1);
    EXPECT_EQ(img.at(1, 7), 0);
}

TEST(Images, GrayMapThreshold)
{
    std::string data = "P5 4 1 255\n";
    for (int v : {0, 127, 128, 255}) {
        data += static_cast<char>(v);
    }
    std::istringstream in(data);
    EXPECT_EQ(parse_pbm_pgm(in).pixels, (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(Images, Errors)
{
    EXPECT_EQ(image_error("P2 1 1 255\n0"), ErrorCode::BadFormat);
    EXPECT_EQ(image_error("P5 2 2 15\n"), ErrorCode::BadFormat);
    EXPECT_EQ(image_error("P5 2 2 255\nab"), ErrorCode::BadFormat);
    EXPECT_EQ(image_error("P1 2"), ErrorCode::BadFormat);
    EXPECT_EQ(image_error("P1 0 2\n"), ErrorCode::BadFormat);
    EXPECT_EQ(image_error("P1 2 1\n1"), ErrorCode::BadFormat);
}

TEST(ProbeDataset, SaveAndLoad)
{
    credmask::testing::TempDir dir;
    std::mt19937_64 rng(4);
    ProbeDataset ds;
    ds.enrolled = credmask::testing::random_template(rng, 12);
    for (int i = 0; i < 3; ++i) {
        ds.genuine.push_back(credmask::testing::random_template(rng, 10));
        ds.impostor.push_back(credmask::testing::random_template(rng, 10));
    }
    save_probe_dataset(dir.path(), ds);
    const auto back = load_probe_dataset(dir.path());
    EXPECT_EQ(back.enrolled.minutiae, ds.enrolled.minutiae);
    ASSERT_EQ(back.genuine.size(), 3u);
    ASSERT_EQ(back.impostor.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.genuine[i].minutiae, ds.genuine[i].minutiae);
        EXPECT_EQ(back.impostor[i].minutiae, ds.impostor[i].minutiae);
    }
}

TEST(ProbeDataset, MissingPiecesAreErrors)
{
    credmask::testing::TempDir dir;
    EXPECT_THROW(load_probe_dataset(dir.path()), Error);
}
