#include "credmask/byte_io.hpp"
#include "credmask/error.hpp"

#include <gtest/gtest.h>

using namespace credmask;

TEST(ByteIo, WritesBigEndian)
{
    ByteWriter w;
    w.u16(0x0102);
    w.u32(0x03040506);
    w.i64(-2);
    const Bytes expected = {1, 2, 3, 4, 5, 6, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFE};
    EXPECT_EQ(w.bytes(), expected);
}

TEST(ByteIo, RoundTripsEveryField)
{
    ByteWriter w;
    w.u8(7);
    w.u64(0x1122334455667788ULL);
    w.f64(-0.1);
    w.str("héllo");
    const auto bytes = std::move(w).take();

    ByteReader r(bytes);
    EXPECT_EQ(r.u8(), 7);
    EXPECT_EQ(r.u64(), 0x1122334455667788ULL);
    EXPECT_EQ(r.f64(), -0.1);
    EXPECT_EQ(r.str(), "héllo");
    EXPECT_TRUE(r.done());
}

TEST(ByteIo, OverrunIsBadFormat)
{
    const Bytes bytes = {0, 0, 0, 9, 'a'};
    ByteReader r(bytes);
    try {
        (void)r.str();
        FAIL() << "expected BadFormat";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadFormat);
    }
}
