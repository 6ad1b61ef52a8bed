#include "credmask/byte_io.hpp"

#include "credmask/error.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

namespace credmask {

void ByteWriter::u16(std::uint16_t v)
{
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

void ByteWriter::u64(std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

void ByteWriter::f64(double v)
{
    u64(std::bit_cast<std::uint64_t>(v));
}

void ByteWriter::raw(std::span<const std::uint8_t> bytes)
{
    out_.insert(out_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::raw(std::string_view s)
{
    out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::str(std::string_view s)
{
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n)
{
    if (n > remaining()) {
        fail(ErrorCode::BadFormat, "truncated input");
    }
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8()
{
    return raw(1)[0];
}

std::uint16_t ByteReader::u16()
{
    auto b = raw(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32()
{
    std::uint32_t v = 0;
    for (auto byte : raw(4)) {
        v = (v << 8) | byte;
    }
    return v;
}

std::uint64_t ByteReader::u64()
{
    std::uint64_t v = 0;
    for (auto byte : raw(8)) {
        v = (v << 8) | byte;
    }
    return v;
}

double ByteReader::f64()
{
    return std::bit_cast<double>(u64());
}

std::string ByteReader::str()
{
    const auto n = u32();
    auto b = raw(n);
    return {b.begin(), b.end()};
}

Bytes read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path + ": " + std::strerror(errno));
    }
    Bytes out{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) {
        fail(ErrorCode::IoError, "read failed: " + path);
    }
    return out;
}

} // namespace credmask
