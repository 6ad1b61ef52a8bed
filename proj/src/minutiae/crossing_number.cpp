#include "credmask/minutiae.hpp"

#include <cmath>
#include <cstdlib>

namespace credmask::minutiae {

double normalize_angle(double theta) noexcept
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(theta, two_pi);
    if (r < 0) {
        r += two_pi;
    }
    // fmod of a tiny negative value can round up to exactly 2pi.
    return r >= two_pi ? 0.0 : r;
}

double angle_distance(double a, double b) noexcept
{
    const double d = std::fabs(normalize_angle(a) - normalize_angle(b));
    return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

std::array<std::uint8_t, 8> neighborhood(const BinaryImage& image, PixelPoint p) noexcept
{
    std::array<std::uint8_t, 8> ring{};
    for (std::size_t i = 0; i < kRingOffsets.size(); ++i) {
        ring[i] = image.at(p.row + kRingOffsets[i].row, p.col + kRingOffsets[i].col);
    }
    return ring;
}

int crossing_number(std::span<const std::uint8_t, 8> ring) noexcept
{
    int transitions = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        transitions += std::abs(int(ring[i] != 0) - int(ring[(i + 1) % 8] != 0));
    }
    return transitions / 2;
}

} // namespace credmask::minutiae
