#include "ddlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace ddlab {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x)
{
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t Stream::next_u64()
{
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Stream::uniform()
{
    // 53 random bits, shifted half a ulp away from zero.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal()
{
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Stream RngPolicy::stream(std::string_view purpose, std::uint64_t replicate, std::uint64_t index) const
{
    std::uint64_t h = mix64(master_seed_ + kGolden);
    h = mix64(h ^ fnv1a64(purpose));
    h = mix64(h ^ (replicate + 0x632BE59BD9B4E019ULL));
    h = mix64(h ^ (index + 0x85EBCA77C2B2AE63ULL));
    return Stream(h);
}

} // namespace ddlab
