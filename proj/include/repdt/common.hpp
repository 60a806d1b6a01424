#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace repdt {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for file-system and stream failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// splitmix64 finalizer; used to derive independent per-item seeds from a
// master seed and a counter so that adding items never reshuffles earlier ones.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t counter) noexcept {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace repdt
