#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace iabsa {

using Rng = std::mt19937_64;

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Inputs whose dimensions disagree with the network size.
class ShapeError : public Error {
public:
    using Error::Error;
};

// An allocation that breaks one of the feasibility constraints.
class InfeasibleAllocation : public Error {
public:
    using Error::Error;
};

// Enumerations or action spaces beyond a configured cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Deterministic sub-stream derivation so that every (seed, purpose, index)
// triple gets an independent generator regardless of thread scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, stream, index));
}

// Shortest round-trip text form of a double; locale independent.
std::string format_double(double v);

}  // namespace iabsa
