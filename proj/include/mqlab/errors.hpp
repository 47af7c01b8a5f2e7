#pragma once

#include <stdexcept>

namespace mqlab {

/// Bad input: malformed spec files, dimension mismatches, contract misuse.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A request would exceed an enumeration cap.
class CapExceededError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration the machinery provably cannot handle
/// (e.g. competitive herding with more than two products).
class UnsupportedConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conditioning event has probability zero.
class UndefinedPosteriorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mqlab
