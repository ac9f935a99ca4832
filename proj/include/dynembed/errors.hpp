#pragma once

#include <stdexcept>
#include <string>

namespace dynembed {

// Malformed input bytes: bad line arity, non-numeric fields, empty files.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Semantically invalid data or parameters: bad strides, empty splits,
// shape mismatches, missing files.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite numbers produced by training or evaluation.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dynembed
