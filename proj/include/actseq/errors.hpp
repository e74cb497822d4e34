#pragma once

#include <stdexcept>

namespace actseq {

// Bad input data or configuration (malformed files, unknown names, impossible
// options). The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A broken internal contract: shape mismatches, invalid parameter tables.
// The CLI maps this to exit code 2.
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace actseq
