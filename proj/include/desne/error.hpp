#pragma once

#include <stdexcept>
#include <string>

namespace desne {

// Malformed or unreadable input: bad files, headers that do not match the
// payload, out-of-range user values. Maps to CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A violated internal invariant (e.g. cancellation beyond the tolerated
// bound in the distance assembly). Maps to CLI exit code 4.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

} // namespace desne
