#pragma once

#include <cstdint>
#include <string>

namespace desne {

// Shortest fixed rendering that round-trips a double: printf "%.17g".
// All artifact files use it so identical values always produce identical
// bytes.
std::string format_g17(double v);

// FNV-1a 64-bit over a canonical string, rendered as 16 hex digits. Used
// for config_hash fields in artifact files.
std::uint64_t fnv1a(const std::string& s);
std::string fnv1a_hex(const std::string& s);

} // namespace desne
