#pragma once

#include <string>
#include <string_view>

namespace spdalp {

/// Shortest decimal that round-trips to the same double; "nan"/"inf" spelled out.
std::string format_double(double value);

/// Inverse of format_double; throws DomainError on malformed input.
double parse_double(std::string_view text);

}  // namespace spdalp
