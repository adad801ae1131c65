#pragma once

#include <string>
#include <string_view>

namespace chdqn {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Parses a full string as a double (accepts "nan", "inf"). Throws DataError.
double parse_double(std::string_view text);

}  // namespace chdqn
