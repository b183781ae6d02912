#pragma once

#include <string>
#include <string_view>

namespace vsmrf {

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

/// Strict full-string parse; throws std::invalid_argument on trailing garbage.
double parse_double(std::string_view s);

}  // namespace vsmrf
