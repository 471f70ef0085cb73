#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fseg3d {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Strict decimal parse of the whole field; nullopt on leftover text or a
/// non-finite result.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

}  // namespace fseg3d
