#pragma once

#include <json.hpp>
#include <string>
#include <string_view>

namespace blockforge {

/// Shortest of "%.9g": up to 9 significant digits, integers without a
/// fractional part. Non-finite values are rejected.
std::string format_real(double value);

/// JSON string literal with escapes.
std::string quote(std::string_view text);

/// Compact JSON with object keys in insertion order and reals via
/// format_real. Used for every canonical on-disk/wire document.
std::string canonical_dump(const nlohmann::ordered_json &value);

} // namespace blockforge
