#pragma once

#include <string>
#include <string_view>

namespace applan {

// RFC 4648 with padding.
std::string base64_encode(std::string_view bytes);
// Throws PlanError(malformed_syntax) on invalid input.
std::string base64_decode(std::string_view text);

}  // namespace applan
