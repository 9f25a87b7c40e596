#pragma once

#include <cstdint>
#include <vector>

namespace ssd {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Reserved begin-of-sequence marker used to front-pad conditioning contexts
// shorter than a model's order. Never a valid vocabulary token.
inline constexpr TokenId kBeginToken = -1;

}  // namespace ssd
