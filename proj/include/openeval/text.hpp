#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace openeval {

/// Canonical form of a label: ASCII-lowercased, trimmed, internal whitespace
/// collapsed to one space, trailing punctuation removed. Idempotent.
std::string normalize_text(std::string_view text);

/// Lowercased word tokens. Whitespace and ASCII punctuation separate tokens
/// and are dropped; non-ASCII bytes are kept as word characters.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace openeval
