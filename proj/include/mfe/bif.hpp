#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>

#include "mfe/model.hpp"

namespace mfe {

// Parses the BNLearn dialect of BIF: a network block, discrete variable
// blocks and probability blocks with either a `table` row (roots only) or one
// parenthesised row per parent configuration. Rows summing to 1 within 1e-6
// are renormalised; anything else throws ParseError with a location.
// Structural problems (cycles) surface as ValidationError.
Network parse_bif(std::string_view text);
Network parse_bif(std::istream& in);

// Reads a file; a network declared as `unknown` is named after the file stem.
Network load_bif(const std::filesystem::path& path);

}  // namespace mfe
