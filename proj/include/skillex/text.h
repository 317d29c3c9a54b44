#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace skillex::text {

/// Tokenizes for literal skill matching: NFKC, lowercase, then split on
/// whitespace and punctuation. '+' and '#' runs that trail an alphanumeric
/// stay attached ("c++", "c#"); '.' stays when an alphanumeric follows it
/// (".net", "node.js") so sentence-final periods are still dropped.
std::vector<std::string> normalize(std::string_view text);

/// normalize() joined with single spaces. Empty when there are no tokens.
std::string normalized_form(std::string_view text);

/// NFKC + lowercase without tokenization.
std::string fold_case(std::string_view text);

/// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string to_code_points(std::string_view utf8);

std::size_t code_point_length(std::string_view utf8);

}  // namespace skillex::text
