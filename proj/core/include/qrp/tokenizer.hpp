#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qrp {

/// Splits UTF-8 text into lowercase tokens.
///
/// A token is a maximal run of word characters. ASCII letters and digits
/// are word characters; non-ASCII code points are word characters unless
/// they fall in a punctuation, symbol, space or emoji block. Case folding
/// covers ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic, Armenian and
/// fullwidth Latin. Malformed UTF-8 bytes act as separators. There is no
/// stemming and no stopword removal.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text);

/// Joins the first `max_tokens` tokens of `text` with single spaces.
[[nodiscard]] std::string snippet_of(std::string_view text, std::size_t max_tokens);

}  // namespace qrp
