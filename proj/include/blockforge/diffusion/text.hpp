#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace blockforge {

inline constexpr int kTextVocabulary = 4096;
inline constexpr int kMaxContext = 32;

/// Lowercases and splits on anything that is not an ASCII letter or digit.
std::vector<std::string> tokenize(std::string_view prompt);

/// FNV-1a bucket of a token in [0, kTextVocabulary).
int token_bucket(std::string_view token);

/// Bucket ids for a prompt, truncated so that together with the pooled
/// summary row the context has at most kMaxContext rows.
std::vector<int> prompt_tokens(std::string_view prompt);

} // namespace blockforge
