#include "blockforge/diffusion/text.hpp"

#include <cctype>
#include <cstdint>

namespace blockforge {

std::vector<std::string> tokenize(std::string_view prompt) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : prompt) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

int token_bucket(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : token) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return static_cast<int>(h % static_cast<std::uint64_t>(kTextVocabulary));
}

std::vector<int> prompt_tokens(std::string_view prompt) {
  std::vector<int> ids;
  for (const auto &tok : tokenize(prompt)) {
    if (static_cast<int>(ids.size()) >= kMaxContext - 1) break;
    ids.push_back(token_bucket(tok));
  }
  return ids;
}

} // namespace blockforge
