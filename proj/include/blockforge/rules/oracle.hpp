#pragma once

#include <chrono>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "blockforge/rules/rule_layout.hpp"

namespace blockforge {

struct StyleQueryItem {
  std::string id;
  std::string category;
};

/// Answers {id: {key: value}} style overrides for a prompt.
class StyleOracle {
public:
  virtual ~StyleOracle() = default;
  virtual nlohmann::json query(const std::string &prompt, const std::vector<StyleQueryItem> &components) = 0;
  /// Notes such as fallbacks taken during the last query.
  virtual std::vector<std::string> notes() const { return {}; }
};

/// Keyword table scanned in priority order; the first entry with a keyword
/// among the prompt's words wins. Pure and deterministic.
nlohmann::json offline_style_oracle(const std::string &prompt, const std::vector<StyleQueryItem> &components);

/// Name of the keyword-table entry chosen for a prompt, or "" when none.
std::string offline_style_keyword(const std::string &prompt);

class OfflineStyleOracle : public StyleOracle {
public:
  nlohmann::json query(const std::string &prompt, const std::vector<StyleQueryItem> &components) override {
    return offline_style_oracle(prompt, components);
  }
};

/// HTTP client for POST {base_url}/v1/style. Transport failures are retried;
/// after the last attempt it either falls back to the offline table or
/// throws OracleUnavailable.
class RemoteStyleOracle : public StyleOracle {
public:
  explicit RemoteStyleOracle(std::string base_url, bool offline_fallback = true,
                             std::chrono::milliseconds timeout = std::chrono::seconds(5), int retries = 2);

  nlohmann::json query(const std::string &prompt, const std::vector<StyleQueryItem> &components) override;
  std::vector<std::string> notes() const override { return notes_; }

private:
  std::string base_url_;
  bool offline_fallback_;
  std::chrono::milliseconds timeout_;
  int retries_;
  std::vector<std::string> notes_;
};

/// Remote oracle when BLOCKFORGE_STYLE_ORACLE_URL is set, else offline.
std::unique_ptr<StyleOracle> make_style_oracle(const std::string &url_override = "");

struct StyleResolution {
  RuleLayout rules;
  std::vector<std::string> warnings;
};

/// Queries the oracle once and overwrites matching template keys. Unknown
/// ids, unknown keys and type mismatches are skipped with a warning.
/// Throws OracleMalformedResponse when the reply is not {id: {key: value}}.
StyleResolution resolve_styles(const RuleLayout &rules, const std::string &prompt, StyleOracle &oracle);

} // namespace blockforge
