#include "blockforge/rules/oracle.hpp"

#include <cctype>
#include <cstdlib>
#include <httplib.h>
#include <set>

#include "blockforge/core/error.hpp"

namespace blockforge {

using nlohmann::json;

namespace {

struct KeywordEntry {
  const char *name;
  std::vector<std::string> keywords;
  json styles;
};

const std::vector<KeywordEntry> &keyword_table() {
  static const std::vector<KeywordEntry> table = {
      {"modern",
       {"modern"},
       {{"wall", {{"material", "concrete"}, {"color", "white"}}},
        {"window", {{"glass_material", "glass_reflective"}, {"frame_material", "metal"}}},
        {"roof", {{"shape", "flat"}, {"material", "concrete"}}}}},
      {"medieval",
       {"medieval", "castle"},
       {{"wall", {{"material", "stone"}, {"color", "gray"}}},
        {"roof", {{"material", "slate"}, {"shape", "gable"}}},
        {"door", {{"material", "oak"}}}}},
      {"wooden",
       {"wooden", "cabin"},
       {{"wall", {{"material", "wood"}, {"color", "brown"}}},
        {"roof", {{"material", "shingle"}, {"shape", "gable"}}}}},
      {"brick",
       {"brick", "victorian"},
       {{"wall", {{"material", "brick"}, {"color", "red"}}},
        {"roof", {{"material", "tile"}, {"shape", "hip"}}}}},
  };
  return table;
}

std::set<std::string> words_of(const std::string &prompt) {
  std::set<std::string> bag;
  std::string cur;
  for (char ch : prompt) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      bag.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) bag.insert(cur);
  return bag;
}

const KeywordEntry *match_entry(const std::string &prompt) {
  const auto bag = words_of(prompt);
  for (const auto &e : keyword_table()) {
    for (const auto &k : e.keywords) {
      if (bag.count(k)) return &e;
    }
  }
  return nullptr;
}

json request_body(const std::string &prompt, const std::vector<StyleQueryItem> &components) {
  json comps = json::array();
  for (const auto &c : components) comps.push_back({{"id", c.id}, {"category", c.category}});
  return {{"prompt", prompt}, {"components", comps}};
}

} // namespace

std::string offline_style_keyword(const std::string &prompt) {
  const auto *e = match_entry(prompt);
  return e ? e->name : "";
}

json offline_style_oracle(const std::string &prompt, const std::vector<StyleQueryItem> &components) {
  json out = json::object();
  const auto *e = match_entry(prompt);
  if (!e) return out;
  for (const auto &c : components) {
    auto it = e->styles.find(c.category);
    if (it != e->styles.end()) out[c.id] = *it;
  }
  return out;
}

RemoteStyleOracle::RemoteStyleOracle(std::string base_url, bool offline_fallback, std::chrono::milliseconds timeout,
                                     int retries)
    : base_url_(std::move(base_url)), offline_fallback_(offline_fallback), timeout_(timeout), retries_(retries) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

json RemoteStyleOracle::query(const std::string &prompt, const std::vector<StyleQueryItem> &components) {
  notes_.clear();
  const std::string body = request_body(prompt, components).dump();
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= retries_; ++attempt) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    auto res = client.Post("/v1/style", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::OracleMalformedResponse, "style oracle answered HTTP " + std::to_string(res->status));
    }
    json doc;
    try {
      doc = json::parse(res->body);
    } catch (const json::parse_error &e) {
      throw Error(ErrorCode::OracleMalformedResponse, std::string("style oracle body is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("styles")) {
      throw Error(ErrorCode::OracleMalformedResponse, "style oracle reply lacks \"styles\"");
    }
    return doc.at("styles");
  }
  const std::string msg = "style oracle at " + base_url_ + " unreachable after " + std::to_string(retries_ + 1) +
                          " attempts (" + last_error + ")";
  if (!offline_fallback_) throw Error(ErrorCode::OracleUnavailable, msg);
  notes_.push_back(msg + "; used offline keyword table");
  return offline_style_oracle(prompt, components);
}

std::unique_ptr<StyleOracle> make_style_oracle(const std::string &url_override) {
  std::string url = url_override;
  if (url.empty()) {
    if (const char *env = std::getenv("BLOCKFORGE_STYLE_ORACLE_URL")) url = env;
  }
  if (url.empty()) return std::make_unique<OfflineStyleOracle>();
  return std::make_unique<RemoteStyleOracle>(url);
}

StyleResolution resolve_styles(const RuleLayout &rules, const std::string &prompt, StyleOracle &oracle) {
  std::vector<StyleQueryItem> items;
  for (const auto &c : rules.components) items.push_back({c.id, c.category});
  const json reply = oracle.query(prompt, items);
  if (!reply.is_object()) throw Error(ErrorCode::OracleMalformedResponse, "styles must be an object keyed by id");

  StyleResolution out{rules, oracle.notes()};
  if (!prompt.empty()) out.rules.meta.prompt = prompt;
  for (auto it = reply.begin(); it != reply.end(); ++it) {
    if (!it->is_object()) {
      throw Error(ErrorCode::OracleMalformedResponse, "styles." + it.key() + " must be an object");
    }
    ComponentNode *node = out.rules.find(it.key());
    if (!node) {
      out.warnings.push_back("styles." + it.key() + ": unknown component id ignored");
      continue;
    }
    for (auto kv = it->begin(); kv != it->end(); ++kv) {
      const std::string path = "styles." + it.key() + "." + kv.key();
      auto cur = node->style.find(kv.key());
      if (cur == node->style.end()) {
        out.warnings.push_back(path + ": unknown key ignored");
        continue;
      }
      const bool same_kind = (cur->is_number() && kv->is_number()) || (cur->is_string() && kv->is_string()) ||
                             (cur->is_boolean() && kv->is_boolean());
      if (!same_kind || (kv->is_number() && !(kv->get<double>() > 0.0))) {
        out.warnings.push_back(path + ": value of wrong type ignored");
        continue;
      }
      *cur = *kv;
    }
  }
  return out;
}

} // namespace blockforge
