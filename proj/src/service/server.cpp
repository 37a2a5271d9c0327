#include "blockforge/service/server.hpp"

#include <cstdio>
#include <httplib.h>
#include <random>

#include "blockforge/core/error.hpp"
#include "blockforge/core/rng.hpp"
#include "blockforge/diffusion/checkpoint.hpp"
#include "blockforge/diffusion/sample.hpp"
#include "blockforge/layout/jsonl.hpp"
#include "blockforge/layout/taxonomy.hpp"
#include "blockforge/service/pipeline.hpp"

namespace blockforge {

using nlohmann::json;

namespace {

constexpr int kMaxSampleCount = 64;

const char *kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>BlockForge</title></head>
<body>
<h1>BlockForge service</h1>
<p>No editor bundle is installed. Start the server with <code>--ui-dir</code> pointing at a built layout-studio bundle.</p>
<p>API: <code>/api/categories</code>, <code>/api/sample</code>, <code>/api/expand</code>, <code>/api/build</code>, <code>/api/session</code>.</p>
</body></html>
)";

void send_json(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_errors(httplib::Response &res, int status, const std::vector<std::string> &errors) {
  send_json(res, status, {{"errors", errors}});
}

/// Parses the body as a JSON object or answers 400.
std::optional<json> body_object(const httplib::Request &req, httplib::Response &res) {
  try {
    json doc = req.body.empty() ? json::object() : json::parse(req.body);
    if (!doc.is_object()) {
      send_errors(res, 400, {"$: expected an object"});
      return std::nullopt;
    }
    return doc;
  } catch (const json::parse_error &e) {
    send_errors(res, 400, {std::string("$: invalid JSON: ") + e.what()});
    return std::nullopt;
  }
}

std::optional<BoxLayout> layout_field(const json &doc, const char *key, httplib::Response &res) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    send_errors(res, 400, {std::string(key) + ": missing key"});
    return std::nullopt;
  }
  try {
    return layout_from_json_line(it->dump());
  } catch (const Error &e) {
    send_errors(res, 400, {std::string(key) + ": " + e.what()});
    return std::nullopt;
  }
}

json layout_json(const BoxLayout &layout) { return json::parse(layout_to_json_line(layout)); }

json build_json(const BuildResult &b) {
  return {{"obj", base64_encode(b.obj)},
          {"manifest", json::parse(b.manifest.dump())},
          {"digest", b.digest},
          {"warnings", b.warnings}};
}

/// Validates a rule document, answering 400 with every error on failure.
std::optional<RuleLayout> rule_field(const json &doc, const char *key, httplib::Response &res) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    send_errors(res, 400, {std::string(key) + ": missing key"});
    return std::nullopt;
  }
  auto v = validate_rule_json(*it);
  if (!v.ok()) {
    std::vector<std::string> errors;
    for (const auto &e : v.errors) errors.push_back(std::string(key) + "." + e);
    send_errors(res, 400, errors);
    return std::nullopt;
  }
  return v.rules;
}

std::optional<RuleLayout> checked_expand(const BoxLayout &layout, const std::string &prompt, const std::string &oracle_url,
                                         std::vector<std::string> &warnings, httplib::Response &res) {
  try {
    auto oracle = make_style_oracle(oracle_url);
    auto ex = expand_layout(layout, prompt, *oracle);
    auto v = validate_rule_json(json::parse(serialize_rule_layout(ex.rules)));
    if (!v.ok()) {
      send_errors(res, 400, v.errors);
      return std::nullopt;
    }
    warnings = std::move(ex.warnings);
    return std::move(ex.rules);
  } catch (const Error &e) {
    const int status = e.code() == ErrorCode::OracleUnavailable ? 502 : 400;
    send_errors(res, status, {e.what()});
    return std::nullopt;
  }
}

} // namespace

BlockForgeService::BlockForgeService(ServiceOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (options_.model_path) {
    auto ck = load_checkpoint(*options_.model_path);
    schedule_ = make_linear_schedule(ck.config.diffusion_steps, ck.config.beta_start, ck.config.beta_end);
    model_ = std::make_unique<DenoiserModel>(std::move(ck.model));
  }
  session_salt_ = std::random_device{}();
  session_salt_ = (session_salt_ << 32) ^ std::random_device{}();
  routes();
}

BlockForgeService::~BlockForgeService() { stop(); }

int BlockForgeService::bind(const std::string &host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

bool BlockForgeService::listen_after_bind() { return server_->listen_after_bind(); }

void BlockForgeService::stop() {
  if (server_) server_->stop();
}

void BlockForgeService::evict_expired() {
  const auto now = std::chrono::steady_clock::now();
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock lock(it->second->mutex, std::try_to_lock);
    if (lock.owns_lock() && now - it->second->touched > options_.session_ttl) it = sessions_.erase(it);
    else ++it;
  }
}

std::shared_ptr<SessionState> BlockForgeService::create_session() {
  std::lock_guard lock(sessions_mutex_);
  evict_expired();
  auto s = std::make_shared<SessionState>();
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s%016llx", static_cast<unsigned long long>(splitmix64(session_salt_ + ++session_counter_)));
  s->id = buf;
  s->touched = std::chrono::steady_clock::now();
  sessions_[s->id] = s;
  return s;
}

std::shared_ptr<SessionState> BlockForgeService::session(const std::string &id) {
  std::lock_guard lock(sessions_mutex_);
  evict_expired();
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  it->second->touched = std::chrono::steady_clock::now();
  return it->second;
}

void BlockForgeService::routes() {
  auto &srv = *server_;

  if (!options_.ui_dir.empty() && std::filesystem::is_directory(options_.ui_dir)) {
    srv.set_mount_point("/", options_.ui_dir.string());
  } else {
    srv.Get("/", [](const httplib::Request &, httplib::Response &res) { res.set_content(kPlaceholderPage, "text/html"); });
  }

  srv.Get("/api/categories", [](const httplib::Request &, httplib::Response &res) {
    json names = json::array();
    for (auto n : CategoryTaxonomy::names()) names.push_back(std::string(n));
    send_json(res, 200, {{"categories", names}, {"empty", CategoryTaxonomy::name_of(CategoryTaxonomy::kEmpty)}});
  });

  srv.Post("/api/sample", [this](const httplib::Request &req, httplib::Response &res) {
    auto doc = body_object(req, res);
    if (!doc) return;
    std::vector<std::string> errors;
    if (!doc->contains("prompt") || !(*doc)["prompt"].is_string()) errors.push_back("prompt: expected a string");
    const json count = doc->value("count", json(1));
    if (!count.is_number_integer() || count.get<long long>() < 1 || count.get<long long>() > kMaxSampleCount) {
      errors.push_back("count: expected an integer in [1, " + std::to_string(kMaxSampleCount) + "]");
    }
    const json seed = doc->value("seed", json(0));
    if (!seed.is_number_integer() || seed.get<long long>() < 0) errors.push_back("seed: expected a non-negative integer");
    if (!errors.empty()) return send_errors(res, 400, errors);
    if (!model_) return send_errors(res, 503, {"no model loaded; start the service with --model"});

    Rng rng(seed.get<std::uint64_t>());
    const auto layouts = sample(*model_, schedule_, (*doc)["prompt"].get<std::string>(), count.get<int>(), rng,
                                options_.sampling_steps);
    json out = json::array();
    for (const auto &l : layouts) out.push_back(layout_json(l));
    send_json(res, 200, {{"layouts", out}});
  });

  srv.Post("/api/expand", [this](const httplib::Request &req, httplib::Response &res) {
    auto doc = body_object(req, res);
    if (!doc) return;
    auto layout = layout_field(*doc, "layout", res);
    if (!layout) return;
    const json prompt = doc->value("prompt", json(""));
    if (!prompt.is_string()) return send_errors(res, 400, {"prompt: expected a string"});
    std::vector<std::string> warnings;
    auto rules = checked_expand(*layout, prompt.get<std::string>(), options_.oracle_url, warnings, res);
    if (!rules) return;
    send_json(res, 200, {{"rule", json::parse(serialize_rule_layout(*rules))}, {"warnings", warnings}});
  });

  srv.Post("/api/build", [](const httplib::Request &req, httplib::Response &res) {
    auto doc = body_object(req, res);
    if (!doc) return;
    auto rules = rule_field(*doc, "rule", res);
    if (!rules) return;
    try {
      send_json(res, 200, build_json(build_rules(*rules)));
    } catch (const Error &e) {
      send_errors(res, 400, {e.what()});
    }
  });

  srv.Post("/api/session", [this](const httplib::Request &, httplib::Response &res) {
    send_json(res, 200, {{"id", create_session()->id}});
  });

  // Resolves the session or answers 404; the returned lock serializes the session.
  auto with_session = [this](const httplib::Request &req, httplib::Response &res,
                             const std::function<void(SessionState &)> &fn) {
    auto s = session(req.matches[1]);
    if (!s) return send_errors(res, 404, {"unknown session '" + std::string(req.matches[1]) + "'"});
    std::lock_guard lock(s->mutex);
    fn(*s);
  };

  srv.Get(R"(/api/session/([A-Za-z0-9_-]+)/layout)", [with_session](const httplib::Request &req, httplib::Response &res) {
    with_session(req, res, [&](SessionState &s) {
      if (!s.layout) return send_errors(res, 404, {"session has no layout"});
      res.status = 200;
      res.set_content(layout_to_json_line(*s.layout), "application/json");
    });
  });

  srv.Put(R"(/api/session/([A-Za-z0-9_-]+)/layout)", [with_session](const httplib::Request &req, httplib::Response &res) {
    with_session(req, res, [&](SessionState &s) {
      BoxLayout layout;
      try {
        layout = layout_from_json_line(req.body);
      } catch (const Error &e) {
        return send_errors(res, 400, {e.what()});
      }
      s.layout = std::move(layout);
      s.rules.reset();
      res.status = 200;
      res.set_content(layout_to_json_line(*s.layout), "application/json");
    });
  });

  srv.Get(R"(/api/session/([A-Za-z0-9_-]+)/rule)", [with_session](const httplib::Request &req, httplib::Response &res) {
    with_session(req, res, [&](SessionState &s) {
      if (!s.rules) return send_errors(res, 404, {"session has no rule layout"});
      res.status = 200;
      res.set_content(serialize_rule_layout(*s.rules), "application/json");
    });
  });

  srv.Put(R"(/api/session/([A-Za-z0-9_-]+)/rule)", [with_session](const httplib::Request &req, httplib::Response &res) {
    with_session(req, res, [&](SessionState &s) {
      auto v = validate_rule_layout(std::string_view(req.body));
      if (!v.ok()) return send_errors(res, 400, v.errors);
      s.rules = std::move(v.rules);
      res.status = 200;
      res.set_content(serialize_rule_layout(*s.rules), "application/json");
    });
  });

  srv.Post(R"(/api/session/([A-Za-z0-9_-]+)/build)", [this, with_session](const httplib::Request &req, httplib::Response &res) {
    auto doc = body_object(req, res);
    if (!doc) return;
    const json prompt = doc->value("prompt", json(""));
    if (!prompt.is_string()) return send_errors(res, 400, {"prompt: expected a string"});
    with_session(req, res, [&](SessionState &s) {
      std::optional<RuleLayout> rules = s.rules;
      std::vector<std::string> warnings;
      if (!rules) {
        if (!s.layout) return send_errors(res, 400, {"session has neither a layout nor a rule layout"});
        rules = checked_expand(*s.layout, prompt.get<std::string>(), options_.oracle_url, warnings, res);
        if (!rules) return;
      }
      BuildResult b;
      try {
        b = build_rules(*rules);
      } catch (const Error &e) {
        return send_errors(res, 400, {e.what()});
      }
      s.rules = *rules;
      s.last_digest = b.digest;
      s.last_obj = b.obj;
      json out = build_json(b);
      out["rule"] = json::parse(serialize_rule_layout(*rules));
      for (const auto &w : warnings) out["warnings"].push_back(w);
      send_json(res, 200, out);
    });
  });

  srv.Get(R"(/api/session/([A-Za-z0-9_-]+)/mesh.obj)", [with_session](const httplib::Request &req, httplib::Response &res) {
    with_session(req, res, [&](SessionState &s) {
      if (s.last_digest.empty()) return send_errors(res, 404, {"session has not been built"});
      res.status = 200;
      res.set_content(s.last_obj, "model/obj");
    });
  });
}

} // namespace blockforge
