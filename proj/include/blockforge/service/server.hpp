#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "blockforge/diffusion/denoiser.hpp"
#include "blockforge/diffusion/schedule.hpp"
#include "blockforge/layout/box.hpp"
#include "blockforge/rules/rule_layout.hpp"

namespace httplib {
class Server;
}

namespace blockforge {

struct ServiceOptions {
  /// Checkpoint to sample from; without one /api/sample answers 503.
  std::optional<std::filesystem::path> model_path;
  /// Directory served at "/"; a built-in placeholder page otherwise.
  std::filesystem::path ui_dir;
  /// Style oracle base URL; empty uses BLOCKFORGE_STYLE_ORACLE_URL or the
  /// offline table.
  std::string oracle_url;
  /// Respaced sampling steps for /api/sample (0 = full schedule).
  int sampling_steps = 100;
  std::chrono::seconds session_ttl{3600};
};

struct SessionState {
  std::string id;
  std::optional<BoxLayout> layout;
  std::optional<RuleLayout> rules;
  std::string last_digest;
  std::string last_obj;
  std::chrono::steady_clock::time_point touched;
  std::mutex mutex;
};

/// HTTP front end. Model parameters are shared read-only between requests;
/// each session serializes its own mutations.
class BlockForgeService {
public:
  explicit BlockForgeService(ServiceOptions options);
  ~BlockForgeService();

  BlockForgeService(const BlockForgeService &) = delete;
  BlockForgeService &operator=(const BlockForgeService &) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind(const std::string &host, int port);
  /// Blocks serving requests until stop().
  bool listen_after_bind();
  void stop();

  bool has_model() const { return model_ != nullptr; }

private:
  void routes();
  std::shared_ptr<SessionState> session(const std::string &id);
  std::shared_ptr<SessionState> create_session();
  void evict_expired();

  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<DenoiserModel> model_;
  NoiseSchedule schedule_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionState>> sessions_;
  std::uint64_t session_counter_ = 0;
  std::uint64_t session_salt_ = 0;
};

} // namespace blockforge
