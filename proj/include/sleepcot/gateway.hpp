#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepcot/error.hpp"

namespace sleepcot {

inline constexpr double kSynthesisTemperature = 1.0;
inline constexpr double kJudgeTemperature = 0.0;

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string backend_id;
  std::string model_name;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_units = 2048;
  std::string request_tag;

  /// Throws InvalidArgument unless messages are nonempty, roles are known,
  /// the first non-system message is from the user and the numbers are sane.
  void validate() const;
  /// Chat-completions request body.
  nlohmann::json to_wire() const;
  /// SHA-256 over backend, model, messages, temperature and output cap.
  std::string cache_key() const;
};

enum class FinishReason { Stop, Length, Error };
const char* to_string(FinishReason f) noexcept;

struct ChatResponse {
  std::string content;
  FinishReason finish_reason = FinishReason::Stop;
  long prompt_units = 0;
  long completion_units = 0;
  bool cached = false;
  double latency_ms = 0.0;
  // provenance
  std::string backend_id;
  std::string model_name;
  double temperature = 0.0;
  std::string request_tag;
  std::string cache_key;
};

/// Parses a chat-completions response body. InvalidResponse on any shape error.
ChatResponse parse_wire_response(const std::string& body);

struct WireReply {
  int status = 200;
  std::string body;
};

/// One transport. post() returns the raw HTTP-like reply; it may throw
/// Error(BackendUnavailable) for connection-level failures, which the gateway
/// retries like a 5xx.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& id() const = 0;
  virtual WireReply post(const nlohmann::json& wire_request) = 0;
};

/// Process-wide switch that forbids real network traffic. Any attempt while
/// armed is counted and rejected.
class NetworkTripwire {
 public:
  static void arm();
  static void disarm();
  static bool armed();
  static long trips();
  static void reset();
  /// Called by network-capable backends before any I/O.
  static void check(const std::string& who);
};

/// Table-driven offline backend. Lookup order: exact table on the last user
/// message, substring rules, responder callback, then the echo fallback
/// "MOCK: <last user message>".
class MockBackend : public Backend {
 public:
  using Responder = std::function<std::optional<std::string>(const std::vector<ChatMessage>&, double temperature)>;
  using RawHook = std::function<std::optional<WireReply>(const std::vector<ChatMessage>&)>;

  explicit MockBackend(std::string id = "mock");

  const std::string& id() const override { return id_; }
  WireReply post(const nlohmann::json& wire_request) override;

  void set_exact(std::string last_user_message, std::string reply);
  void add_rule(std::string substring, std::string reply);
  void set_responder(Responder r) { responder_ = std::move(r); }
  /// Hook that may replace the wire reply entirely (malformed payloads, 5xx).
  void set_raw_hook(RawHook h) { raw_hook_ = std::move(h); }
  /// The next `n` calls answer with `status` before normal behaviour resumes.
  void fail_next(int n, int status = 503);
  void set_delay(std::chrono::milliseconds d) { delay_ = d; }

  long calls() const { return calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }
  std::vector<nlohmann::json> request_log() const;

 private:
  std::string id_;
  std::map<std::string, std::string> exact_;
  std::vector<std::pair<std::string, std::string>> rules_;
  Responder responder_;
  RawHook raw_hook_;
  std::chrono::milliseconds delay_{0};
  std::atomic<int> fail_remaining_{0};
  std::atomic<int> fail_status_{503};
  std::atomic<long> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  mutable std::mutex log_mu_;
  std::vector<nlohmann::json> log_;
};

/// Backend that must never be reached: every call trips the network wire.
class TripwireBackend : public Backend {
 public:
  explicit TripwireBackend(std::string id = "tripwire") : id_(std::move(id)) {}
  const std::string& id() const override { return id_; }
  WireReply post(const nlohmann::json& wire_request) override;

 private:
  std::string id_;
};

struct HttpBackendConfig {
  std::string id;
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model_name;
  std::string auth_env_var;  // name of the variable holding the API key
  double timeout_s = 60.0;
};

/// Chat-completions over HTTP(S): POST {base_url}/chat/completions.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);
  const std::string& id() const override { return cfg_.id; }
  WireReply post(const nlohmann::json& wire_request) override;

 private:
  HttpBackendConfig cfg_;
};

struct GatewayOptions {
  std::filesystem::path cache_dir;  // empty disables caching
  bool read_cache = true;           // false: bypass reads, still write
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
};

/// Result slot of map_bounded.
struct ChatOutcome {
  bool ok = false;
  ChatResponse response;
  ErrorCode error_code = ErrorCode::GatewayError;
  std::string error;
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions opts = {});

  void register_backend(std::shared_ptr<Backend> backend, std::string default_model = {});
  bool has_backend(const std::string& id) const;
  std::string default_model(const std::string& id) const;
  std::vector<std::string> backend_ids() const;

  /// Cache first, then the backend with retries on 429/5xx. Thread-safe.
  ChatResponse send_chat(const ChatRequest& req);

  /// In-order results with at most `parallelism` requests in flight. Item
  /// failures stay in their slot.
  std::vector<ChatOutcome> map_bounded(const std::vector<ChatRequest>& reqs, int parallelism);

  const GatewayOptions& options() const { return opts_; }

 private:
  std::filesystem::path cache_path(const std::string& key) const;
  GatewayOptions opts_;
  mutable std::mutex mu_;
  std::map<std::string, std::pair<std::shared_ptr<Backend>, std::string>> backends_;
};

}  // namespace sleepcot
