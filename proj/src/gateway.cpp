#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "sleepcot/gateway.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "sleepcot/util.hpp"

namespace sleepcot {

using nlohmann::json;

const char* to_string(FinishReason f) noexcept {
  switch (f) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "?";
}

void ChatRequest::validate() const {
  if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat request has no messages");
  bool seen_non_system = false;
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
      throw Error(ErrorCode::InvalidArgument, "unknown message role '" + m.role + "'");
    }
    if (!seen_non_system && m.role != "system") {
      if (m.role != "user") throw Error(ErrorCode::InvalidArgument, "first non-system message must be from the user");
      seen_non_system = true;
    }
  }
  if (!seen_non_system) throw Error(ErrorCode::InvalidArgument, "chat request has no user message");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  if (max_output_units < 1) throw Error(ErrorCode::InvalidArgument, "max_output_units must be positive");
}

json ChatRequest::to_wire() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model_name}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_output_units}};
}

std::string ChatRequest::cache_key() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back(json::array({m.role, m.content}));
  const json canon = {{"backend_id", backend_id},
                      {"model_name", model_name},
                      {"messages", msgs},
                      {"temperature", temperature},
                      {"max_output_units", max_output_units}};
  return sha256_hex(canon.dump());
}

ChatResponse parse_wire_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidResponse, std::string("response is not JSON: ") + e.what());
  }
  ChatResponse r;
  try {
    const auto& choice = j.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    if (!content.is_string()) throw Error(ErrorCode::InvalidResponse, "message content is not a string");
    r.content = content.get<std::string>();
    const std::string finish = choice.value("finish_reason", std::string("stop"));
    r.finish_reason = finish == "length" ? FinishReason::Length
                      : finish == "stop"  ? FinishReason::Stop
                                          : FinishReason::Error;
    if (j.contains("usage") && j["usage"].is_object()) {
      r.prompt_units = j["usage"].value("prompt_tokens", 0L);
      r.completion_units = j["usage"].value("completion_tokens", 0L);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidResponse, std::string("unexpected response shape: ") + e.what());
  }
  if (r.finish_reason == FinishReason::Stop && r.content.empty()) {
    throw Error(ErrorCode::InvalidResponse, "empty content with finish_reason=stop");
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {
std::atomic<bool> g_armed{false};
std::atomic<long> g_trips{0};
}  // namespace

void NetworkTripwire::arm() { g_armed = true; }
void NetworkTripwire::disarm() { g_armed = false; }
bool NetworkTripwire::armed() { return g_armed.load(); }
long NetworkTripwire::trips() { return g_trips.load(); }
void NetworkTripwire::reset() { g_trips = 0; }

void NetworkTripwire::check(const std::string& who) {
  if (g_armed.load()) {
    ++g_trips;
    throw Error(ErrorCode::BackendUnavailable, who + ": network access attempted while the tripwire is armed");
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<ChatMessage> messages_from_wire(const json& wire) {
  std::vector<ChatMessage> out;
  for (const auto& m : wire.at("messages")) out.push_back({m.at("role"), m.at("content")});
  return out;
}

std::string wire_body(const std::string& content, long prompt_units) {
  const long completion = static_cast<long>(content.size() / 4 + 1);
  return json{{"choices", json::array({{{"index", 0},
                                         {"message", {{"role", "assistant"}, {"content", content}}},
                                         {"finish_reason", "stop"}}})},
              {"usage", {{"prompt_tokens", prompt_units}, {"completion_tokens", completion}}}}
      .dump();
}

}  // namespace

MockBackend::MockBackend(std::string id) : id_(std::move(id)) {}

void MockBackend::set_exact(std::string last_user_message, std::string reply) {
  exact_[std::move(last_user_message)] = std::move(reply);
}

void MockBackend::add_rule(std::string substring, std::string reply) {
  rules_.emplace_back(std::move(substring), std::move(reply));
}

void MockBackend::fail_next(int n, int status) {
  fail_status_ = status;
  fail_remaining_ = n;
}

std::vector<json> MockBackend::request_log() const {
  std::lock_guard<std::mutex> lock(log_mu_);
  return log_;
}

WireReply MockBackend::post(const json& wire) {
  ++calls_;
  const int now = ++in_flight_;
  int prev = max_in_flight_.load();
  while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { --n; }
  } leave{in_flight_};
  {
    std::lock_guard<std::mutex> lock(log_mu_);
    log_.push_back(wire);
  }
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

  if (fail_remaining_.load() > 0 && fail_remaining_.fetch_sub(1) > 0) return {fail_status_.load(), "{}"};

  const auto messages = messages_from_wire(wire);
  if (raw_hook_) {
    if (auto raw = raw_hook_(messages)) return *raw;
  }
  std::string last_user;
  for (const auto& m : messages)
    if (m.role == "user") last_user = m.content;
  long prompt_units = 0;
  for (const auto& m : messages) prompt_units += static_cast<long>(m.content.size() / 4 + 1);

  if (auto it = exact_.find(last_user); it != exact_.end()) return {200, wire_body(it->second, prompt_units)};
  for (const auto& [needle, reply] : rules_) {
    if (last_user.find(needle) != std::string::npos) return {200, wire_body(reply, prompt_units)};
  }
  if (responder_) {
    if (auto reply = responder_(messages, wire.value("temperature", 0.0))) return {200, wire_body(*reply, prompt_units)};
  }
  return {200, wire_body("MOCK: " + last_user, prompt_units)};
}

WireReply TripwireBackend::post(const json&) {
  NetworkTripwire::check(id_);
  // Reached only when the wire is disarmed; still never touch the network.
  throw Error(ErrorCode::BackendUnavailable, id_ + ": tripwire backend cannot serve requests");
}

// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.find("://") == std::string::npos) {
    throw Error(ErrorCode::ConfigError, cfg_.id + ": base_url must include a scheme");
  }
}

WireReply HttpBackend::post(const json& wire_request) {
  NetworkTripwire::check(cfg_.id);
  const auto scheme_end = cfg_.base_url.find("://") + 3;
  const auto path_start = cfg_.base_url.find('/', scheme_end);
  const std::string origin = cfg_.base_url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? std::string() : cfg_.base_url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/chat/completions";

  httplib::Client client(origin);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);
  httplib::Headers headers;
  if (!cfg_.auth_env_var.empty()) {
    const char* key = std::getenv(cfg_.auth_env_var.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::ConfigError, cfg_.id + ": environment variable " + cfg_.auth_env_var + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(path, headers, wire_request.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendUnavailable, cfg_.id + ": " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

// ---------------------------------------------------------------------------

Gateway::Gateway(GatewayOptions opts) : opts_(std::move(opts)) {
  if (opts_.max_attempts < 1) opts_.max_attempts = 1;
}

void Gateway::register_backend(std::shared_ptr<Backend> backend, std::string default_model) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string id = backend->id();
  backends_[id] = {std::move(backend), std::move(default_model)};
}

bool Gateway::has_backend(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return backends_.count(id) != 0;
}

std::string Gateway::default_model(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = backends_.find(id);
  return it == backends_.end() ? std::string() : it->second.second;
}

std::vector<std::string> Gateway::backend_ids() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, b] : backends_) out.push_back(id);
  return out;
}

std::filesystem::path Gateway::cache_path(const std::string& key) const {
  return opts_.cache_dir / key.substr(0, 2) / (key + ".json");
}

ChatResponse Gateway::send_chat(const ChatRequest& req) {
  req.validate();
  std::shared_ptr<Backend> backend;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = backends_.find(req.backend_id);
    if (it == backends_.end()) throw Error(ErrorCode::UnknownBackend, "backend '" + req.backend_id + "' is not registered");
    backend = it->second.first;
  }
  const std::string key = req.cache_key();
  auto stamp = [&](ChatResponse r) {
    r.backend_id = req.backend_id;
    r.model_name = req.model_name;
    r.temperature = req.temperature;
    r.request_tag = req.request_tag;
    r.cache_key = key;
    return r;
  };

  const bool caching = !opts_.cache_dir.empty();
  if (caching && opts_.read_cache) {
    const auto path = cache_path(key);
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
      try {
        const json j = json::parse(read_file(path));
        ChatResponse r;
        r.content = j.at("content").get<std::string>();
        r.finish_reason = j.value("finish_reason", std::string("stop")) == "length" ? FinishReason::Length
                                                                                    : FinishReason::Stop;
        r.prompt_units = j.value("prompt_units", 0L);
        r.completion_units = j.value("completion_units", 0L);
        r.cached = true;
        return stamp(r);
      } catch (const std::exception&) {
        // Unreadable entry: fall through and refresh it.
      }
    }
  }

  const json wire = req.to_wire();
  std::string last_error;
  for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
    if (attempt > 1 && opts_.base_delay.count() > 0) {
      std::this_thread::sleep_for(opts_.base_delay * (1LL << (attempt - 2)));
    }
    const auto t0 = std::chrono::steady_clock::now();
    WireReply reply;
    try {
      reply = backend->post(wire);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendUnavailable) throw;
      last_error = e.what();
      continue;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (reply.status == 429 || (reply.status >= 500 && reply.status <= 599)) {
      last_error = "HTTP " + std::to_string(reply.status);
      continue;
    }
    if (reply.status < 200 || reply.status >= 300) {
      throw Error(ErrorCode::GatewayError, req.backend_id + ": HTTP " + std::to_string(reply.status) + ": " +
                                               reply.body.substr(0, 200));
    }
    ChatResponse r = parse_wire_response(reply.body);
    r.latency_ms = ms;
    if (caching) {
      const json entry = {{"key", key},
                          {"request", wire},
                          {"content", r.content},
                          {"finish_reason", to_string(r.finish_reason)},
                          {"prompt_units", r.prompt_units},
                          {"completion_units", r.completion_units}};
      write_file_atomic(cache_path(key), entry.dump(2));
    }
    return stamp(r);
  }
  throw Error(ErrorCode::BackendUnavailable, req.backend_id + ": giving up after " +
                                                 std::to_string(opts_.max_attempts) + " attempts (" + last_error + ")");
}

std::vector<ChatOutcome> Gateway::map_bounded(const std::vector<ChatRequest>& reqs, int parallelism) {
  if (parallelism < 1) throw Error(ErrorCode::InvalidArgument, "parallelism must be >= 1");
  std::vector<ChatOutcome> out(reqs.size());
  if (reqs.empty()) return out;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reqs.size(); i = next++) {
      try {
        out[i].response = send_chat(reqs[i]);
        out[i].ok = true;
      } catch (const Error& e) {
        out[i].error_code = e.code();
        out[i].error = e.what();
      } catch (const std::exception& e) {
        out[i].error_code = ErrorCode::GatewayError;
        out[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), reqs.size());
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace sleepcot
