#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <thread>

#include "sleepcot/error.hpp"
#include "sleepcot/gateway.hpp"

using namespace sleepcot;
using nlohmann::json;

namespace {

ChatRequest ask(const std::string& text, const std::string& backend = "mock", double temperature = 0.0) {
  ChatRequest r;
  r.backend_id = backend;
  r.model_name = "m";
  r.messages = {{"user", text}};
  r.temperature = temperature;
  return r;
}

GatewayOptions fast(std::filesystem::path cache = {}) {
  GatewayOptions o;
  o.cache_dir = std::move(cache);
  o.base_delay = std::chrono::milliseconds(1);
  return o;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("request validation and wire shape") {
  auto r = ask("hi");
  CHECK_NOTHROW(r.validate());
  const auto w = r.to_wire();
  CHECK(w["model"] == "m");
  CHECK(w["messages"][0]["role"] == "user");
  CHECK(w["messages"][0]["content"] == "hi");
  CHECK(w["temperature"] == 0.0);

  auto bad = r;
  bad.messages.clear();
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = r;
  bad.messages[0].role = "robot";
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = r;
  bad.temperature = -1;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);

  // the cache key covers content and temperature
  CHECK(r.cache_key() == ask("hi").cache_key());
  CHECK(r.cache_key() != ask("hi!").cache_key());
  CHECK(r.cache_key() != ask("hi", "mock", 1.0).cache_key());
}

TEST_CASE("wire response parsing") {
  const auto ok = parse_wire_response(
      R"({"choices":[{"message":{"role":"assistant","content":"hello"},"finish_reason":"length"}],)"
      R"("usage":{"prompt_tokens":3,"completion_tokens":1}})");
  CHECK(ok.content == "hello");
  CHECK(ok.finish_reason == FinishReason::Length);
  CHECK(ok.prompt_units == 3);
  for (const char* body : {"not json", "{}", R"({"choices":[]})", R"({"choices":[{"message":{}}]})"}) {
    CHECK(code_of([&] { parse_wire_response(body); }) == ErrorCode::InvalidResponse);
  }
}

TEST_CASE("mock lookup order and echo fallback") {
  Gateway gw(fast());
  auto mock = std::make_shared<MockBackend>("mock");
  mock->set_exact("exact", "from table");
  mock->add_rule("needle", "from rule");
  mock->set_responder([](const std::vector<ChatMessage>& m, double) -> std::optional<std::string> {
    if (m.back().content == "call me") return "from responder";
    return std::nullopt;
  });
  gw.register_backend(mock, "m");
  CHECK(gw.send_chat(ask("exact")).content == "from table");
  CHECK(gw.send_chat(ask("hay needle hay")).content == "from rule");
  CHECK(gw.send_chat(ask("call me")).content == "from responder");
  CHECK(gw.send_chat(ask("anything")).content == "MOCK: anything");
  CHECK(gw.send_chat(ask("x")).backend_id == "mock");
  CHECK(code_of([&] { gw.send_chat(ask("x", "ghost")); }) == ErrorCode::UnknownBackend);
}

TEST_CASE("cache hit on repeat, bypass with read_cache off") {
  const auto dir = fresh_dir("sleepcot_cache_test");
  auto mock = std::make_shared<MockBackend>("mock");
  mock->set_exact("q", "a");
  {
    Gateway gw(fast(dir));
    gw.register_backend(mock, "m");
    const auto first = gw.send_chat(ask("q"));
    const auto second = gw.send_chat(ask("q"));
    CHECK_FALSE(first.cached);
    CHECK(second.cached);
    CHECK(second.content == "a");
    CHECK(mock->calls() == 1);
    CHECK(first.cache_key == ask("q").cache_key());
  }
  {
    auto o = fast(dir);
    o.read_cache = false;
    Gateway gw(o);
    gw.register_backend(mock, "m");
    CHECK_FALSE(gw.send_chat(ask("q")).cached);
    CHECK(mock->calls() == 2);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("temperature zero is deterministic against the mock") {
  Gateway gw(fast());
  gw.register_backend(std::make_shared<MockBackend>("mock"), "m");
  CHECK(gw.send_chat(ask("same")).content == gw.send_chat(ask("same")).content);
}

TEST_CASE("retries on 429 and 5xx, fails fast on other errors") {
  Gateway gw(fast());
  auto mock = std::make_shared<MockBackend>("mock");
  gw.register_backend(mock, "m");
  mock->fail_next(2, 503);
  CHECK(gw.send_chat(ask("x")).content == "MOCK: x");
  CHECK(mock->calls() == 3);

  mock->fail_next(1, 429);
  CHECK_NOTHROW(gw.send_chat(ask("y")));

  mock->fail_next(10, 500);
  CHECK(code_of([&] { gw.send_chat(ask("z")); }) == ErrorCode::BackendUnavailable);  // retries exhausted

  mock->fail_next(0);
  mock->set_raw_hook([](const std::vector<ChatMessage>&) -> std::optional<WireReply> { return WireReply{400, "bad"}; });
  const long before = mock->calls();
  CHECK(code_of([&] { gw.send_chat(ask("w")); }) == ErrorCode::GatewayError);
  CHECK(mock->calls() == before + 1);

  mock->set_raw_hook([](const std::vector<ChatMessage>&) -> std::optional<WireReply> { return WireReply{200, "{}"}; });
  CHECK(code_of([&] { gw.send_chat(ask("v")); }) == ErrorCode::InvalidResponse);
}

TEST_CASE("map_bounded keeps order, bounds concurrency and isolates failures") {
  Gateway gw(fast());
  auto mock = std::make_shared<MockBackend>("mock");
  mock->set_delay(std::chrono::milliseconds(15));
  mock->set_raw_hook([](const std::vector<ChatMessage>& m) -> std::optional<WireReply> {
    if (m.back().content == "item 6") return WireReply{400, "no"};
    return std::nullopt;
  });
  gw.register_backend(mock, "m");
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back(ask("item " + std::to_string(i)));
  const auto out = gw.map_bounded(reqs, 4);
  REQUIRE(out.size() == 10);
  for (int i = 0; i < 10; ++i) {
    if (i == 6) {
      CHECK_FALSE(out[i].ok);
      CHECK(out[i].error_code == ErrorCode::GatewayError);
    } else {
      CHECK(out[i].ok);
      CHECK(out[i].response.content == "MOCK: item " + std::to_string(i));
    }
  }
  CHECK(mock->max_in_flight() <= 4);
  CHECK(mock->max_in_flight() >= 2);
  CHECK(gw.map_bounded({}, 4).empty());
}

TEST_CASE("armed tripwire stops network backends") {
  NetworkTripwire::reset();
  NetworkTripwire::arm();
  Gateway gw(fast());
  gw.register_backend(std::make_shared<TripwireBackend>("wire"), "m");
  HttpBackendConfig hc{"http", "http://127.0.0.1:9", "m", "", 1.0};
  gw.register_backend(std::make_shared<HttpBackend>(hc), "m");
  CHECK_THROWS_AS(gw.send_chat(ask("x", "wire")), Error);
  CHECK_THROWS_AS(gw.send_chat(ask("x", "http")), Error);
  CHECK(NetworkTripwire::trips() > 0);
  NetworkTripwire::disarm();
  NetworkTripwire::reset();
}

TEST_CASE("HTTP backend speaks chat completions to a local server") {
  NetworkTripwire::disarm();
  httplib::Server server;
  std::string seen_auth;
  json seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"pong"},"finish_reason":"stop"}]})",
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("SLEEPCOT_TEST_KEY", "secret-value", 1);
  HttpBackendConfig hc{"local", "http://127.0.0.1:" + std::to_string(port) + "/v1", "local-model", "SLEEPCOT_TEST_KEY",
                       5.0};
  Gateway gw(fast());
  gw.register_backend(std::make_shared<HttpBackend>(hc), "local-model");
  auto req = ask("ping", "local");
  req.model_name = "local-model";
  const auto resp = gw.send_chat(req);
  CHECK(resp.content == "pong");
  CHECK(seen_auth == "Bearer secret-value");
  CHECK(seen_body["model"] == "local-model");
  CHECK(seen_body["messages"][0]["content"] == "ping");

  ::unsetenv("SLEEPCOT_TEST_KEY");
  CHECK(code_of([&] { gw.send_chat(ask("again", "local")); }) == ErrorCode::ConfigError);
  server.stop();
  th.join();
}
