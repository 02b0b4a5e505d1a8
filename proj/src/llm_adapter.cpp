#include "gepa/llm_adapter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "gepa/errors.hpp"
#include "httplib.h"

namespace gepa {

using json = nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "system") return Role::System;
  if (text == "user") return Role::User;
  if (text == "assistant") return Role::Assistant;
  throw std::invalid_argument("unknown message role '" + std::string(text) + "'");
}

void GenerationRequest::validate() const {
  if (messages.empty()) throw std::invalid_argument("generation request has no messages");
  if (messages.back().role != Role::User)
    throw std::invalid_argument("last message of a generation request must be a user turn");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
}

GenerationRequest GenerationRequest::single_turn(std::string model_id, std::string prompt,
                                                 double temperature, int max_tokens) {
  GenerationRequest request;
  request.model_id = std::move(model_id);
  request.messages.push_back({Role::User, std::move(prompt)});
  request.temperature = temperature;
  request.max_tokens = max_tokens;
  return request;
}

// ---------------------------------------------------------------------------
// ScriptedAdapter

ScriptedAdapter& ScriptedAdapter::on(std::string pattern, std::string reply) {
  return on(std::move(pattern), [reply = std::move(reply)](const GenerationRequest&) { return reply; });
}

ScriptedAdapter& ScriptedAdapter::on(std::string pattern, Responder reply) {
  std::lock_guard lock(mutex_);
  rules_.push_back({std::move(pattern), std::move(reply)});
  return *this;
}

ScriptedAdapter& ScriptedAdapter::enqueue(std::string reply) {
  std::lock_guard lock(mutex_);
  queue_.push_back(std::move(reply));
  return *this;
}

ScriptedAdapter& ScriptedAdapter::set_default(std::string reply) {
  return set_default([reply = std::move(reply)](const GenerationRequest&) { return reply; });
}

ScriptedAdapter& ScriptedAdapter::set_default(Responder reply) {
  std::lock_guard lock(mutex_);
  default_ = std::move(reply);
  return *this;
}

ScriptedAdapter& ScriptedAdapter::fail_on(std::string pattern, std::string message) {
  std::lock_guard lock(mutex_);
  failures_.emplace_back(std::move(pattern), std::move(message));
  return *this;
}

GenerationResult ScriptedAdapter::generate(const GenerationRequest& request) {
  request.validate();
  Responder responder;
  std::optional<std::string> queued;
  {
    std::lock_guard lock(mutex_);
    log_.push_back(request);
    const std::string& prompt = request.messages.back().content;
    for (const auto& [pattern, message] : failures_) {
      if (prompt.find(pattern) != std::string::npos) throw GenerationError(message);
    }
    for (const auto& rule : rules_) {
      if (prompt.find(rule.pattern) != std::string::npos) {
        responder = rule.reply;
        break;
      }
    }
    if (!responder) {
      if (queue_pos_ < queue_.size()) {
        queued = queue_[queue_pos_++];
      } else if (default_) {
        responder = default_;
      } else {
        throw ScriptExhausted();
      }
    }
  }
  GenerationResult result;
  result.text = queued ? std::move(*queued) : responder(request);
  return result;
}

std::vector<GenerationRequest> ScriptedAdapter::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t ScriptedAdapter::call_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

std::shared_ptr<ScriptedAdapter> scripted_adapter(
    const std::vector<std::pair<std::string, std::string>>& rules,
    std::optional<std::string> default_reply) {
  auto adapter = std::make_shared<ScriptedAdapter>();
  for (const auto& [pattern, reply] : rules) adapter->on(pattern, reply);
  if (default_reply) adapter->set_default(*default_reply);
  return adapter;
}

// ---------------------------------------------------------------------------
// ChatCompletionsAdapter

namespace {

bool is_retryable_status(int status) {
  return status == 408 || status == 409 || status == 429 || status >= 500;
}

std::string getenv_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : std::string();
}

}  // namespace

ChatCompletionsConfig ChatCompletionsConfig::from_environment() { return from_environment(ChatCompletionsConfig{}); }

ChatCompletionsConfig ChatCompletionsConfig::from_environment(ChatCompletionsConfig base) {
  if (base.base_url.empty()) base.base_url = getenv_or_empty("GEPA_API_BASE");
  if (base.api_key.empty()) base.api_key = getenv_or_empty("GEPA_API_KEY");
  return base;
}

ChatCompletionsAdapter::ChatCompletionsAdapter(ChatCompletionsConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("chat-completions adapter needs a base URL (GEPA_API_BASE)");
  const auto scheme = config_.base_url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base URL must include a scheme: " + config_.base_url);
  const auto path = config_.base_url.find('/', scheme + 3);
  host_ = config_.base_url.substr(0, path);
  path_prefix_ = path == std::string::npos ? std::string() : config_.base_url.substr(path);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (host_.rfind("https://", 0) == 0) throw ConfigError("this build has no TLS support; use an http:// endpoint");
#endif
  sleeper_ = [](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); };
}

ChatCompletionsAdapter::~ChatCompletionsAdapter() = default;

std::string ChatCompletionsAdapter::request_body(const GenerationRequest& request) const {
  json messages = json::array();
  for (const auto& message : request.messages) {
    messages.push_back({{"role", std::string(to_string(message.role))}, {"content", message.content}});
  }
  json body = {
      {"model", request.model_id.empty() ? config_.model_id : request.model_id},
      {"messages", std::move(messages)},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  return body.dump();
}

GenerationResult ChatCompletionsAdapter::parse_response(int status, const std::string& body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) throw ProviderError(status, body);
  const auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) throw ProviderError(status, body);
  const json& message = (*choices)[0].value("message", json::object());
  const auto content = message.find("content");
  if (content == message.end() || !content->is_string()) throw ProviderError(status, body);

  GenerationResult result;
  result.text = content->get<std::string>();
  if (auto usage = parsed.find("usage"); usage != parsed.end() && usage->is_object()) {
    result.usage = TokenUsage{usage->value("prompt_tokens", std::int64_t{0}),
                              usage->value("completion_tokens", std::int64_t{0})};
  }
  return result;
}

std::chrono::milliseconds ChatCompletionsAdapter::backoff_for(int attempt) const {
  const double scaled = static_cast<double>(config_.initial_backoff.count()) *
                        std::pow(config_.backoff_multiplier, attempt - 1);
  const auto capped = std::min(scaled, static_cast<double>(config_.max_backoff.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

void ChatCompletionsAdapter::debug(std::string_view message) const {
  if (!config_.debug || !debug_sink_) return;
  debug_sink_(redact_credentials(std::string(message), config_.api_key));
}

GenerationResult ChatCompletionsAdapter::generate(const GenerationRequest& request) {
  request.validate();
  const std::string body = request_body(request);
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - timeout_s);

  for (int attempt = 1;; ++attempt) {
    httplib::Client client(host_);
    client.set_connection_timeout(timeout_s.count(), timeout_us.count());
    client.set_read_timeout(timeout_s.count(), timeout_us.count());
    client.set_write_timeout(timeout_s.count(), timeout_us.count());

    debug("POST " + host_ + path + " " + body);
    const auto started = std::chrono::steady_clock::now();
    auto response = client.Post(path, headers, body, "application/json");
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);

    RetryEvent event;
    event.attempt = attempt;
    bool timed_out = false;
    if (!response) {
      timed_out = response.error() == httplib::Error::Read &&
                  elapsed >= std::chrono::duration<double, std::milli>(config_.timeout);
      event.reason = httplib::to_string(response.error());
    } else {
      debug("HTTP " + std::to_string(response->status) + " " + response->body);
      if (response->status >= 200 && response->status < 300) {
        GenerationResult result = parse_response(response->status, response->body);
        result.latency_ms = elapsed.count();
        return result;
      }
      if (!is_retryable_status(response->status)) throw ProviderError(response->status, response->body);
      event.status = response->status;
      event.reason = response->body;
    }

    if (attempt > config_.max_retries) {
      if (event.status != 0) throw ProviderError(event.status, event.reason);
      if (timed_out) throw TimeoutError("request timed out after " + std::to_string(attempt) + " attempts");
      throw TransportError("transport failure after " + std::to_string(attempt) + " attempts: " + event.reason);
    }
    event.delay = backoff_for(attempt);
    if (on_retry_) on_retry_(event);
    sleeper_(event.delay);
  }
}

std::string redact_credentials(std::string text, std::string_view api_key) {
  if (!api_key.empty()) {
    for (auto pos = text.find(api_key); pos != std::string::npos; pos = text.find(api_key, pos)) {
      text.replace(pos, api_key.size(), "[REDACTED]");
      pos += 10;
    }
  }
  const std::string marker = "Bearer ";
  for (auto pos = text.find(marker); pos != std::string::npos; pos = text.find(marker, pos + marker.size())) {
    auto end = text.find_first_of(" \r\n\"", pos + marker.size());
    if (end == std::string::npos) end = text.size();
    text.replace(pos + marker.size(), end - pos - marker.size(), "[REDACTED]");
  }
  return text;
}

}  // namespace gepa
