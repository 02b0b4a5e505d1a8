#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gepa {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct Message {
  Role role = Role::User;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct GenerationRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 1.0;
  int max_tokens = 2048;

  /// Throws std::invalid_argument unless messages is non-empty, ends with a
  /// user turn, temperature >= 0 and max_tokens > 0.
  void validate() const;

  /// Convenience for the single-user-turn requests the engine sends.
  static GenerationRequest single_turn(std::string model_id, std::string prompt,
                                       double temperature, int max_tokens);
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct GenerationResult {
  std::string text;
  std::optional<TokenUsage> usage;
  std::optional<double> latency_ms;
};

/// Text-generation boundary. Implementations must tolerate concurrent calls.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

/// Decoding defaults for the two model families the optimizer was tuned with.
struct DecodingProfile {
  double temperature;
  int max_tokens;
};
inline constexpr DecodingProfile kOpenModelProfile{0.6, 16384};
inline constexpr DecodingProfile kHostedModelProfile{1.0, 16384};

// ---------------------------------------------------------------------------
// Scripted adapter

/// Deterministic offline generator.
///
/// Resolution order for each call: the first rule whose pattern occurs in the
/// last user message, then the next queued reply, then the default reply.
/// With none of those available the call throws ScriptExhausted. Every
/// request is recorded, including the ones that throw.
class ScriptedAdapter final : public Generator {
 public:
  using Responder = std::function<std::string(const GenerationRequest&)>;

  struct Rule {
    std::string pattern;
    Responder reply;
  };

  ScriptedAdapter() = default;

  ScriptedAdapter& on(std::string pattern, std::string reply);
  ScriptedAdapter& on(std::string pattern, Responder reply);
  ScriptedAdapter& enqueue(std::string reply);
  ScriptedAdapter& set_default(std::string reply);
  ScriptedAdapter& set_default(Responder reply);

  /// Makes matching calls throw a GenerationError; used to script failures.
  ScriptedAdapter& fail_on(std::string pattern, std::string message = "scripted failure");

  GenerationResult generate(const GenerationRequest& request) override;

  std::vector<GenerationRequest> requests() const;
  std::size_t call_count() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Rule> rules_;
  std::vector<std::pair<std::string, std::string>> failures_;
  std::vector<std::string> queue_;
  std::size_t queue_pos_ = 0;
  Responder default_;
  std::vector<GenerationRequest> log_;
};

/// Builds a scripted adapter from substring rules and an optional default.
std::shared_ptr<ScriptedAdapter> scripted_adapter(
    const std::vector<std::pair<std::string, std::string>>& rules,
    std::optional<std::string> default_reply = std::nullopt);

// ---------------------------------------------------------------------------
// Remote chat-completions adapter

struct RetryEvent {
  int attempt = 0;        ///< 1-based attempt that failed
  int status = 0;         ///< HTTP status, 0 for transport failures
  std::string reason;
  std::chrono::milliseconds delay{0};
};

struct ChatCompletionsConfig {
  /// e.g. "https://api.openai.com/v1"; the request goes to base_url + "/chat/completions".
  std::string base_url;
  std::string api_key;
  std::string model_id;
  double temperature = kHostedModelProfile.temperature;
  int max_tokens = kHostedModelProfile.max_tokens;
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30'000};
  std::chrono::milliseconds timeout{120'000};
  bool debug = false;

  /// Reads GEPA_API_BASE and GEPA_API_KEY; explicit fields win when already set.
  static ChatCompletionsConfig from_environment(ChatCompletionsConfig base);
  static ChatCompletionsConfig from_environment();
};

/// Client for OpenAI-compatible POST /chat/completions endpoints.
///
/// Transport failures, HTTP 408/409/429 and 5xx are retried with exponential
/// backoff. Other statuses raise ProviderError immediately.
class ChatCompletionsAdapter final : public Generator {
 public:
  using RetryObserver = std::function<void(const RetryEvent&)>;
  using DebugSink = std::function<void(std::string_view)>;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit ChatCompletionsAdapter(ChatCompletionsConfig config);
  ~ChatCompletionsAdapter() override;

  GenerationResult generate(const GenerationRequest& request) override;

  void set_retry_observer(RetryObserver observer) { on_retry_ = std::move(observer); }
  void set_debug_sink(DebugSink sink) { debug_sink_ = std::move(sink); }
  /// Replaces the backoff sleep; tests use this to avoid real waiting.
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  const ChatCompletionsConfig& config() const { return config_; }

  /// Request body sent for a given request; exposed for wire-format tests.
  std::string request_body(const GenerationRequest& request) const;

  /// Extracts the completion from a response body. Throws ProviderError on
  /// responses without a first choice.
  static GenerationResult parse_response(int status, const std::string& body);

 private:
  std::chrono::milliseconds backoff_for(int attempt) const;
  void debug(std::string_view message) const;

  ChatCompletionsConfig config_;
  std::string host_;
  std::string path_prefix_;
  RetryObserver on_retry_;
  DebugSink debug_sink_;
  Sleeper sleeper_;
};

/// Replaces the value of an Authorization header or api key in a log line.
std::string redact_credentials(std::string text, std::string_view api_key);

}  // namespace gepa
