#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace critmem {

enum class Role { system, user, assistant };

std::string to_string(Role role);
Role role_from_string(const std::string& text);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

inline ChatMessage user_msg(std::string content) { return {Role::user, std::move(content)}; }
inline ChatMessage assistant_msg(std::string content) { return {Role::assistant, std::move(content)}; }

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::string model_id;
    std::optional<std::size_t> max_output_tokens;
};

struct CompletionResult {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

// Where a call's tokens are booked: memory construction vs inference.
enum class Phase { training, utilization };

std::string to_string(Phase phase);

struct PhaseTokens {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::size_t total() const { return prompt_tokens + completion_tokens; }
};

// Running token sums, total and per phase. Safe to update from several
// workers.
class TokenMeter {
public:
    void add(Phase phase, std::size_t prompt_tokens, std::size_t completion_tokens);
    void absorb(const TokenMeter& other); // fold another meter in, keeping call counts
    PhaseTokens total() const;
    PhaseTokens phase(Phase phase) const;
    std::size_t call_count() const;
    nlohmann::json snapshot() const;

private:
    mutable std::mutex mutex_;
    PhaseTokens training_;
    PhaseTokens utilization_;
    std::size_t calls_ = 0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResult complete(const ChatRequest& request) = 0;
    virtual std::string model_id() const = 0;
};

using BackendHandle = std::shared_ptr<Backend>;

// One metering point for every call in the harness. Meter increments happen
// only after the backend returned a payload, so failed attempts never count.
CompletionResult complete(Backend& backend, const ChatRequest& request, TokenMeter& meter,
                          Phase phase);

ChatRequest make_request(std::vector<ChatMessage> messages, const Backend& backend);

// --- scripted backend ------------------------------------------------------

using PromptMatcher = std::function<bool(const std::vector<ChatMessage>&)>;
using ReplyFn = std::function<std::string(const std::vector<ChatMessage>&)>;

struct ScriptRule {
    PromptMatcher matcher;
    ReplyFn reply;
};

ScriptRule rule_contains(std::string needle, std::string reply);
ScriptRule rule_default(std::string reply);
ScriptRule rule_default_fn(ReplyFn reply);

// Deterministic offline backend: first matching rule wins, token counts are
// whitespace tokens.
BackendHandle scripted_backend(std::vector<ScriptRule> rules, std::string model_id = "scripted");

// Every message content, joined with newlines. What matchers usually scan.
std::string transcript_text(const std::vector<ChatMessage>& messages);

// --- HTTP backend -----------------------------------------------------------

struct HttpBackendConfig {
    std::string base_url;          // e.g. https://api.openai.com
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_seconds = 60.0;
    std::size_t max_attempts = 3;
    std::size_t backoff_ms = 500; // doubled per retry
    std::optional<std::size_t> max_output_tokens;
};

// OpenAI-compatible chat completions over HTTP. Retries transient transport
// failures and 429/5xx with exponential backoff.
BackendHandle http_backend(HttpBackendConfig config);

} // namespace critmem
