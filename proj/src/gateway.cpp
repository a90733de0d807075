#include "critmem/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "critmem/errors.hpp"
#include "critmem/util.hpp"

namespace critmem {

std::string to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    throw ConfigError("unknown chat role: " + text);
}

std::string to_string(Phase phase) {
    return phase == Phase::training ? "training" : "utilization";
}

void TokenMeter::add(Phase phase, std::size_t prompt_tokens, std::size_t completion_tokens) {
    std::lock_guard<std::mutex> lock(mutex_);
    PhaseTokens& slot = phase == Phase::training ? training_ : utilization_;
    slot.prompt_tokens += prompt_tokens;
    slot.completion_tokens += completion_tokens;
    ++calls_;
}

void TokenMeter::absorb(const TokenMeter& other) {
    PhaseTokens training;
    PhaseTokens utilization;
    std::size_t calls = 0;
    {
        std::lock_guard<std::mutex> lock(other.mutex_);
        training = other.training_;
        utilization = other.utilization_;
        calls = other.calls_;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    training_.prompt_tokens += training.prompt_tokens;
    training_.completion_tokens += training.completion_tokens;
    utilization_.prompt_tokens += utilization.prompt_tokens;
    utilization_.completion_tokens += utilization.completion_tokens;
    calls_ += calls;
}

PhaseTokens TokenMeter::total() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return {training_.prompt_tokens + utilization_.prompt_tokens,
            training_.completion_tokens + utilization_.completion_tokens};
}

PhaseTokens TokenMeter::phase(Phase phase) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return phase == Phase::training ? training_ : utilization_;
}

std::size_t TokenMeter::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

nlohmann::json TokenMeter::snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return nlohmann::json{
        {"calls", calls_},
        {"training", {{"prompt_tokens", training_.prompt_tokens},
                      {"completion_tokens", training_.completion_tokens}}},
        {"utilization", {{"prompt_tokens", utilization_.prompt_tokens},
                         {"completion_tokens", utilization_.completion_tokens}}}};
}

CompletionResult complete(Backend& backend, const ChatRequest& request, TokenMeter& meter,
                          Phase phase) {
    if (request.messages.empty()) throw ConfigError("complete: empty message list");
    for (const auto& message : request.messages) {
        if (message.role != Role::system && message.content.empty()) {
            throw ConfigError("complete: empty " + to_string(message.role) + " message");
        }
    }
    CompletionResult result = backend.complete(request);
    meter.add(phase, result.prompt_tokens, result.completion_tokens);
    return result;
}

ChatRequest make_request(std::vector<ChatMessage> messages, const Backend& backend) {
    ChatRequest request;
    request.messages = std::move(messages);
    request.model_id = backend.model_id();
    return request;
}

std::string transcript_text(const std::vector<ChatMessage>& messages) {
    std::string text;
    for (const auto& message : messages) {
        if (!text.empty()) text.push_back('\n');
        text += message.content;
    }
    return text;
}

ScriptRule rule_contains(std::string needle, std::string reply) {
    return {[needle = std::move(needle)](const std::vector<ChatMessage>& messages) {
                return transcript_text(messages).find(needle) != std::string::npos;
            },
            [reply = std::move(reply)](const std::vector<ChatMessage>&) { return reply; }};
}

ScriptRule rule_default(std::string reply) {
    return {[](const std::vector<ChatMessage>&) { return true; },
            [reply = std::move(reply)](const std::vector<ChatMessage>&) { return reply; }};
}

ScriptRule rule_default_fn(ReplyFn reply) {
    return {[](const std::vector<ChatMessage>&) { return true; }, std::move(reply)};
}

namespace {

class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(std::vector<ScriptRule> rules, std::string model_id)
        : rules_(std::move(rules)), model_id_(std::move(model_id)) {}

    CompletionResult complete(const ChatRequest& request) override {
        for (const auto& rule : rules_) {
            if (rule.matcher(request.messages)) {
                CompletionResult result;
                result.text = rule.reply(request.messages);
                for (const auto& message : request.messages) {
                    result.prompt_tokens += whitespace_token_count(message.content);
                }
                result.completion_tokens = whitespace_token_count(result.text);
                return result;
            }
        }
        throw ScriptError("scripted backend: no rule matched and no default rule present");
    }

    std::string model_id() const override { return model_id_; }

private:
    std::vector<ScriptRule> rules_;
    std::string model_id_;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) throw ConfigError("http backend: base_url is required");
        if (config_.max_attempts == 0) throw ConfigError("http backend: max_attempts must be >= 1");
    }

    CompletionResult complete(const ChatRequest& request) override {
        nlohmann::json body;
        body["model"] = request.model_id.empty() ? config_.model : request.model_id;
        body["temperature"] = request.temperature;
        if (request.max_output_tokens) {
            body["max_tokens"] = *request.max_output_tokens;
        } else if (config_.max_output_tokens) {
            body["max_tokens"] = *config_.max_output_tokens;
        }
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& message : request.messages) {
            messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
        }
        body["messages"] = std::move(messages);
        const std::string payload = body.dump();

        std::string last_error;
        std::size_t delay_ms = config_.backoff_ms;
        for (std::size_t attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            httplib::Headers headers;
            if (!config_.api_key_env.empty()) {
                if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
                    headers.emplace("Authorization", std::string("Bearer ") + key);
                }
            }
            auto response = client.Post(config_.path, headers, payload, "application/json");
            if (!response) {
                last_error = "transport error: " + httplib::to_string(response.error());
                continue;
            }
            if (response->status == 429 || response->status >= 500) {
                last_error = "HTTP " + std::to_string(response->status);
                continue;
            }
            if (response->status != 200) {
                throw ProtocolError("chat completions returned HTTP " +
                                    std::to_string(response->status) + ": " + response->body);
            }
            return parse_payload(response->body);
        }
        throw TransportError("chat completions failed after " +
                             std::to_string(config_.max_attempts) + " attempts: " + last_error);
    }

    std::string model_id() const override { return config_.model; }

private:
    static CompletionResult parse_payload(const std::string& body) {
        nlohmann::json payload;
        try {
            payload = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& ex) {
            throw ProtocolError(std::string("chat completions payload is not JSON: ") + ex.what());
        }
        if (!payload.contains("choices") || !payload["choices"].is_array() ||
            payload["choices"].empty()) {
            throw ProtocolError("chat completions payload has no choices: " + body);
        }
        CompletionResult result;
        try {
            result.text = payload["choices"][0].at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
            throw ProtocolError(std::string("chat completions payload missing message content: ") +
                                ex.what());
        }
        if (payload.contains("usage") && payload["usage"].is_object()) {
            const auto& usage = payload["usage"];
            result.prompt_tokens = usage.value("prompt_tokens", 0u);
            result.completion_tokens = usage.value("completion_tokens", 0u);
        }
        return result;
    }

    HttpBackendConfig config_;
};

} // namespace

BackendHandle scripted_backend(std::vector<ScriptRule> rules, std::string model_id) {
    return std::make_shared<ScriptedBackend>(std::move(rules), std::move(model_id));
}

BackendHandle http_backend(HttpBackendConfig config) {
    return std::make_shared<HttpBackend>(std::move(config));
}

} // namespace critmem
