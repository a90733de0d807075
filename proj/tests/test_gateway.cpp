#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "critmem/errors.hpp"
#include "critmem/gateway.hpp"

using namespace critmem;

TEST_CASE("scripted backend: first matching rule wins, deterministic") {
    auto backend = scripted_backend({rule_contains("final question", "A"), rule_default("B")});
    ChatRequest request;
    request.messages = {user_msg("Here is your final question, pick one.")};
    CHECK(backend->complete(request).text == "A");
    CHECK(backend->complete(request).text == "A");

    ChatRequest other;
    other.messages = {user_msg("something else")};
    CHECK(backend->complete(other).text == "B");
}

TEST_CASE("scripted backend: no matching rule raises") {
    auto backend = scripted_backend({rule_contains("never-present", "A")});
    ChatRequest request;
    request.messages = {user_msg("hello")};
    CHECK_THROWS_AS(backend->complete(request), ScriptError);
}

TEST_CASE("scripted backend: whitespace token accounting") {
    auto backend = scripted_backend({rule_default("two words")});
    ChatRequest request;
    request.messages = {user_msg("one two three"), assistant_msg("four")};
    const CompletionResult result = backend->complete(request);
    CHECK(result.prompt_tokens == 4);
    CHECK(result.completion_tokens == 2);
}

TEST_CASE("meter: phases sum to total, identical calls meter identically") {
    auto backend = scripted_backend({rule_default("ok sure")});
    TokenMeter meter;
    ChatRequest request;
    request.messages = {user_msg("a b c")};
    const CompletionResult first = complete(*backend, request, meter, Phase::training);
    const CompletionResult second = complete(*backend, request, meter, Phase::utilization);
    CHECK(first.prompt_tokens == second.prompt_tokens);
    CHECK(meter.call_count() == 2);
    CHECK(meter.phase(Phase::training).prompt_tokens == first.prompt_tokens);
    CHECK(meter.phase(Phase::utilization).prompt_tokens == second.prompt_tokens);
    CHECK(meter.total().prompt_tokens ==
          meter.phase(Phase::training).prompt_tokens +
              meter.phase(Phase::utilization).prompt_tokens);
    CHECK(meter.total().completion_tokens == 4);
}

TEST_CASE("meter: conservation over many randomized calls") {
    auto backend = scripted_backend({rule_default("r e p l y")});
    TokenMeter meter;
    std::size_t expected_prompt = 0;
    std::size_t expected_completion = 0;
    for (int i = 0; i < 100; ++i) {
        ChatRequest request;
        std::string content;
        for (int w = 0; w <= i % 7; ++w) content += "word ";
        request.messages = {user_msg(content)};
        const Phase phase = (i % 3 == 0) ? Phase::training : Phase::utilization;
        const CompletionResult result = complete(*backend, request, meter, phase);
        expected_prompt += result.prompt_tokens;
        expected_completion += result.completion_tokens;
    }
    CHECK(meter.total().prompt_tokens == expected_prompt);
    CHECK(meter.total().completion_tokens == expected_completion);
    CHECK(meter.call_count() == 100);
}

TEST_CASE("complete rejects empty or blank messages") {
    auto backend = scripted_backend({rule_default("x")});
    TokenMeter meter;
    ChatRequest empty;
    CHECK_THROWS_AS(complete(*backend, empty, meter, Phase::training), ConfigError);
    ChatRequest blank;
    blank.messages = {user_msg("")};
    CHECK_THROWS_AS(complete(*backend, blank, meter, Phase::training), ConfigError);
    CHECK(meter.call_count() == 0);
}

TEST_CASE("chat request defaults to temperature zero") {
    ChatRequest request;
    CHECK(request.temperature == 0.0);
}

TEST_CASE("http backend: retries transient failures, meters once") {
    std::atomic<int> hits{0};
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int n = ++hits;
        if (n < 3) {
            res.status = 503;
            res.set_content("overloaded", "text/plain");
            return;
        }
        nlohmann::json payload{
            {"choices", {{{"message", {{"role", "assistant"}, {"content", "No"}}}}}},
            {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 1}}}};
        res.set_content(payload.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.model = "test-model";
    config.api_key_env = "";
    config.max_attempts = 3;
    config.backoff_ms = 1;
    auto backend = http_backend(config);

    TokenMeter meter;
    ChatRequest request = make_request({user_msg("hello there")}, *backend);
    const CompletionResult result = complete(*backend, request, meter, Phase::utilization);
    CHECK(result.text == "No");
    CHECK(result.prompt_tokens == 11);
    CHECK(result.completion_tokens == 1);
    CHECK(hits.load() == 3);
    // two failed attempts returned no payload and must not be metered
    CHECK(meter.call_count() == 1);
    CHECK(meter.phase(Phase::utilization).prompt_tokens == 11);

    server.stop();
    server_thread.join();
}

TEST_CASE("http backend: persistent failure raises transport error") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.model = "test-model";
    config.api_key_env = "";
    config.max_attempts = 2;
    config.backoff_ms = 1;
    auto backend = http_backend(config);
    TokenMeter meter;
    ChatRequest request = make_request({user_msg("hi")}, *backend);
    CHECK_THROWS_AS(complete(*backend, request, meter, Phase::training), TransportError);
    CHECK(meter.call_count() == 0);

    server.stop();
    server_thread.join();
}

TEST_CASE("http backend: malformed payload raises protocol error") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.model = "test-model";
    config.api_key_env = "";
    auto backend = http_backend(config);
    TokenMeter meter;
    ChatRequest request = make_request({user_msg("hi")}, *backend);
    CHECK_THROWS_AS(complete(*backend, request, meter, Phase::training), ProtocolError);

    server.stop();
    server_thread.join();
}

TEST_CASE("meter absorb keeps call counts") {
    TokenMeter a;
    TokenMeter b;
    a.add(Phase::training, 5, 2);
    b.add(Phase::utilization, 3, 1);
    b.add(Phase::training, 1, 1);
    a.absorb(b);
    CHECK(a.call_count() == 3);
    CHECK(a.phase(Phase::training).prompt_tokens == 6);
    CHECK(a.phase(Phase::utilization).completion_tokens == 1);
}
