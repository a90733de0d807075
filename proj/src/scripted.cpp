#include "critmem/scripted.hpp"

#include <random>
#include <unordered_map>
#include <vector>

#include "critmem/critique.hpp"
#include "critmem/errors.hpp"
#include "critmem/util.hpp"

namespace critmem {

namespace {

std::string last_user_content(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::user) return it->content;
    }
    return messages.empty() ? std::string() : messages.back().content;
}

std::string critique_json(const std::string& assertion, const std::string& local,
                          const std::string& global) {
    Json object{{"correct_answer", assertion}, {"local_reason", local}, {"global_reason", global}};
    return object.dump();
}

} // namespace

std::string first_line(const std::string& text) {
    const std::size_t end = text.find('\n');
    return end == std::string::npos ? text : text.substr(0, end);
}

std::string extract_asserted_label(const std::string& text, const std::string& fallback) {
    static const std::string assertion_marker = "Assertion: ";
    const std::size_t assertion_pos = text.rfind(assertion_marker);
    if (assertion_pos != std::string::npos) {
        const std::size_t start = assertion_pos + assertion_marker.size();
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        return trim(text.substr(start, end - start));
    }
    static const std::string answer_marker = "The correct answer is ";
    const std::size_t answer_pos = text.rfind(answer_marker);
    if (answer_pos != std::string::npos) {
        const std::size_t start = answer_pos + answer_marker.size();
        std::size_t end = text.find('.', start);
        if (end == std::string::npos) end = text.size();
        return trim(text.substr(start, end - start));
    }
    return fallback;
}

BackendHandle fixed_backend(std::string reply, std::string model_id) {
    return scripted_backend({rule_default(std::move(reply))}, std::move(model_id));
}

BackendHandle gold_oracle_backend(const Dataset& dataset, std::string model_id) {
    auto table = std::make_shared<std::unordered_map<std::string, std::string>>();
    for (const auto* side : {&dataset.train, &dataset.test}) {
        for (const auto& instance : *side) (*table)[instance.question] = instance.gold;
    }
    return scripted_backend(
        {rule_default_fn([table](const std::vector<ChatMessage>& messages) {
            const std::string content = last_user_content(messages);
            auto exact = table->find(content);
            if (exact != table->end()) return exact->second;
            for (const auto& [question, gold] : *table) {
                if (content.find(question) != std::string::npos) return gold;
            }
            throw ScriptError("gold oracle: no known question in prompt: " + first_line(content));
        })},
        std::move(model_id));
}

BackendHandle follow_assertion_backend(std::string fallback, std::string model_id) {
    return scripted_backend(
        {rule_default_fn([fallback = std::move(fallback)](const std::vector<ChatMessage>& messages) {
            return extract_asserted_label(last_user_content(messages), fallback);
        })},
        std::move(model_id));
}

BackendHandle probabilistic_follower_backend(double p, std::uint64_t seed, std::string fallback,
                                             std::string model_id) {
    if (p < 0.0 || p > 1.0) throw ConfigError("probabilistic follower: p must be in [0, 1]");
    return scripted_backend(
        {rule_default_fn([p, seed, fallback = std::move(fallback)](
                             const std::vector<ChatMessage>& messages) {
            const std::string content = last_user_content(messages);
            std::mt19937_64 gen(mix_hash(seed, fnv1a64(first_line(content))));
            if (draw_unit(gen) < p) return extract_asserted_label(content, fallback);
            return fallback;
        })},
        std::move(model_id));
}

BackendHandle critique_following_backend(std::string fallback, std::string model_id) {
    return scripted_backend(
        {rule_default_fn([fallback = std::move(fallback)](const std::vector<ChatMessage>& messages) {
            for (const auto& message : messages) {
                if (message.role != Role::assistant) continue;
                if (message.content.find("correct_answer") == std::string::npos) continue;
                if (auto object_text = extract_json_object(message.content)) {
                    try {
                        Json object = Json::parse(*object_text);
                        if (object.contains("correct_answer") &&
                            object["correct_answer"].is_string()) {
                            return object["correct_answer"].get<std::string>();
                        }
                    } catch (const Json::exception&) {
                        // not valid JSON after all; keep scanning
                    }
                }
            }
            return fallback;
        })},
        std::move(model_id));
}

BackendHandle compliant_critic_backend(std::string model_id) {
    return scripted_backend(
        {rule_default_fn([](const std::vector<ChatMessage>& messages) {
            const std::string asserted =
                extract_asserted_label(last_user_content(messages), "unknown");
            return critique_json(
                asserted, "The stated answer " + asserted + " matches the evidence in this case.",
                "Prefer the answer supported by the provided ground truth.");
        })},
        std::move(model_id));
}

BackendHandle adversarial_critic_backend(LabelSpace space, std::string model_id) {
    return scripted_backend(
        {rule_default_fn([space = std::move(space)](const std::vector<ChatMessage>& messages) {
            const std::string asserted =
                extract_asserted_label(last_user_content(messages), space.labels().front());
            std::string wrong = space.labels().front();
            for (const auto& label : space.labels()) {
                if (space.canonical(label) != space.canonical(asserted)) {
                    wrong = label;
                    break;
                }
            }
            return critique_json(wrong, "The answer is clearly " + wrong + ".",
                                 "Always answer " + wrong + " for questions like this.");
        })},
        std::move(model_id));
}

BackendHandle prose_critic_backend(std::string model_id) {
    return scripted_backend(
        {rule_default("I would rather discuss this in free-form prose than produce structured "
                      "output.")},
        std::move(model_id));
}

namespace {

class CountingBackend final : public Backend {
public:
    CountingBackend(BackendHandle inner, std::shared_ptr<std::atomic<std::size_t>> calls)
        : inner_(std::move(inner)), calls_(std::move(calls)) {}

    CompletionResult complete(const ChatRequest& request) override {
        CompletionResult result = inner_->complete(request);
        calls_->fetch_add(1);
        return result;
    }

    std::string model_id() const override { return inner_->model_id(); }

private:
    BackendHandle inner_;
    std::shared_ptr<std::atomic<std::size_t>> calls_;
};

} // namespace

BackendHandle counting_backend(BackendHandle inner,
                               std::shared_ptr<std::atomic<std::size_t>> calls) {
    return std::make_shared<CountingBackend>(std::move(inner), std::move(calls));
}

} // namespace critmem
