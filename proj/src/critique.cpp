#include "critmem/critique.hpp"

#include <random>

#include "critmem/errors.hpp"
#include "critmem/templates.hpp"
#include "critmem/util.hpp"

namespace critmem {

PredictionRecord initial_predict(const TaskInstance& instance, Backend& pa_backend,
                                 TokenMeter& meter, const LabelSpace& space) {
    ChatRequest request = make_request({user_msg(instance.question)}, pa_backend);
    CompletionResult result;
    try {
        result = complete(pa_backend, request, meter, Phase::training);
    } catch (const Error& ex) {
        throw TransportError("initial_predict failed for instance " + instance.id + ": " +
                             ex.what());
    }
    PredictionRecord record;
    record.instance_id = instance.id;
    record.strategy = StrategyKind::zero_shot;
    record.raw_output = result.text;
    record.predicted = normalize_label(result.text, space);
    record.correct = is_correct(record.predicted, instance.gold, space);
    record.prompt_tokens = result.prompt_tokens;
    record.completion_tokens = result.completion_tokens;
    return record;
}

std::optional<std::string> extract_json_object(const std::string& text) {
    const std::size_t start = text.find('{');
    if (start == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

namespace {

struct ParsedCritique {
    std::string correct_answer;
    std::string local_reason;
    std::string global_reason;
};

std::optional<std::string> json_field_as_text(const Json& object, const char* key) {
    if (!object.contains(key)) return std::nullopt;
    const Json& value = object.at(key);
    if (value.is_string()) return value.get<std::string>();
    if (value.is_null()) return std::nullopt;
    return value.dump();
}

std::optional<ParsedCritique> parse_critique_reply(const std::string& reply) {
    const auto object_text = extract_json_object(reply);
    if (!object_text) return std::nullopt;
    Json object;
    try {
        object = Json::parse(*object_text);
    } catch (const Json::exception&) {
        return std::nullopt;
    }
    if (!object.is_object()) return std::nullopt;
    const auto answer = json_field_as_text(object, "correct_answer");
    if (!answer) return std::nullopt;
    ParsedCritique parsed;
    parsed.correct_answer = *answer;
    parsed.local_reason = json_field_as_text(object, "local_reason").value_or("");
    parsed.global_reason = json_field_as_text(object, "global_reason").value_or("");
    return parsed;
}

} // namespace

Critique generate_critique(const CritiqueRequest& request, Backend& critic_backend,
                           TokenMeter& meter, const LabelSpace& space) {
    const auto asserted = space.canonical(request.asserted_label);
    if (!asserted) {
        throw ConfigError("generate_critique: asserted label '" + request.asserted_label +
                          "' not in label space");
    }

    std::vector<ChatMessage> transcript{user_msg(request.instance.question),
                                        assistant_msg(request.pa_initial),
                                        user_msg(critique_correction_prompt(*asserted))};

    std::string reply;
    std::optional<ParsedCritique> parsed;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
        if (attempt == 1) {
            transcript.push_back(assistant_msg(reply));
            transcript.push_back(user_msg(critique_repair_prompt()));
        }
        ChatRequest chat = make_request(transcript, critic_backend);
        try {
            reply = complete(critic_backend, chat, meter, Phase::training).text;
        } catch (const Error& ex) {
            throw TransportError("generate_critique failed for instance " + request.instance.id +
                                 ": " + ex.what());
        }
        parsed = parse_critique_reply(reply);
    }

    Critique critique;
    critique.raw = reply;
    if (!parsed) {
        critique.assertion = *asserted;
        critique.rationale = reply;
        critique.reflection = "";
        critique.parse_fallback = true;
        return critique;
    }

    critique.rationale = parsed->local_reason;
    critique.reflection = parsed->global_reason;
    const std::string claimed = normalize_label(parsed->correct_answer, space);
    if (claimed == *asserted) {
        critique.assertion = *asserted;
    } else {
        critique.assertion = *asserted;
        critique.assertion_overridden = true;
    }
    return critique;
}

std::vector<TaskInstance> select_training_subset(const std::vector<TaskInstance>& train,
                                                 double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0) {
        throw ConfigError("training fraction must be in (0, 1], got " + std::to_string(fraction));
    }
    const std::size_t target = round_half_up(fraction * static_cast<double>(train.size()));
    if (target == 0) {
        throw ConfigError("training fraction " + std::to_string(fraction) +
                          " selects no instances from a train set of " +
                          std::to_string(train.size()));
    }
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 gen(seed);
    seeded_shuffle(order, gen);
    order.resize(std::min(target, order.size()));
    std::sort(order.begin(), order.end());
    std::vector<TaskInstance> subset;
    subset.reserve(order.size());
    for (std::size_t i : order) subset.push_back(train[i]);
    return subset;
}

std::vector<EpisodicEntry> build_training_memory(const Dataset& dataset, Backend& pa_backend,
                                                 Backend& critic_backend,
                                                 EmbedProvider& embed_provider, double fraction,
                                                 std::uint64_t seed, TokenMeter& meter) {
    const std::vector<TaskInstance> subset =
        select_training_subset(dataset.train, fraction, seed);

    std::vector<std::string> questions;
    questions.reserve(subset.size());
    for (const auto& instance : subset) questions.push_back(instance.question);
    const std::vector<EmbeddingVector> embeddings = embed(questions, embed_provider);

    std::vector<EpisodicEntry> entries;
    entries.reserve(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const TaskInstance& instance = subset[i];
        PredictionRecord initial =
            initial_predict(instance, pa_backend, meter, dataset.label_space);
        CritiqueRequest request{instance, initial.raw_output, instance.gold};
        Critique critique = generate_critique(request, critic_backend, meter, dataset.label_space);
        entries.push_back({instance, initial.raw_output, std::move(critique), embeddings[i]});
    }
    return entries;
}

} // namespace critmem
