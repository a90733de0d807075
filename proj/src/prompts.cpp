#include "critmem/prompts.hpp"

#include <algorithm>
#include <unordered_map>

#include "critmem/errors.hpp"
#include "critmem/templates.hpp"

namespace critmem {

namespace {

void require(bool present, StrategyKind strategy, const char* what) {
    if (!present) {
        throw ConfigError("strategy " + to_string(strategy) + " requires " + what);
    }
}

std::vector<ScoredId> retrieve_ids(const TaskInstance& instance, const StrategyContext& context,
                                   StrategyKind strategy) {
    require(context.index != nullptr, strategy, "a vector index");
    require(context.embedder != nullptr, strategy, "an embedding provider");
    const EmbeddingVector query = embed_one(instance.question, *context.embedder);
    return top_k(query, *context.index, context.k);
}

} // namespace

AssembledPrompt assemble(StrategyKind strategy, const TaskInstance& instance,
                         const StrategyContext& context) {
    AssembledPrompt prompt;
    prompt.strategy = strategy;

    switch (strategy) {
    case StrategyKind::zero_shot: {
        prompt.messages.push_back(user_msg(instance.question));
        return prompt;
    }
    case StrategyKind::sem_crit: {
        require(context.semantic != nullptr && !context.semantic->advice.empty(), strategy,
                "a semantic memory");
        prompt.messages.push_back(user_msg(instance.question + "\n\n" +
                                           semantic_advice_tail(context.semantic->advice)));
        return prompt;
    }
    case StrategyKind::ep_label: {
        require(context.examples != nullptr, strategy, "the training example set");
        const auto hits = retrieve_ids(instance, context, strategy);
        std::unordered_map<std::string, const TaskInstance*> by_id;
        for (const auto& example : *context.examples) by_id[example.id] = &example;

        std::vector<const TaskInstance*> picked;
        for (const auto& hit : hits) {
            auto it = by_id.find(hit.instance_id);
            if (it == by_id.end()) {
                throw IntegrityError("ep_label: index id '" + hit.instance_id +
                                     "' has no training example");
            }
            prompt.retrieved_ids.push_back(hit.instance_id);
            picked.push_back(it->second);
        }
        if (!context.most_similar_first) std::reverse(picked.begin(), picked.end());
        for (const TaskInstance* example : picked) {
            prompt.messages.push_back(user_msg(example->question));
            prompt.messages.push_back(assistant_msg(example->gold));
        }
        prompt.messages.push_back(user_msg(final_question_line(instance.question)));
        return prompt;
    }
    case StrategyKind::ep_crit:
    case StrategyKind::ep_sem_crit: {
        require(context.store != nullptr, strategy, "an episodic store");
        const auto hits = retrieve_ids(instance, context, strategy);
        std::unordered_map<std::string, const EpisodicEntry*> by_id;
        for (const auto& entry : *context.store) by_id[entry.instance.id] = &entry;

        std::vector<const EpisodicEntry*> picked;
        for (const auto& hit : hits) {
            auto it = by_id.find(hit.instance_id);
            if (it == by_id.end()) {
                throw IntegrityError("ep_crit: index id '" + hit.instance_id +
                                     "' has no episodic entry");
            }
            prompt.retrieved_ids.push_back(hit.instance_id);
            picked.push_back(it->second);
        }
        if (!context.most_similar_first) std::reverse(picked.begin(), picked.end());
        for (const EpisodicEntry* entry : picked) {
            prompt.messages.push_back(user_msg(entry->instance.question));
            prompt.messages.push_back(assistant_msg(entry->pa_initial));
            prompt.messages.push_back(
                user_msg(critique_correction_prompt(entry->critique.assertion)));
            prompt.messages.push_back(assistant_msg(entry->critique.raw));
        }
        std::string final_line = final_question_line(instance.question);
        if (strategy == StrategyKind::ep_sem_crit) {
            require(context.semantic != nullptr && !context.semantic->advice.empty(), strategy,
                    "a semantic memory");
            final_line = compose_hybrid(final_line, *context.semantic);
        }
        prompt.messages.push_back(user_msg(std::move(final_line)));
        return prompt;
    }
    }
    throw ConfigError("assemble: unknown strategy");
}

std::string render_transcript(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const auto& message : messages) {
        out += "=== " + to_string(message.role) + " ===\n";
        out += message.content;
        out.push_back('\n');
    }
    return out;
}

} // namespace critmem
