#pragma once

#include <optional>
#include <string>
#include <vector>

#include "critmem/core.hpp"
#include "critmem/embed.hpp"
#include "critmem/gateway.hpp"
#include "critmem/memory.hpp"

namespace critmem {

struct AssembledPrompt {
    std::vector<ChatMessage> messages;
    StrategyKind strategy = StrategyKind::zero_shot;
    std::vector<std::string> retrieved_ids; // top_k order (most similar first)
};

// Everything a strategy may draw on. ep_label needs examples + index,
// ep_crit/ep_sem_crit need store + index, sem_* need semantic.
struct StrategyContext {
    const std::vector<TaskInstance>* examples = nullptr; // the training subset
    const std::vector<EpisodicEntry>* store = nullptr;
    const VectorIndex* index = nullptr;
    const SemanticMemory* semantic = nullptr;
    EmbedProvider* embedder = nullptr;
    std::size_t k = 5;
    bool most_similar_first = true; // presentation order of retrieved turns
};

// Pure assembly of the inference transcript for one strategy. Identical
// inputs give byte-identical messages.
AssembledPrompt assemble(StrategyKind strategy, const TaskInstance& instance,
                         const StrategyContext& context);

// "=== role ===\n<content>\n" blocks; the golden-file and audit rendering.
std::string render_transcript(const std::vector<ChatMessage>& messages);

} // namespace critmem
