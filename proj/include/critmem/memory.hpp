#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "critmem/core.hpp"
#include "critmem/embed.hpp"
#include "critmem/gateway.hpp"

namespace critmem {

// One training experience: the instance, what the agent first answered, the
// critique it received, and the question embedding it is retrieved by.
struct EpisodicEntry {
    TaskInstance instance;
    std::string pa_initial;
    Critique critique;
    EmbeddingVector embedding;
};

struct SemanticMemory {
    std::string advice;
    std::vector<std::string> source_entry_ids;
    double built_from_fraction = 1.0;
    std::size_t chunk_count = 1;
};

struct SummarizeOptions {
    // Whitespace-token threshold above which the rendered critique corpus is
    // split into fixed-size chunks and map-reduced.
    std::size_t token_budget = 3000;
    std::size_t chunk_size = 40; // entries per leaf chunk
    double built_from_fraction = 1.0;
};

// Entries for the top-k most similar ids, most similar first.
std::vector<EpisodicEntry> retrieve(const std::vector<EpisodicEntry>& store,
                                    const VectorIndex& index, const EmbeddingVector& query_embedding,
                                    std::size_t k = 5);

// Distills all critiques into one advice text. Single call when the rendered
// corpus fits the token budget, otherwise leaf summaries per chunk plus one
// reduce call; chunk_count records the leaf count.
SemanticMemory summarize(const std::vector<EpisodicEntry>& entries, Backend& critic_backend,
                         TokenMeter& meter, const SummarizeOptions& options = {});

// Episodic block, newline, then the advice tail.
std::string compose_hybrid(const std::string& episodic_block, const SemanticMemory& semantic);

void to_json(Json& j, const SemanticMemory& memory);
void from_json(const Json& j, SemanticMemory& memory);

} // namespace critmem
