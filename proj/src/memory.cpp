#include "critmem/memory.hpp"

#include <unordered_map>

#include "critmem/errors.hpp"
#include "critmem/templates.hpp"
#include "critmem/util.hpp"

namespace critmem {

std::vector<EpisodicEntry> retrieve(const std::vector<EpisodicEntry>& store,
                                    const VectorIndex& index, const EmbeddingVector& query_embedding,
                                    std::size_t k) {
    std::unordered_map<std::string, const EpisodicEntry*> by_id;
    by_id.reserve(store.size());
    for (const auto& entry : store) by_id[entry.instance.id] = &entry;

    std::vector<EpisodicEntry> out;
    for (const auto& hit : top_k(query_embedding, index, k)) {
        auto it = by_id.find(hit.instance_id);
        if (it == by_id.end()) {
            throw IntegrityError("retrieve: index id '" + hit.instance_id +
                                 "' has no episodic entry");
        }
        out.push_back(*it->second);
    }
    return out;
}

namespace {

std::string summarize_call(Backend& critic, TokenMeter& meter, const std::string& prompt) {
    ChatRequest request = make_request({user_msg(prompt)}, critic);
    return complete(critic, request, meter, Phase::training).text;
}

} // namespace

SemanticMemory summarize(const std::vector<EpisodicEntry>& entries, Backend& critic_backend,
                         TokenMeter& meter, const SummarizeOptions& options) {
    if (entries.empty()) throw ConfigError("summarize: no entries");
    if (options.chunk_size == 0) throw ConfigError("summarize: chunk_size must be >= 1");

    std::vector<std::string> blocks;
    blocks.reserve(entries.size());
    std::size_t corpus_tokens = 0;
    for (const auto& entry : entries) {
        blocks.push_back(
            render_training_example(entry.instance.question, entry.pa_initial, entry.critique));
        corpus_tokens += whitespace_token_count(blocks.back());
    }

    SemanticMemory memory;
    memory.built_from_fraction = options.built_from_fraction;
    for (const auto& entry : entries) memory.source_entry_ids.push_back(entry.instance.id);

    if (corpus_tokens <= options.token_budget) {
        memory.chunk_count = 1;
        memory.advice = summarize_call(critic_backend, meter, semantic_summary_prompt(blocks));
    } else {
        std::vector<std::string> leaf_summaries;
        for (std::size_t start = 0; start < blocks.size(); start += options.chunk_size) {
            const std::size_t end = std::min(start + options.chunk_size, blocks.size());
            std::vector<std::string> chunk(blocks.begin() + static_cast<std::ptrdiff_t>(start),
                                           blocks.begin() + static_cast<std::ptrdiff_t>(end));
            leaf_summaries.push_back(
                summarize_call(critic_backend, meter, semantic_summary_prompt(chunk)));
        }
        memory.chunk_count = leaf_summaries.size();
        memory.advice =
            summarize_call(critic_backend, meter, semantic_reduce_prompt(leaf_summaries));
    }
    if (memory.advice.empty()) throw ProtocolError("summarize: critic returned empty advice");
    return memory;
}

std::string compose_hybrid(const std::string& episodic_block, const SemanticMemory& semantic) {
    if (semantic.advice.empty()) throw ConfigError("compose_hybrid: semantic advice is empty");
    return episodic_block + "\n" + hybrid_advice_tail(semantic.advice);
}

void to_json(Json& j, const SemanticMemory& memory) {
    j = Json{{"advice", memory.advice},
             {"source_entry_ids", memory.source_entry_ids},
             {"built_from_fraction", memory.built_from_fraction},
             {"chunk_count", memory.chunk_count}};
}

void from_json(const Json& j, SemanticMemory& memory) {
    memory.advice = j.at("advice").get<std::string>();
    memory.source_entry_ids = j.at("source_entry_ids").get<std::vector<std::string>>();
    memory.built_from_fraction = j.at("built_from_fraction").get<double>();
    memory.chunk_count = j.at("chunk_count").get<std::size_t>();
}

} // namespace critmem
