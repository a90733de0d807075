#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace critmem {

struct EmbeddingVector {
    std::vector<double> values;
    std::size_t dim() const { return values.size(); }
    double norm() const;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct ScoredId {
    std::string instance_id;
    double similarity = 0.0;
};

// Exact cosine index, build-then-freeze. Small enough stores (a few hundred
// entries) that an exhaustive scan is the right tool.
class VectorIndex {
public:
    VectorIndex() = default;

    void add(std::string instance_id, EmbeddingVector vector);
    void freeze();
    bool frozen() const { return frozen_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<std::pair<std::string, EmbeddingVector>>& entries() const { return entries_; }
    bool contains(const std::string& instance_id) const;

    std::string save_text() const;
    static VectorIndex load_text(const std::string& text); // returns a frozen index

private:
    std::vector<std::pair<std::string, EmbeddingVector>> entries_;
    std::size_t dim_ = 0;
    bool frozen_ = false;
};

// Highest-similarity entries, descending; ties keep insertion order. Fewer
// than k entries returns them all (shortfall is logged, not an error).
std::vector<ScoredId> top_k(const EmbeddingVector& query, const VectorIndex& index, std::size_t k);

class EmbedProvider {
public:
    virtual ~EmbedProvider() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string provider_id() const = 0;
};

using EmbedProviderHandle = std::shared_ptr<EmbedProvider>;

// Validates inputs and outputs (non-empty batch, stable dimension, norm > 0).
std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, EmbedProvider& provider);
EmbeddingVector embed_one(const std::string& text, EmbedProvider& provider);

// Deterministic offline embedder: a hashed bag-of-words. Each word token maps
// to a fixed pseudo-random direction; the text embeds as the normalized sum,
// so texts sharing vocabulary land near each other.
EmbedProviderHandle hash_embed_provider(std::size_t dim = 64, std::uint64_t seed = 0);

struct HttpEmbedConfig {
    std::string base_url;
    std::string path = "/v1/embeddings";
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_seconds = 60.0;
    std::size_t max_attempts = 3;
    std::size_t backoff_ms = 500;
};

// OpenAI-compatible embeddings endpoint.
EmbedProviderHandle http_embed_provider(HttpEmbedConfig config);

} // namespace critmem
