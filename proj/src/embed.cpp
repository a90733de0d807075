#include "critmem/embed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "critmem/errors.hpp"
#include "critmem/util.hpp"

namespace critmem {

double EmbeddingVector::norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw IndexError("cosine: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw EmbeddingError("cosine: zero-norm vector");
    return dot / (na * nb);
}

void VectorIndex::add(std::string instance_id, EmbeddingVector vector) {
    if (frozen_) throw IndexError("index is frozen, cannot add " + instance_id);
    if (vector.dim() == 0) throw EmbeddingError("index add: empty vector for " + instance_id);
    if (vector.norm() == 0.0) throw EmbeddingError("index add: zero vector for " + instance_id);
    if (entries_.empty()) {
        dim_ = vector.dim();
    } else if (vector.dim() != dim_) {
        throw IndexError("index add: dimension " + std::to_string(vector.dim()) +
                         " does not match index dimension " + std::to_string(dim_));
    }
    if (contains(instance_id)) throw IndexError("index add: duplicate id " + instance_id);
    entries_.emplace_back(std::move(instance_id), std::move(vector));
}

void VectorIndex::freeze() {
    frozen_ = true;
}

bool VectorIndex::contains(const std::string& instance_id) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& entry) { return entry.first == instance_id; });
}

std::string VectorIndex::save_text() const {
    nlohmann::json header{{"dim", dim_}, {"count", entries_.size()}};
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& [id, vector] : entries_) {
        nlohmann::json line{{"id", id}, {"values", vector.values}};
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

VectorIndex VectorIndex::load_text(const std::string& text) {
    VectorIndex index;
    std::size_t pos = 0;
    bool saw_header = false;
    std::size_t expected = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw IntegrityError(std::string("index file line is not JSON: ") + ex.what());
        }
        if (!saw_header) {
            expected = parsed.at("count").get<std::size_t>();
            saw_header = true;
            continue;
        }
        EmbeddingVector vector{parsed.at("values").get<std::vector<double>>()};
        index.add(parsed.at("id").get<std::string>(), std::move(vector));
    }
    if (!saw_header) throw IntegrityError("index file has no header line");
    if (index.size() != expected) {
        throw IntegrityError("index file count mismatch: header says " + std::to_string(expected) +
                             ", found " + std::to_string(index.size()));
    }
    index.freeze();
    return index;
}

std::vector<ScoredId> top_k(const EmbeddingVector& query, const VectorIndex& index, std::size_t k) {
    if (!index.frozen()) throw IndexError("top_k: index must be frozen before queries");
    if (k < 1) throw ConfigError("top_k: k must be >= 1");
    if (index.size() > 0 && query.dim() != index.dim()) {
        throw IndexError("top_k: query dimension " + std::to_string(query.dim()) +
                         " does not match index dimension " + std::to_string(index.dim()));
    }
    std::vector<ScoredId> scored;
    scored.reserve(index.size());
    for (const auto& [id, vector] : index.entries()) {
        scored.push_back({id, cosine_similarity(query, vector)});
    }
    // stable: equal similarities keep insertion order
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredId& a, const ScoredId& b) { return a.similarity > b.similarity; });
    if (scored.size() > k) {
        scored.resize(k);
    } else if (scored.size() < k) {
        std::cerr << "[critmem] top_k shortfall: asked for " << k << ", index holds "
                  << scored.size() << "\n";
    }
    return scored;
}

std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, EmbedProvider& provider) {
    if (texts.empty()) throw ConfigError("embed: empty text list");
    std::vector<EmbeddingVector> vectors = provider.embed(texts);
    if (vectors.size() != texts.size()) {
        throw EmbeddingError("embed: provider returned " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(texts.size()) + " texts");
    }
    const std::size_t dim = vectors.front().dim();
    for (const auto& vector : vectors) {
        if (vector.dim() != dim) throw EmbeddingError("embed: unstable dimension across batch");
        if (vector.norm() == 0.0) throw EmbeddingError("embed: provider returned a zero vector");
    }
    return vectors;
}

EmbeddingVector embed_one(const std::string& text, EmbedProvider& provider) {
    return embed({text}, provider).front();
}

namespace {

class HashEmbedProvider final : public EmbedProvider {
public:
    HashEmbedProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
        if (dim_ == 0) throw ConfigError("hash embedder: dim must be >= 1");
    }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& text : texts) out.push_back(embed_text(text));
        return out;
    }

    std::string provider_id() const override {
        return "hash-bow/d" + std::to_string(dim_) + "/s" + std::to_string(seed_);
    }

private:
    EmbeddingVector token_direction(const std::string& token) const {
        std::mt19937_64 gen(mix_hash(seed_, fnv1a64(token)));
        EmbeddingVector vector;
        vector.values.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) vector.values[i] = 2.0 * draw_unit(gen) - 1.0;
        return vector;
    }

    EmbeddingVector embed_text(const std::string& text) const {
        std::vector<std::string> tokens = word_tokens(text);
        if (tokens.empty()) tokens.push_back("__empty__" + std::to_string(fnv1a64(text) % 997));
        EmbeddingVector sum;
        sum.values.assign(dim_, 0.0);
        for (const auto& token : tokens) {
            const EmbeddingVector direction = token_direction(token);
            for (std::size_t i = 0; i < dim_; ++i) sum.values[i] += direction.values[i];
        }
        const double norm = sum.norm();
        if (norm == 0.0) {
            // cancellation is possible in principle; fall back to the first token alone
            sum = token_direction(tokens.front());
            for (double& v : sum.values) v /= sum.norm();
            return sum;
        }
        for (double& v : sum.values) v /= norm;
        return sum;
    }

    std::size_t dim_;
    std::uint64_t seed_;
};

class HttpEmbedProvider final : public EmbedProvider {
public:
    explicit HttpEmbedProvider(HttpEmbedConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) throw ConfigError("http embedder: base_url is required");
    }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        nlohmann::json body{{"model", config_.model}, {"input", texts}};
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
                throw ProtocolError("embeddings returned HTTP " + std::to_string(response->status) +
                                    ": " + response->body);
            }
            return parse_payload(response->body, texts.size());
        }
        throw TransportError("embeddings failed after " + std::to_string(config_.max_attempts) +
                             " attempts: " + last_error);
    }

    std::string provider_id() const override { return "http/" + config_.model; }

private:
    static std::vector<EmbeddingVector> parse_payload(const std::string& body, std::size_t n) {
        nlohmann::json payload;
        try {
            payload = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& ex) {
            throw ProtocolError(std::string("embeddings payload is not JSON: ") + ex.what());
        }
        if (!payload.contains("data") || !payload["data"].is_array() ||
            payload["data"].size() != n) {
            throw ProtocolError("embeddings payload data size mismatch");
        }
        std::vector<EmbeddingVector> vectors(n);
        for (const auto& item : payload["data"]) {
            const std::size_t index = item.at("index").get<std::size_t>();
            if (index >= n) throw ProtocolError("embeddings payload index out of range");
            vectors[index].values = item.at("embedding").get<std::vector<double>>();
        }
        return vectors;
    }

    HttpEmbedConfig config_;
};

} // namespace

EmbedProviderHandle hash_embed_provider(std::size_t dim, std::uint64_t seed) {
    return std::make_shared<HashEmbedProvider>(dim, seed);
}

EmbedProviderHandle http_embed_provider(HttpEmbedConfig config) {
    return std::make_shared<HttpEmbedProvider>(std::move(config));
}

} // namespace critmem
