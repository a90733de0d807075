#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "critmem/embed.hpp"
#include "critmem/errors.hpp"

using namespace critmem;

namespace {

// Exhaustive reference scan, independent of the index implementation.
std::vector<ScoredId> brute_force_top_k(
    const EmbeddingVector& query,
    const std::vector<std::pair<std::string, EmbeddingVector>>& entries, std::size_t k) {
    std::vector<std::pair<std::size_t, double>> scored;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const EmbeddingVector& v = entries[i].second;
        double dot = 0.0;
        double qq = 0.0;
        double vv = 0.0;
        for (std::size_t d = 0; d < v.values.size(); ++d) {
            dot += query.values[d] * v.values[d];
            qq += query.values[d] * query.values[d];
            vv += v.values[d] * v.values[d];
        }
        scored.emplace_back(i, dot / (std::sqrt(qq) * std::sqrt(vv)));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (scored.size() > k) scored.resize(k);
    std::vector<ScoredId> out;
    for (const auto& [i, sim] : scored) out.push_back({entries[i].first, sim});
    return out;
}

EmbeddingVector random_vector(std::mt19937_64& gen, std::size_t dim) {
    EmbeddingVector v;
    v.values.resize(dim);
    bool nonzero = false;
    for (auto& x : v.values) {
        x = static_cast<double>(gen() % 2001) / 1000.0 - 1.0;
        nonzero = nonzero || x != 0.0;
    }
    if (!nonzero) v.values[0] = 1.0;
    return v;
}

} // namespace

TEST_CASE("cosine: self similarity, symmetry, range") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dim = 2 + gen() % 16;
        const EmbeddingVector a = random_vector(gen, dim);
        const EmbeddingVector b = random_vector(gen, dim);
        CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(cosine_similarity(a, b) == doctest::Approx(cosine_similarity(b, a)));
        const double sim = cosine_similarity(a, b);
        CHECK(sim <= 1.0 + 1e-9);
        CHECK(sim >= -1.0 - 1e-9);
    }
}

TEST_CASE("top_k: hand-checkable geometry") {
    VectorIndex index;
    index.add("e1", {{1.0, 0.0}});
    index.add("e2", {{0.0, 1.0}});
    index.add("e3", {{0.7071, 0.7071}});
    index.freeze();
    const auto hits = top_k({{1.0, 0.0}}, index, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].instance_id == "e1");
    CHECK(hits[0].similarity == doctest::Approx(1.0));
    CHECK(hits[1].instance_id == "e3");
    CHECK(hits[1].similarity == doctest::Approx(0.7071).epsilon(1e-3));
}

TEST_CASE("top_k: shortfall returns everything") {
    VectorIndex index;
    index.add("a", {{1.0, 0.0}});
    index.add("b", {{0.0, 1.0}});
    index.add("c", {{1.0, 1.0}});
    index.freeze();
    CHECK(top_k({{1.0, 0.0}}, index, 10).size() == 3);
}

TEST_CASE("top_k: matches exhaustive scan on random indexes") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t size = 1 + gen() % 500;
        const std::size_t dim = 4 + gen() % 61;
        VectorIndex index;
        std::vector<std::pair<std::string, EmbeddingVector>> entries;
        for (std::size_t i = 0; i < size; ++i) {
            auto v = random_vector(gen, dim);
            entries.emplace_back("id" + std::to_string(i), v);
            index.add("id" + std::to_string(i), v);
        }
        index.freeze();
        const EmbeddingVector query = random_vector(gen, dim);
        const auto got = top_k(query, index, 5);
        const auto expected = brute_force_top_k(query, entries, 5);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].instance_id == expected[i].instance_id);
            CHECK(got[i].similarity == doctest::Approx(expected[i].similarity));
        }
    }
}

TEST_CASE("top_k: ties keep insertion order") {
    VectorIndex index;
    index.add("first", {{2.0, 0.0}});
    index.add("second", {{1.0, 0.0}}); // same direction, same cosine
    index.add("third", {{0.0, 1.0}});
    index.freeze();
    const auto hits = top_k({{1.0, 0.0}}, index, 2);
    CHECK(hits[0].instance_id == "first");
    CHECK(hits[1].instance_id == "second");
}

TEST_CASE("index guards: freeze, duplicates, dimensions") {
    VectorIndex index;
    index.add("a", {{1.0, 0.0}});
    CHECK_THROWS_AS(top_k({{1.0, 0.0}}, index, 1), IndexError);     // not frozen yet
    CHECK_THROWS_AS(index.add("a", {{0.0, 1.0}}), IndexError);      // duplicate id
    CHECK_THROWS_AS(index.add("b", {{1.0, 0.0, 0.0}}), IndexError); // dim mismatch
    CHECK_THROWS_AS(index.add("z", {{0.0, 0.0}}), EmbeddingError);  // zero vector
    index.freeze();
    CHECK_THROWS_AS(index.add("c", {{1.0, 1.0}}), IndexError);       // frozen
    CHECK_THROWS_AS(top_k({{1.0, 0.0, 0.0}}, index, 1), IndexError); // query dim
    CHECK_THROWS_AS(top_k({{1.0, 0.0}}, index, 0), ConfigError);
}

TEST_CASE("index round-trips through the portable text format") {
    std::mt19937_64 gen(23);
    VectorIndex index;
    for (int i = 0; i < 20; ++i) {
        index.add("item-" + std::to_string(i), random_vector(gen, 8));
    }
    index.freeze();
    const std::string text = index.save_text();
    const VectorIndex loaded = VectorIndex::load_text(text);
    CHECK(loaded.frozen());
    REQUIRE(loaded.size() == index.size());
    CHECK(loaded.save_text() == text);
    for (std::size_t i = 0; i < index.size(); ++i) {
        CHECK(loaded.entries()[i].first == index.entries()[i].first);
        CHECK(loaded.entries()[i].second.values == index.entries()[i].second.values);
    }
}

TEST_CASE("hash embedder: deterministic, distinct texts disagree") {
    auto provider = hash_embed_provider(32, 0);
    const auto a = embed({"What color is the sky?"}, *provider);
    const auto b = embed({"What color is the sky?"}, *provider);
    CHECK(a[0].values == b[0].values);

    const auto c = embed({"Completely different words entirely"}, *provider);
    CHECK(cosine_similarity(a[0], c[0]) < 1.0 - 1e-6);
}

TEST_CASE("hash embedder: shared vocabulary pulls texts together") {
    auto provider = hash_embed_provider(64, 0);
    const auto vectors = embed({"Record 0001: the routing stamp reads 'zephyrite'.",
                                "Record 0002: the routing stamp reads 'zephyrite'.",
                                "Record 0003: the routing stamp reads 'obsidane'."},
                               *provider);
    const double same_key = cosine_similarity(vectors[0], vectors[1]);
    const double different_key = cosine_similarity(vectors[0], vectors[2]);
    CHECK(same_key > different_key);
}

TEST_CASE("embed: empty batch is a precondition error") {
    auto provider = hash_embed_provider(16, 0);
    CHECK_THROWS_AS(embed({}, *provider), ConfigError);
}
