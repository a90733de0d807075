#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "critmem/errors.hpp"
#include "critmem/store.hpp"

using namespace critmem;

namespace {

struct TempStore {
    std::filesystem::path root;
    ArtifactStore store;

    TempStore()
        : root(std::filesystem::temp_directory_path() /
               ("critmem-store-" + std::to_string(std::random_device{}()))),
          store(root) {}
    ~TempStore() { std::filesystem::remove_all(root); }
};

ArtifactKey key_of(ArtifactKind kind, const std::string& dataset, const std::string& hash) {
    ArtifactKey key;
    key.kind = kind;
    key.dataset = dataset;
    key.critic_model = "scripted";
    key.fraction = 0.25;
    key.template_version = "tv1";
    key.config_hash = hash;
    return key;
}

} // namespace

TEST_CASE("put then get returns identical bytes") {
    TempStore temp;
    const ArtifactKey key = key_of(ArtifactKind::critiques, "ds", "h1");
    temp.store.put(key, "payload bytes");
    const auto got = temp.store.get(key);
    REQUIRE(got.has_value());
    CHECK(*got == "payload bytes");
}

TEST_CASE("get of a missing key signals absence, not error") {
    TempStore temp;
    CHECK_FALSE(temp.store.get(key_of(ArtifactKind::index, "ds", "h2")).has_value());
}

TEST_CASE("re-putting identical bytes is a no-op") {
    TempStore temp;
    const ArtifactKey key = key_of(ArtifactKind::semantic, "ds", "h3");
    temp.store.put(key, "same");
    CHECK_NOTHROW(temp.store.put(key, "same"));
    CHECK(*temp.store.get(key) == "same");
}

TEST_CASE("putting different bytes under the same key is an integrity error") {
    TempStore temp;
    const ArtifactKey key = key_of(ArtifactKind::report, "ds", "h4");
    temp.store.put(key, "original");
    CHECK_THROWS_AS(temp.store.put(key, "tampered"), IntegrityError);
    CHECK(*temp.store.get(key) == "original"); // original bytes survive
}

TEST_CASE("distinct key fields map to distinct paths") {
    TempStore temp;
    ArtifactKey a = key_of(ArtifactKind::critiques, "ds", "h");
    ArtifactKey b = a;
    b.fraction = 0.5;
    ArtifactKey c = a;
    c.user_id = "user-9";
    ArtifactKey d = a;
    d.template_version = "tv2";
    ArtifactKey e = a;
    e.kind = ArtifactKind::probe;
    CHECK(temp.store.path_for(a) != temp.store.path_for(b));
    CHECK(temp.store.path_for(a) != temp.store.path_for(c));
    CHECK(temp.store.path_for(a) != temp.store.path_for(d));
    CHECK(temp.store.path_for(a) != temp.store.path_for(e));

    // different users never share artifacts
    temp.store.put(a, "anon");
    temp.store.put(c, "user-scoped");
    CHECK(*temp.store.get(a) == "anon");
    CHECK(*temp.store.get(c) == "user-scoped");
}

TEST_CASE("path components are sanitized") {
    TempStore temp;
    ArtifactKey key = key_of(ArtifactKind::index, "weird/name with spaces", "h");
    key.user_id = "u/..//x";
    CHECK_NOTHROW(temp.store.put(key, "bytes"));
    CHECK(*temp.store.get(key) == "bytes");
    const auto path = temp.store.path_for(key);
    CHECK(path.string().find(' ') == std::string::npos);
}

TEST_CASE("round trip fidelity over random byte strings") {
    TempStore temp;
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::string bytes;
        const std::size_t length = gen() % 2000;
        bytes.reserve(length);
        for (std::size_t i = 0; i < length; ++i) {
            bytes.push_back(static_cast<char>(gen() % 256));
        }
        const ArtifactKey key =
            key_of(ArtifactKind::report, "rt", "hash-" + std::to_string(trial));
        temp.store.put(key, bytes);
        const auto got = temp.store.get(key);
        REQUIRE(got.has_value());
        CHECK(*got == bytes);
    }
}
