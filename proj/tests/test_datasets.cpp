#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "critmem/datasets.hpp"
#include "critmem/errors.hpp"

using namespace critmem;

namespace {

std::vector<TaskInstance> numbered(std::size_t n) {
    std::vector<TaskInstance> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"i" + std::to_string(i), "q" + std::to_string(i),
                       i % 2 ? "Yes" : "No", {}});
    }
    return out;
}

PreferenceSpec pref_spec(std::size_t in_count, std::size_t out_count, std::size_t target) {
    PreferenceSpec spec;
    spec.user_id = "u1";
    for (std::size_t i = 0; i < in_count; ++i) spec.in_history.push_back({"in item " + std::to_string(i), {}});
    for (std::size_t i = 0; i < out_count; ++i) spec.out_of_history.push_back({"out item " + std::to_string(i), {}});
    spec.per_side_target = target;
    return spec;
}

} // namespace

TEST_CASE("split: even and odd counts") {
    auto [train500, test500] = split(numbered(500), 7);
    CHECK(train500.size() == 250);
    CHECK(test500.size() == 250);

    auto [train104, test104] = split(numbered(104), 7);
    CHECK(train104.size() == 52);
    CHECK(test104.size() == 52);

    auto [train101, test101] = split(numbered(101), 7);
    CHECK(train101.size() == 51); // odd count: train gets the extra
    CHECK(test101.size() == 50);
}

TEST_CASE("split: deterministic and disjoint") {
    auto [train_a, test_a] = split(numbered(100), 42);
    auto [train_b, test_b] = split(numbered(100), 42);
    REQUIRE(train_a.size() == train_b.size());
    for (std::size_t i = 0; i < train_a.size(); ++i) CHECK(train_a[i].id == train_b[i].id);

    std::map<std::string, int> seen;
    for (const auto& item : train_a) seen[item.id]++;
    for (const auto& item : test_a) seen[item.id]++;
    for (const auto& [id, count] : seen) {
        CAPTURE(id);
        CHECK(count == 1);
    }

    auto [train_c, _] = split(numbered(100), 43);
    bool different = false;
    for (std::size_t i = 0; i < train_a.size(); ++i) {
        different = different || train_a[i].id != train_c[i].id;
    }
    CHECK(different); // different seed, different shuffle
}

TEST_CASE("split: fewer than two instances is an error") {
    CHECK_THROWS_AS(split(numbered(1), 0), ConfigError);
    CHECK_THROWS_AS(split({}, 0), ConfigError);
}

TEST_CASE("preference dataset: paper-scale sampling") {
    const Dataset dataset = build_preference_dataset(pref_spec(300, 300, 250), 5);
    CHECK(dataset.train.size() + dataset.test.size() == 500);
    std::size_t in_count = 0;
    std::size_t out_count = 0;
    for (const auto* side : {&dataset.train, &dataset.test}) {
        for (const auto& item : *side) {
            (item.gold == "In" ? in_count : out_count) += 1;
            CHECK(item.user_id == "u1");
        }
    }
    CHECK(in_count == 250);
    CHECK(out_count == 250);
}

TEST_CASE("preference dataset: shortfall keeps both sides") {
    const Dataset dataset = build_preference_dataset(pref_spec(10, 10, 250), 5);
    CHECK(dataset.train.size() + dataset.test.size() == 20);
}

TEST_CASE("preference dataset: priorities sample favorites first") {
    PreferenceSpec spec = pref_spec(6, 6, 3);
    for (std::size_t i = 0; i < spec.in_history.size(); ++i) {
        spec.in_history[i].priority = static_cast<double>(i); // item 5 is the favorite
    }
    const Dataset dataset = build_preference_dataset(spec, 1);
    std::size_t favorites = 0;
    for (const auto* side : {&dataset.train, &dataset.test}) {
        for (const auto& item : *side) {
            if (item.gold != "In") continue;
            for (int wanted : {3, 4, 5}) {
                if (item.question.find("in item " + std::to_string(wanted) + "\"") !=
                    std::string::npos) {
                    ++favorites;
                }
            }
        }
    }
    CHECK(favorites == 3); // exactly the three highest-priority items
}

TEST_CASE("preference dataset: overlapping sides or empty side rejected") {
    PreferenceSpec overlap = pref_spec(3, 3, 10);
    overlap.out_of_history[0].title = overlap.in_history[0].title;
    CHECK_THROWS_AS(build_preference_dataset(overlap, 0), ConfigError);
    CHECK_THROWS_AS(build_preference_dataset(pref_spec(0, 3, 10), 0), ConfigError);
}

TEST_CASE("keyed_binary: deterministic, balanced, validated") {
    const Dataset a = generate_synthetic({SyntheticKind::keyed_binary, 100, 1, {}});
    const Dataset b = generate_synthetic({SyntheticKind::keyed_binary, 100, 1, {}});
    CHECK(Json(a.label_space) == Json(b.label_space));
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].id == b.train[i].id);
        CHECK(a.train[i].question == b.train[i].question);
    }
    std::size_t yes = 0;
    for (const auto* side : {&a.train, &a.test}) {
        for (const auto& item : *side) yes += item.gold == "Yes" ? 1 : 0;
    }
    CHECK(yes == 50); // exactly balanced overall

    // the key phrase determines gold
    for (const auto& item : a.test) {
        const std::string key = keyed_binary_key_for(a, item);
        CHECK(item.question.find(key) != std::string::npos);
    }
}

TEST_CASE("keyed_multichoice: exact uniform gold distribution at 400") {
    const Dataset dataset = generate_synthetic({SyntheticKind::keyed_multichoice, 400, 2, {}});
    std::map<std::string, std::size_t> counts;
    for (const auto* side : {&dataset.train, &dataset.test}) {
        for (const auto& item : *side) counts[item.gold] += 1;
    }
    REQUIRE(counts.size() == 4);
    for (const auto& [label, count] : counts) {
        CAPTURE(label);
        CHECK(count == 100); // i % 4 placement: exactly uniform, well within +-10%
    }
}

TEST_CASE("planted_preference: flipping the taste vector flips every gold label") {
    const std::uint64_t seed = 3;
    const auto taste = planted_taste(seed);
    std::vector<int> flipped(taste.size());
    for (std::size_t i = 0; i < taste.size(); ++i) flipped[i] = -taste[i];
    const Dataset normal = planted_preference_dataset(60, seed, taste);
    const Dataset inverted = planted_preference_dataset(60, seed, flipped);

    std::map<std::string, std::string> golds;
    for (const auto* side : {&normal.train, &normal.test}) {
        for (const auto& item : *side) golds[item.id] = item.gold;
    }
    for (const auto* side : {&inverted.train, &inverted.test}) {
        for (const auto& item : *side) {
            CHECK(golds.at(item.id) != item.gold);
        }
    }
}

TEST_CASE("planted_preference: carries a user id") {
    const Dataset dataset = generate_synthetic({SyntheticKind::planted_preference, 30, 4, {}});
    CHECK(user_groups(dataset).size() == 1);
    CHECK(dataset.train[0].user_id.has_value());
}

TEST_CASE("jsonl round trip preserves the dataset") {
    const Dataset dataset = generate_synthetic({SyntheticKind::keyed_binary, 50, 6, {}});
    const auto dir = std::filesystem::temp_directory_path() / "critmem-test-datasets";
    std::filesystem::create_directories(dir);
    const auto path = dir / "kb.jsonl";
    save_jsonl_dataset(dataset, path);
    const Dataset loaded = load_jsonl_dataset(path);
    CHECK(loaded.name == dataset.name);
    CHECK(loaded.split_seed == dataset.split_seed);
    REQUIRE(loaded.train.size() == dataset.train.size());
    REQUIRE(loaded.test.size() == dataset.test.size());
    // split is re-derived from the header seed over the same records
    for (std::size_t i = 0; i < dataset.train.size(); ++i) {
        CHECK(loaded.train[i].id == dataset.train[i].id);
        CHECK(loaded.train[i].question == dataset.train[i].question);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("jsonl loader rejects bad files") {
    const auto dir = std::filesystem::temp_directory_path() / "critmem-test-datasets-bad";
    std::filesystem::create_directories(dir);
    CHECK_THROWS_AS(load_jsonl_dataset(dir / "missing.jsonl"), ConfigError);

    // gold outside the label space
    {
        std::ofstream header(dir / "bad.header.json");
        header << R"({"name":"bad","labels":["Yes","No"],"kind":"binary","split_seed":1})";
    }
    {
        std::ofstream body(dir / "bad.jsonl");
        body << R"({"id":"a","question":"q","gold":"Maybe"})" << "\n";
        body << R"({"id":"b","question":"q2","gold":"Yes"})" << "\n";
    }
    CHECK_THROWS_AS(load_jsonl_dataset(dir / "bad.jsonl"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("user scoping partitions instances") {
    Dataset dataset;
    dataset.name = "multi";
    dataset.label_space = LabelSpace({"In", "Out"}, LabelKind::binary);
    dataset.train = {{"a", "q1", "In", std::string("u1")},
                     {"b", "q2", "Out", std::string("u2")},
                     {"c", "q3", "In", std::string("u1")}};
    dataset.test = {{"d", "q4", "Out", std::string("u2")}};
    const auto groups = user_groups(dataset);
    REQUIRE(groups.size() == 2);
    const Dataset u1 = dataset_for_user(dataset, "u1");
    CHECK(u1.train.size() == 2);
    CHECK(u1.test.empty());
    const Dataset u2 = dataset_for_user(dataset, "u2");
    CHECK(u2.train.size() == 1);
    CHECK(u2.test.size() == 1);
    CHECK_THROWS_AS(dataset_for_user(dataset, "nobody"), ConfigError);
}
