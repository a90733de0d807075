#include "critmem/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "critmem/errors.hpp"
#include "critmem/util.hpp"

namespace critmem {

std::pair<std::vector<TaskInstance>, std::vector<TaskInstance>>
split(std::vector<TaskInstance> instances, std::uint64_t seed) {
    if (instances.size() < 2) {
        throw ConfigError("split needs at least 2 instances, got " +
                          std::to_string(instances.size()));
    }
    // canonical order first: the split is a function of the record set and
    // seed, not of file or generation order
    std::sort(instances.begin(), instances.end(),
              [](const TaskInstance& a, const TaskInstance& b) { return a.id < b.id; });
    std::mt19937_64 gen(seed);
    seeded_shuffle(instances, gen);
    const std::size_t train_size = (instances.size() + 1) / 2;
    std::vector<TaskInstance> train(instances.begin(),
                                    instances.begin() + static_cast<std::ptrdiff_t>(train_size));
    std::vector<TaskInstance> test(instances.begin() + static_cast<std::ptrdiff_t>(train_size),
                                   instances.end());
    return {std::move(train), std::move(test)};
}

namespace {

std::string zero_pad(std::size_t value, int width) {
    std::string digits = std::to_string(value);
    while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
    return digits;
}

std::vector<PrefItem> sample_side(std::vector<PrefItem> items, std::size_t target,
                                  std::mt19937_64& gen) {
    seeded_shuffle(items, gen);
    // favorites first when priorities exist; stable, so unprioritized items
    // keep their shuffled order
    std::stable_sort(items.begin(), items.end(), [](const PrefItem& a, const PrefItem& b) {
        return a.priority.value_or(0.0) > b.priority.value_or(0.0);
    });
    if (items.size() > target) items.resize(target);
    return items;
}

std::string preference_question(const std::string& title) {
    return "Item: \"" + title + "\". Is this item In or Out of the user's history?";
}

} // namespace

Dataset build_preference_dataset(const PreferenceSpec& spec, std::uint64_t seed) {
    if (spec.in_history.empty() || spec.out_of_history.empty()) {
        throw ConfigError("preference dataset for user '" + spec.user_id +
                          "' needs items on both sides");
    }
    std::unordered_set<std::string> in_titles;
    for (const auto& item : spec.in_history) in_titles.insert(item.title);
    for (const auto& item : spec.out_of_history) {
        if (in_titles.count(item.title) > 0) {
            throw ConfigError("preference item '" + item.title + "' appears on both sides");
        }
    }

    std::mt19937_64 gen(mix_hash(seed, fnv1a64(spec.user_id)));
    const std::vector<PrefItem> in_side = sample_side(spec.in_history, spec.per_side_target, gen);
    const std::vector<PrefItem> out_side =
        sample_side(spec.out_of_history, spec.per_side_target, gen);

    std::vector<TaskInstance> instances;
    instances.reserve(in_side.size() + out_side.size());
    for (std::size_t i = 0; i < in_side.size(); ++i) {
        instances.push_back({spec.user_id + ":in:" + zero_pad(i, 4),
                             preference_question(in_side[i].title), "In", spec.user_id});
    }
    for (std::size_t i = 0; i < out_side.size(); ++i) {
        instances.push_back({spec.user_id + ":out:" + zero_pad(i, 4),
                             preference_question(out_side[i].title), "Out", spec.user_id});
    }

    Dataset dataset;
    dataset.name = "pref-" + spec.user_id;
    dataset.label_space = LabelSpace({"In", "Out"}, LabelKind::binary);
    dataset.split_seed = static_cast<std::int64_t>(seed);
    auto [train, test] = split(std::move(instances), seed);
    dataset.train = std::move(train);
    dataset.test = std::move(test);
    dataset.validate();
    return dataset;
}

std::string to_string(SyntheticKind kind) {
    switch (kind) {
    case SyntheticKind::keyed_binary: return "keyed_binary";
    case SyntheticKind::keyed_multichoice: return "keyed_multichoice";
    case SyntheticKind::planted_preference: return "planted_preference";
    }
    return "keyed_binary";
}

SyntheticKind synthetic_kind_from_string(const std::string& text) {
    if (text == "keyed_binary") return SyntheticKind::keyed_binary;
    if (text == "keyed_multichoice") return SyntheticKind::keyed_multichoice;
    if (text == "planted_preference") return SyntheticKind::planted_preference;
    throw ConfigError("unknown synthetic task kind: " + text);
}

namespace {

constexpr const char* kBinaryKeyFirst = "zephyrite";
constexpr const char* kBinaryKeySecond = "obsidane";
constexpr const char* kMultiKey = "veridian";

const std::vector<std::string>& preference_tags() {
    static const std::vector<std::string> tags = {"amber", "brisk", "coral", "dusky", "ember"};
    return tags;
}

Dataset make_keyed_binary(const SyntheticTaskSpec& spec, const LabelSpace& space) {
    std::vector<TaskInstance> instances;
    instances.reserve(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) {
        const bool first = (i % 2 == 0);
        const std::string key = first ? kBinaryKeyFirst : kBinaryKeySecond;
        TaskInstance instance;
        instance.id = "kb-" + zero_pad(i, 4);
        instance.question = "Record " + zero_pad(i, 4) + ": the routing stamp reads '" + key +
                            "'. Should this request be approved? Answer " +
                            space.labels()[0] + " or " + space.labels()[1] + ".";
        instance.gold = first ? space.labels()[0] : space.labels()[1];
        instances.push_back(std::move(instance));
    }
    Dataset dataset;
    dataset.name = "keyed_binary-" + std::to_string(spec.size) + "-" + std::to_string(spec.seed);
    dataset.label_space = space;
    dataset.split_seed = static_cast<std::int64_t>(spec.seed);
    auto [train, test] = split(std::move(instances), spec.seed);
    dataset.train = std::move(train);
    dataset.test = std::move(test);
    return dataset;
}

Dataset make_keyed_multichoice(const SyntheticTaskSpec& spec, const LabelSpace& space) {
    if (space.size() != 4) throw ConfigError("keyed_multichoice needs exactly 4 labels");
    static const std::vector<std::string> fillers = {
        "a weathered ledger", "an unmarked crate", "a brass compass",  "a folded map",
        "a sealed envelope",  "a tin lantern",     "a chalk diagram",  "a rope coil",
        "a glass vial",       "a cracked slate",   "a copper bell",    "a woven basket"};
    std::mt19937_64 gen(mix_hash(spec.seed, fnv1a64("keyed_multichoice")));
    std::vector<TaskInstance> instances;
    instances.reserve(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) {
        const std::size_t key_position = i % 4; // exactly uniform gold distribution
        std::vector<std::string> options(4);
        for (std::size_t slot = 0; slot < 4; ++slot) {
            if (slot == key_position) {
                options[slot] = std::string("the ") + kMultiKey + " seal";
            } else {
                options[slot] = fillers[draw_index(gen, fillers.size())];
            }
        }
        TaskInstance instance;
        instance.id = "km-" + zero_pad(i, 4);
        std::ostringstream question;
        question << "Entry " << zero_pad(i, 4) << ": which option mentions " << kMultiKey << "? ";
        for (std::size_t slot = 0; slot < 4; ++slot) {
            question << space.labels()[slot] << ") " << options[slot] << " ";
        }
        question << "Answer with the letter only.";
        instance.question = question.str();
        instance.gold = space.labels()[key_position];
        instances.push_back(std::move(instance));
    }
    Dataset dataset;
    dataset.name =
        "keyed_multichoice-" + std::to_string(spec.size) + "-" + std::to_string(spec.seed);
    dataset.label_space = space;
    dataset.split_seed = static_cast<std::int64_t>(spec.seed);
    auto [train, test] = split(std::move(instances), spec.seed);
    dataset.train = std::move(train);
    dataset.test = std::move(test);
    return dataset;
}

} // namespace

std::vector<int> planted_taste(std::uint64_t seed) {
    std::mt19937_64 gen(mix_hash(seed, fnv1a64("taste")));
    std::vector<int> taste(preference_tags().size());
    for (int& value : taste) value = (gen() & 1) ? 1 : -1;
    return taste;
}

Dataset planted_preference_dataset(std::size_t size, std::uint64_t seed,
                                   const std::vector<int>& taste) {
    const auto& tags = preference_tags();
    if (taste.size() != tags.size()) {
        throw ConfigError("planted_preference: taste vector must have " +
                          std::to_string(tags.size()) + " entries");
    }
    std::mt19937_64 gen(mix_hash(seed, fnv1a64("items")));
    const std::string user = "synth-user-" + std::to_string(seed);
    std::vector<TaskInstance> instances;
    instances.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        std::vector<int> features(tags.size());
        int dot = 0;
        std::string shown;
        for (std::size_t d = 0; d < tags.size(); ++d) {
            features[d] = (gen() & 1) ? 1 : -1;
            dot += features[d] * taste[d];
            if (features[d] > 0) {
                if (!shown.empty()) shown += ", ";
                shown += tags[d];
            }
        }
        if (shown.empty()) shown = "none";
        TaskInstance instance;
        instance.id = "pp-" + zero_pad(i, 4);
        instance.question = "Item pp-" + zero_pad(i, 4) + " has tags: " + shown +
                            ". Is this item In or Out of the user's history?";
        instance.gold = dot > 0 ? "In" : "Out"; // odd tag count, dot is never 0
        instance.user_id = user;
        instances.push_back(std::move(instance));
    }
    Dataset dataset;
    dataset.name =
        "planted_preference-" + std::to_string(size) + "-" + std::to_string(seed);
    dataset.label_space = LabelSpace({"In", "Out"}, LabelKind::binary);
    dataset.split_seed = static_cast<std::int64_t>(seed);
    auto [train, test] = split(std::move(instances), seed);
    dataset.train = std::move(train);
    dataset.test = std::move(test);
    return dataset;
}

Dataset generate_synthetic(const SyntheticTaskSpec& spec) {
    if (spec.size < 2) throw ConfigError("synthetic dataset needs size >= 2");
    Dataset dataset;
    switch (spec.kind) {
    case SyntheticKind::keyed_binary: {
        const LabelSpace space =
            spec.label_space.value_or(LabelSpace({"Yes", "No"}, LabelKind::binary));
        if (space.size() != 2) throw ConfigError("keyed_binary needs exactly 2 labels");
        dataset = make_keyed_binary(spec, space);
        break;
    }
    case SyntheticKind::keyed_multichoice: {
        const LabelSpace space = spec.label_space.value_or(
            LabelSpace({"A", "B", "C", "D"}, LabelKind::multiple_choice));
        dataset = make_keyed_multichoice(spec, space);
        break;
    }
    case SyntheticKind::planted_preference: {
        dataset = planted_preference_dataset(spec.size, spec.seed, planted_taste(spec.seed));
        break;
    }
    }
    dataset.validate();
    return dataset;
}

std::string keyed_binary_key(const std::string&, bool first) {
    return first ? kBinaryKeyFirst : kBinaryKeySecond;
}

std::string keyed_binary_key_for(const Dataset& dataset, const TaskInstance& instance) {
    const bool first = instance.gold == dataset.label_space.labels()[0];
    return first ? kBinaryKeyFirst : kBinaryKeySecond;
}

Dataset load_jsonl_dataset(const std::filesystem::path& jsonl_path) {
    std::filesystem::path header_path = jsonl_path;
    header_path.replace_extension(".header.json");
    std::ifstream header_file(header_path);
    if (!header_file) {
        throw ConfigError("cannot open dataset header " + header_path.string());
    }
    Json header;
    try {
        header_file >> header;
    } catch (const Json::exception& ex) {
        throw ConfigError("dataset header " + header_path.string() + " is not JSON: " + ex.what());
    }

    Dataset dataset;
    dataset.name = header.at("name").get<std::string>();
    dataset.label_space = LabelSpace(header.at("labels").get<std::vector<std::string>>(),
                                     label_kind_from_string(header.at("kind").get<std::string>()));
    dataset.split_seed = header.at("split_seed").get<std::int64_t>();

    std::ifstream jsonl_file(jsonl_path);
    if (!jsonl_file) throw ConfigError("cannot open dataset file " + jsonl_path.string());
    std::vector<TaskInstance> instances;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(jsonl_file, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        Json record;
        try {
            record = Json::parse(line);
        } catch (const Json::exception& ex) {
            throw ConfigError(jsonl_path.string() + ":" + std::to_string(line_number) +
                              " is not JSON: " + ex.what());
        }
        instances.push_back(record.get<TaskInstance>());
    }

    auto [train, test] = split(std::move(instances),
                               static_cast<std::uint64_t>(dataset.split_seed));
    dataset.train = std::move(train);
    dataset.test = std::move(test);
    dataset.validate();
    return dataset;
}

void save_jsonl_dataset(const Dataset& dataset, const std::filesystem::path& jsonl_path) {
    std::filesystem::path header_path = jsonl_path;
    header_path.replace_extension(".header.json");
    {
        Json header{{"name", dataset.name},
                    {"labels", dataset.label_space.labels()},
                    {"kind", to_string(dataset.label_space.kind())},
                    {"split_seed", dataset.split_seed}};
        std::ofstream out(header_path);
        if (!out) throw ConfigError("cannot write dataset header " + header_path.string());
        out << header.dump(2) << "\n";
    }
    std::ofstream out(jsonl_path);
    if (!out) throw ConfigError("cannot write dataset file " + jsonl_path.string());
    for (const auto* side : {&dataset.train, &dataset.test}) {
        for (const auto& instance : *side) {
            out << Json(instance).dump() << "\n";
        }
    }
}

std::vector<std::string> user_groups(const Dataset& dataset) {
    std::vector<std::string> groups;
    auto note = [&](const std::vector<TaskInstance>& instances) {
        for (const auto& instance : instances) {
            const std::string user = instance.user_id.value_or("");
            if (std::find(groups.begin(), groups.end(), user) == groups.end()) {
                groups.push_back(user);
            }
        }
    };
    note(dataset.train);
    note(dataset.test);
    return groups;
}

Dataset dataset_for_user(const Dataset& dataset, const std::string& user_id) {
    Dataset scoped;
    scoped.name = dataset.name;
    scoped.label_space = dataset.label_space;
    scoped.split_seed = dataset.split_seed;
    auto keep = [&](const std::vector<TaskInstance>& from, std::vector<TaskInstance>& to) {
        for (const auto& instance : from) {
            if (instance.user_id.value_or("") == user_id) to.push_back(instance);
        }
    };
    keep(dataset.train, scoped.train);
    keep(dataset.test, scoped.test);
    if (scoped.train.empty() && scoped.test.empty()) {
        throw ConfigError("dataset '" + dataset.name + "' has no instances for user '" + user_id +
                          "'");
    }
    return scoped;
}

} // namespace critmem
