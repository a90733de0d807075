#include "critmem/core.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <unordered_set>

#include "critmem/errors.hpp"
#include "critmem/util.hpp"

namespace critmem {

bool is_unparseable(const std::string& label) {
    return label == kUnparseableLabel;
}

std::string to_string(LabelKind kind) {
    switch (kind) {
    case LabelKind::binary: return "binary";
    case LabelKind::multiple_choice: return "multiple_choice";
    case LabelKind::pairwise: return "pairwise";
    }
    return "binary";
}

LabelKind label_kind_from_string(const std::string& text) {
    if (text == "binary") return LabelKind::binary;
    if (text == "multiple_choice") return LabelKind::multiple_choice;
    if (text == "pairwise") return LabelKind::pairwise;
    throw ConfigError("unknown label kind: " + text);
}

LabelSpace::LabelSpace(std::vector<std::string> labels, LabelKind kind)
    : labels_(std::move(labels)), kind_(kind) {
    if (labels_.size() < 2) {
        throw ConfigError("label space needs at least 2 labels, got " +
                          std::to_string(labels_.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& label : labels_) {
        const std::string normalized = casefold(trim(label));
        if (normalized.empty()) throw ConfigError("empty label in label space");
        if (!seen.insert(normalized).second) {
            throw ConfigError("duplicate label after normalization: " + label);
        }
    }
}

std::optional<std::string> LabelSpace::canonical(const std::string& text) const {
    const std::string normalized = casefold(trim(text));
    for (const auto& label : labels_) {
        if (casefold(trim(label)) == normalized) return label;
    }
    return std::nullopt;
}

bool LabelSpace::contains(const std::string& text) const {
    return canonical(text).has_value();
}

void Dataset::validate() const {
    if (label_space.size() < 2) throw ConfigError("dataset '" + name + "' has no label space");
    std::unordered_set<std::string> ids;
    auto check = [&](const std::vector<TaskInstance>& instances, const char* side) {
        for (const auto& instance : instances) {
            if (instance.id.empty()) {
                throw ConfigError("dataset '" + name + "': empty instance id in " + side);
            }
            if (!ids.insert(instance.id).second) {
                throw ConfigError("dataset '" + name + "': duplicate instance id " + instance.id);
            }
            if (!label_space.contains(instance.gold)) {
                throw ConfigError("dataset '" + name + "': gold label '" + instance.gold +
                                  "' of " + instance.id + " not in label space");
            }
        }
    };
    check(train, "train");
    check(test, "test");
}

std::string to_string(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::zero_shot: return "zero_shot";
    case StrategyKind::ep_label: return "ep_label";
    case StrategyKind::ep_crit: return "ep_crit";
    case StrategyKind::sem_crit: return "sem_crit";
    case StrategyKind::ep_sem_crit: return "ep_sem_crit";
    }
    return "zero_shot";
}

StrategyKind strategy_from_string(const std::string& text) {
    for (StrategyKind kind : kAllStrategies) {
        if (to_string(kind) == text) return kind;
    }
    throw ConfigError("unknown strategy: " + text);
}

bool strategy_uses_retrieval(StrategyKind kind) {
    return kind == StrategyKind::ep_label || kind == StrategyKind::ep_crit ||
           kind == StrategyKind::ep_sem_crit;
}

bool strategy_uses_critiques(StrategyKind kind) {
    return kind == StrategyKind::ep_crit || kind == StrategyKind::ep_sem_crit;
}

bool strategy_uses_semantic(StrategyKind kind) {
    return kind == StrategyKind::sem_crit || kind == StrategyKind::ep_sem_crit;
}

namespace {

// Whole-token occurrence: neighbours of the match are non-alphanumeric or
// string edges. Both sides already case-folded.
bool whole_token_at(const std::string& haystack, std::size_t pos, std::size_t len) {
    if (pos > 0 && std::isalnum(static_cast<unsigned char>(haystack[pos - 1]))) return false;
    const std::size_t end = pos + len;
    if (end < haystack.size() && std::isalnum(static_cast<unsigned char>(haystack[end]))) return false;
    return true;
}

std::optional<std::size_t> last_whole_token_occurrence(const std::string& haystack,
                                                       const std::string& needle) {
    if (needle.empty()) return std::nullopt;
    std::optional<std::size_t> found;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string::npos) {
        if (whole_token_at(haystack, pos, needle.size())) found = pos;
        pos = haystack.find(needle, pos + 1);
    }
    return found;
}

} // namespace

std::string normalize_label(const std::string& text, const LabelSpace& space) {
    const std::string folded_whole = casefold(trim(text));
    for (const auto& label : space.labels()) {
        if (casefold(trim(label)) == folded_whole) return label;
    }

    const std::string haystack = casefold(text);
    struct Hit {
        const std::string* label;
        std::size_t last_pos;
        std::size_t length;
    };
    std::vector<Hit> hits;
    for (const auto& label : space.labels()) {
        const std::string needle = casefold(trim(label));
        if (auto pos = last_whole_token_occurrence(haystack, needle)) {
            hits.push_back({&label, *pos, needle.size()});
        }
    }
    if (hits.empty()) return kUnparseableLabel;
    if (hits.size() == 1) return *hits.front().label;

    // Several labels present: latest last occurrence wins; ties (one label a
    // prefix of another at the same spot) go to the longer label.
    const Hit* best = &hits.front();
    for (const auto& hit : hits) {
        if (hit.last_pos > best->last_pos ||
            (hit.last_pos == best->last_pos && hit.length > best->length)) {
            best = &hit;
        }
    }
    return *best->label;
}

std::string flip_label(const std::string& gold, const LabelSpace& space, std::uint64_t seed) {
    if (space.size() < 2) throw ConfigError("flip_label needs at least 2 labels");
    const auto canonical_gold = space.canonical(gold);
    if (!canonical_gold) throw ConfigError("flip_label: gold '" + gold + "' not in label space");

    std::vector<const std::string*> wrong;
    for (const auto& label : space.labels()) {
        if (label != *canonical_gold) wrong.push_back(&label);
    }
    if (wrong.empty()) throw ConfigError("flip_label: no alternative label available");
    if (wrong.size() == 1) return *wrong.front();

    std::string joined;
    for (const auto& label : space.labels()) {
        joined += label;
        joined.push_back('\x1f');
    }
    std::mt19937_64 gen(mix_hash(seed, mix_hash(fnv1a64(casefold(*canonical_gold)), fnv1a64(joined))));
    return *wrong[draw_index(gen, wrong.size())];
}

bool is_correct(const std::string& predicted, const std::string& gold, const LabelSpace& space) {
    if (is_unparseable(predicted)) return false;
    const auto a = space.canonical(predicted);
    const auto b = space.canonical(gold);
    return a && b && *a == *b;
}

void to_json(Json& j, const LabelSpace& space) {
    j = Json{{"labels", space.labels()}, {"kind", to_string(space.kind())}};
}

void from_json(const Json& j, LabelSpace& space) {
    space = LabelSpace(j.at("labels").get<std::vector<std::string>>(),
                       label_kind_from_string(j.at("kind").get<std::string>()));
}

void to_json(Json& j, const TaskInstance& instance) {
    j = Json{{"id", instance.id}, {"question", instance.question}, {"gold", instance.gold}};
    if (instance.user_id) j["user_id"] = *instance.user_id;
}

void from_json(const Json& j, TaskInstance& instance) {
    instance.id = j.at("id").get<std::string>();
    instance.question = j.at("question").get<std::string>();
    instance.gold = j.at("gold").get<std::string>();
    if (j.contains("user_id") && !j.at("user_id").is_null()) {
        instance.user_id = j.at("user_id").get<std::string>();
    } else {
        instance.user_id.reset();
    }
}

void to_json(Json& j, const Critique& critique) {
    j = Json{{"assertion", critique.assertion},
             {"rationale", critique.rationale},
             {"reflection", critique.reflection},
             {"raw", critique.raw},
             {"assertion_overridden", critique.assertion_overridden},
             {"parse_fallback", critique.parse_fallback}};
}

void from_json(const Json& j, Critique& critique) {
    critique.assertion = j.at("assertion").get<std::string>();
    critique.rationale = j.at("rationale").get<std::string>();
    critique.reflection = j.at("reflection").get<std::string>();
    critique.raw = j.at("raw").get<std::string>();
    critique.assertion_overridden = j.at("assertion_overridden").get<bool>();
    critique.parse_fallback = j.at("parse_fallback").get<bool>();
}

void to_json(Json& j, const PredictionRecord& record) {
    j = Json{{"instance_id", record.instance_id},
             {"strategy", to_string(record.strategy)},
             {"predicted", record.predicted},
             {"raw_output", record.raw_output},
             {"correct", record.correct},
             {"prompt_tokens", record.prompt_tokens},
             {"completion_tokens", record.completion_tokens}};
}

void from_json(const Json& j, PredictionRecord& record) {
    record.instance_id = j.at("instance_id").get<std::string>();
    record.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    record.predicted = j.at("predicted").get<std::string>();
    record.raw_output = j.at("raw_output").get<std::string>();
    record.correct = j.at("correct").get<bool>();
    record.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
    record.completion_tokens = j.at("completion_tokens").get<std::size_t>();
}

} // namespace critmem
