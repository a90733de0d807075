#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace critmem {

using Json = nlohmann::json;

// Sentinel returned when no label can be extracted from a model answer.
// Always scored as incorrect.
inline constexpr const char* kUnparseableLabel = "<unparseable>";

bool is_unparseable(const std::string& label);

enum class LabelKind { binary, multiple_choice, pairwise };

std::string to_string(LabelKind kind);
LabelKind label_kind_from_string(const std::string& text);

// The answer vocabulary of one classification task. Labels keep their
// original spelling; matching is trim + case-fold.
class LabelSpace {
public:
    LabelSpace() = default;
    LabelSpace(std::vector<std::string> labels, LabelKind kind);

    const std::vector<std::string>& labels() const { return labels_; }
    LabelKind kind() const { return kind_; }
    std::size_t size() const { return labels_.size(); }

    // Canonical spelling for a label that matches after normalization,
    // or nullopt.
    std::optional<std::string> canonical(const std::string& text) const;
    bool contains(const std::string& text) const;

private:
    std::vector<std::string> labels_;
    LabelKind kind_ = LabelKind::binary;
};

struct TaskInstance {
    std::string id;
    std::string question;
    std::string gold;
    std::optional<std::string> user_id;
};

struct Dataset {
    std::string name;
    LabelSpace label_space;
    std::vector<TaskInstance> train;
    std::vector<TaskInstance> test;
    std::int64_t split_seed = 0;

    // Checks gold membership, id uniqueness and train/test disjointness.
    void validate() const;
};

struct Critique {
    std::string assertion;
    std::string rationale;
    std::string reflection;
    std::string raw;
    bool assertion_overridden = false;
    bool parse_fallback = false;
};

enum class StrategyKind { zero_shot, ep_label, ep_crit, sem_crit, ep_sem_crit };

inline constexpr StrategyKind kAllStrategies[] = {
    StrategyKind::zero_shot, StrategyKind::ep_label, StrategyKind::ep_crit,
    StrategyKind::sem_crit, StrategyKind::ep_sem_crit};

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& text);
bool strategy_uses_retrieval(StrategyKind kind);
bool strategy_uses_critiques(StrategyKind kind);
bool strategy_uses_semantic(StrategyKind kind);

struct PredictionRecord {
    std::string instance_id;
    StrategyKind strategy = StrategyKind::zero_shot;
    std::string predicted;
    std::string raw_output;
    bool correct = false;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

// Answer extraction, three tiers:
//   1. the whole trimmed reply equals a label (case-folded);
//   2. exactly one label occurs as a whole token;
//   3. several labels occur: the one whose last occurrence starts latest.
// Anything else is kUnparseableLabel.
std::string normalize_label(const std::string& text, const LabelSpace& space);

// A label different from gold. Binary spaces have a unique answer; larger
// spaces use a seeded uniform choice among the wrong labels.
std::string flip_label(const std::string& gold, const LabelSpace& space, std::uint64_t seed);

bool is_correct(const std::string& predicted, const std::string& gold, const LabelSpace& space);

void to_json(Json& j, const LabelSpace& space);
void from_json(const Json& j, LabelSpace& space);
void to_json(Json& j, const TaskInstance& instance);
void from_json(const Json& j, TaskInstance& instance);
void to_json(Json& j, const Critique& critique);
void from_json(const Json& j, Critique& critique);
void to_json(Json& j, const PredictionRecord& record);
void from_json(const Json& j, PredictionRecord& record);

} // namespace critmem
