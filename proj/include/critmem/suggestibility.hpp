#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "critmem/core.hpp"
#include "critmem/critique.hpp"
#include "critmem/gateway.hpp"
#include "critmem/prompts.hpp"

namespace critmem {

// Which signal accompanies the question: bare asserted label, label plus
// critique, or critique only.
enum class ProbeCondition { XY, XY_Crit, X_Crit };

inline constexpr ProbeCondition kAllProbeConditions[] = {ProbeCondition::XY,
                                                         ProbeCondition::XY_Crit,
                                                         ProbeCondition::X_Crit};

std::string to_string(ProbeCondition condition);
ProbeCondition probe_condition_from_string(const std::string& text);

struct ProbeItemResult {
    std::string instance_id;
    std::string best_label;
    std::string adversarial_label;
    std::string best_predicted;
    std::string adversarial_predicted;
    bool best_correct = false;
    bool adversarial_correct = false;
};

struct SuggestibilityReport {
    ProbeCondition condition = ProbeCondition::XY;
    double acc_best = 0.0;
    double acc_adversarial = 0.0;
    double s = 0.0; // acc_best - acc_adversarial
    std::size_t n = 0;
    std::uint64_t flip_seed = 0;
    std::vector<ProbeItemResult> items;
};

// Single user message carrying the question plus the condition's insight.
AssembledPrompt build_probe_prompt(ProbeCondition condition, const TaskInstance& instance,
                                   const std::string& asserted_label,
                                   const std::optional<Critique>& critique);

// Paired probe over the test set: one arm asserts gold, the other a label
// flipped with flip_seed mixed with the instance id hash.
SuggestibilityReport run_probe(const Dataset& dataset, ProbeCondition condition,
                               Backend& pa_backend, Backend& critic_backend,
                               std::uint64_t flip_seed, TokenMeter& meter);

// Arm assertions as functions of the instance; run_probe is the
// (gold, flipped) instantiation. Swapping the two functions negates S.
using AssertedLabelFn = std::function<std::string(const TaskInstance&)>;
SuggestibilityReport run_probe_with_arms(const Dataset& dataset, ProbeCondition condition,
                                         Backend& pa_backend, Backend& critic_backend,
                                         const AssertedLabelFn& best_label,
                                         const AssertedLabelFn& adversarial_label,
                                         TokenMeter& meter);

void to_json(Json& j, const SuggestibilityReport& report);
void from_json(const Json& j, SuggestibilityReport& report);

} // namespace critmem
