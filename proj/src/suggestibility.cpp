#include "critmem/suggestibility.hpp"

#include "critmem/errors.hpp"
#include "critmem/templates.hpp"
#include "critmem/util.hpp"

namespace critmem {

std::string to_string(ProbeCondition condition) {
    switch (condition) {
    case ProbeCondition::XY: return "XY";
    case ProbeCondition::XY_Crit: return "XY_Crit";
    case ProbeCondition::X_Crit: return "X_Crit";
    }
    return "XY";
}

ProbeCondition probe_condition_from_string(const std::string& text) {
    for (ProbeCondition condition : kAllProbeConditions) {
        if (to_string(condition) == text) return condition;
    }
    throw ConfigError("unknown probe condition: " + text);
}

AssembledPrompt build_probe_prompt(ProbeCondition condition, const TaskInstance& instance,
                                   const std::string& asserted_label,
                                   const std::optional<Critique>& critique) {
    const bool wants_critique = condition != ProbeCondition::XY;
    if (wants_critique && !critique) {
        throw ConfigError("probe condition " + to_string(condition) + " needs a critique");
    }
    if (!wants_critique && critique) {
        throw ConfigError("probe condition XY takes no critique");
    }

    std::string content = instance.question;
    switch (condition) {
    case ProbeCondition::XY:
        content += "\n" + asserted_answer_sentence(asserted_label);
        break;
    case ProbeCondition::XY_Crit:
        content += "\n" + asserted_answer_sentence(asserted_label);
        content += "\n" + render_critique_body(*critique);
        break;
    case ProbeCondition::X_Crit:
        content += "\n" + render_critique_body(*critique);
        break;
    }

    AssembledPrompt prompt;
    prompt.strategy = StrategyKind::zero_shot; // single-turn, no retrieval
    prompt.messages.push_back(user_msg(std::move(content)));
    return prompt;
}

namespace {

struct ArmOutcome {
    std::string predicted;
    bool correct = false;
};

ArmOutcome run_arm(const TaskInstance& instance, ProbeCondition condition,
                   const std::string& asserted_label, const std::optional<std::string>& pa_initial,
                   Backend& pa_backend, Backend& critic_backend, const LabelSpace& space,
                   TokenMeter& meter) {
    std::optional<Critique> critique;
    if (condition != ProbeCondition::XY) {
        CritiqueRequest request{instance, pa_initial.value_or(""), asserted_label};
        critique = generate_critique(request, critic_backend, meter, space);
    }
    const AssembledPrompt prompt =
        build_probe_prompt(condition, instance, asserted_label, critique);
    ChatRequest chat = make_request(prompt.messages, pa_backend);
    CompletionResult result;
    try {
        result = complete(pa_backend, chat, meter, Phase::utilization);
    } catch (const Error& ex) {
        throw TransportError("probe arm (" + asserted_label + ") failed for instance " +
                             instance.id + ": " + ex.what());
    }
    ArmOutcome outcome;
    outcome.predicted = normalize_label(result.text, space);
    outcome.correct = is_correct(outcome.predicted, instance.gold, space);
    return outcome;
}

} // namespace

SuggestibilityReport run_probe_with_arms(const Dataset& dataset, ProbeCondition condition,
                                         Backend& pa_backend, Backend& critic_backend,
                                         const AssertedLabelFn& best_label,
                                         const AssertedLabelFn& adversarial_label,
                                         TokenMeter& meter) {
    if (dataset.test.empty()) throw ConfigError("run_probe: empty test set");

    SuggestibilityReport report;
    report.condition = condition;
    report.n = dataset.test.size();

    std::size_t best_hits = 0;
    std::size_t adversarial_hits = 0;
    for (const auto& instance : dataset.test) {
        // The initial prediction is arm-independent critic context, so one
        // zero-shot call covers both arms of a *_Crit probe.
        std::optional<std::string> pa_initial;
        if (condition != ProbeCondition::XY) {
            pa_initial =
                initial_predict(instance, pa_backend, meter, dataset.label_space).raw_output;
        }

        ProbeItemResult item;
        item.instance_id = instance.id;
        item.best_label = best_label(instance);
        item.adversarial_label = adversarial_label(instance);

        const ArmOutcome best = run_arm(instance, condition, item.best_label, pa_initial,
                                        pa_backend, critic_backend, dataset.label_space, meter);
        const ArmOutcome adversarial =
            run_arm(instance, condition, item.adversarial_label, pa_initial, pa_backend,
                    critic_backend, dataset.label_space, meter);

        item.best_predicted = best.predicted;
        item.adversarial_predicted = adversarial.predicted;
        item.best_correct = best.correct;
        item.adversarial_correct = adversarial.correct;
        best_hits += best.correct ? 1 : 0;
        adversarial_hits += adversarial.correct ? 1 : 0;
        report.items.push_back(std::move(item));
    }

    report.acc_best = static_cast<double>(best_hits) / static_cast<double>(report.n);
    report.acc_adversarial = static_cast<double>(adversarial_hits) / static_cast<double>(report.n);
    report.s = report.acc_best - report.acc_adversarial;
    return report;
}

SuggestibilityReport run_probe(const Dataset& dataset, ProbeCondition condition,
                               Backend& pa_backend, Backend& critic_backend,
                               std::uint64_t flip_seed, TokenMeter& meter) {
    const LabelSpace& space = dataset.label_space;
    SuggestibilityReport report = run_probe_with_arms(
        dataset, condition, pa_backend, critic_backend,
        [](const TaskInstance& instance) { return instance.gold; },
        [&](const TaskInstance& instance) {
            return flip_label(instance.gold, space, flip_seed ^ fnv1a64(instance.id));
        },
        meter);
    report.flip_seed = flip_seed;
    return report;
}

void to_json(Json& j, const SuggestibilityReport& report) {
    Json items = Json::array();
    for (const auto& item : report.items) {
        items.push_back({{"instance_id", item.instance_id},
                         {"best_label", item.best_label},
                         {"adversarial_label", item.adversarial_label},
                         {"best_predicted", item.best_predicted},
                         {"adversarial_predicted", item.adversarial_predicted},
                         {"best_correct", item.best_correct},
                         {"adversarial_correct", item.adversarial_correct}});
    }
    j = Json{{"condition", to_string(report.condition)},
             {"acc_best", report.acc_best},
             {"acc_adversarial", report.acc_adversarial},
             {"s", report.s},
             {"n", report.n},
             {"flip_seed", report.flip_seed},
             {"items", std::move(items)}};
}

void from_json(const Json& j, SuggestibilityReport& report) {
    report.condition = probe_condition_from_string(j.at("condition").get<std::string>());
    report.acc_best = j.at("acc_best").get<double>();
    report.acc_adversarial = j.at("acc_adversarial").get<double>();
    report.s = j.at("s").get<double>();
    report.n = j.at("n").get<std::size_t>();
    report.flip_seed = j.at("flip_seed").get<std::uint64_t>();
    report.items.clear();
    for (const auto& item_json : j.at("items")) {
        ProbeItemResult item;
        item.instance_id = item_json.at("instance_id").get<std::string>();
        item.best_label = item_json.at("best_label").get<std::string>();
        item.adversarial_label = item_json.at("adversarial_label").get<std::string>();
        item.best_predicted = item_json.at("best_predicted").get<std::string>();
        item.adversarial_predicted = item_json.at("adversarial_predicted").get<std::string>();
        item.best_correct = item_json.at("best_correct").get<bool>();
        item.adversarial_correct = item_json.at("adversarial_correct").get<bool>();
        report.items.push_back(std::move(item));
    }
}

} // namespace critmem
