#include "critmem/harness.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "critmem/critique.hpp"
#include "critmem/errors.hpp"
#include "critmem/scripted.hpp"
#include "critmem/templates.hpp"
#include "critmem/util.hpp"

namespace critmem {

namespace {

std::string hash_json(const Json& j) {
    return to_hex(fnv1a64(j.dump()));
}

} // namespace

RunConfig RunConfig::from_json(const Json& j) {
    RunConfig config;
    config.dataset_specs = j.at("datasets").get<std::vector<Json>>();
    config.pa_backend = j.at("pa_backend");
    config.critic_backend = j.value("critic_backend", config.pa_backend);
    if (j.contains("embed")) config.embed_spec = j.at("embed");
    if (j.contains("strategies")) {
        for (const auto& name : j.at("strategies")) {
            config.strategies.push_back(strategy_from_string(name.get<std::string>()));
        }
    }
    if (j.contains("fractions")) config.fractions = j.at("fractions").get<std::vector<double>>();
    config.k = j.value("k", std::size_t{5});
    if (j.contains("seeds")) {
        const Json& seeds = j.at("seeds");
        config.split_seed = seeds.value("split", config.split_seed);
        config.subset_seed = seeds.value("subset", config.subset_seed);
        config.flip_seed = seeds.value("flip", config.flip_seed);
    }
    if (j.contains("probe_conditions")) {
        for (const auto& name : j.at("probe_conditions")) {
            config.probe_conditions.push_back(
                probe_condition_from_string(name.get<std::string>()));
        }
    }
    if (j.contains("semantic")) {
        const Json& semantic = j.at("semantic");
        config.semantic_token_budget = semantic.value("token_budget", config.semantic_token_budget);
        config.semantic_chunk_size = semantic.value("chunk_size", config.semantic_chunk_size);
    }
    config.most_similar_first = j.value("most_similar_first", true);
    if (j.contains("output_dir")) {
        config.output_dir = j.at("output_dir").get<std::string>();
    }
    config.validate();
    return config;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& ex) {
        throw ConfigError("config file " + path.string() + " is not JSON: " + ex.what());
    }
    return from_json(j);
}

Json RunConfig::to_json() const {
    Json strategies = Json::array();
    for (StrategyKind strategy : this->strategies) strategies.push_back(to_string(strategy));
    Json conditions = Json::array();
    for (ProbeCondition condition : probe_conditions) conditions.push_back(to_string(condition));
    return Json{{"datasets", dataset_specs},
                {"pa_backend", pa_backend},
                {"critic_backend", critic_backend},
                {"embed", embed_spec},
                {"strategies", strategies},
                {"fractions", fractions},
                {"k", k},
                {"seeds",
                 {{"split", split_seed}, {"subset", subset_seed}, {"flip", flip_seed}}},
                {"probe_conditions", conditions},
                {"semantic",
                 {{"token_budget", semantic_token_budget}, {"chunk_size", semantic_chunk_size}}},
                {"most_similar_first", most_similar_first},
                {"output_dir", output_dir.string()}};
}

std::string RunConfig::config_hash() const {
    Json j = to_json();
    j.erase("output_dir");
    return hash_json(j);
}

void RunConfig::validate() const {
    if (dataset_specs.empty()) throw ConfigError("config: no datasets");
    if (strategies.empty() && probe_conditions.empty()) {
        throw ConfigError("config: no strategies and no probe conditions");
    }
    if (k < 1) throw ConfigError("config: k must be >= 1");
    if (fractions.empty()) throw ConfigError("config: no fractions");
    for (double fraction : fractions) {
        if (fraction <= 0.0 || fraction > 1.0) {
            throw ConfigError("config: fraction " + std::to_string(fraction) + " outside (0, 1]");
        }
    }
}

BackendHandle make_backend(const Json& spec, const Dataset& dataset) {
    if (spec.contains("kind") && spec.at("kind") == "http") {
        HttpBackendConfig config;
        config.base_url = spec.at("base_url").get<std::string>();
        config.model = spec.at("model").get<std::string>();
        config.path = spec.value("path", config.path);
        config.api_key_env = spec.value("api_key_env", config.api_key_env);
        config.timeout_seconds = spec.value("timeout_seconds", config.timeout_seconds);
        config.max_attempts = spec.value("max_attempts", config.max_attempts);
        config.backoff_ms = spec.value("backoff_ms", config.backoff_ms);
        if (spec.contains("max_output_tokens")) {
            config.max_output_tokens = spec.at("max_output_tokens").get<std::size_t>();
        }
        return http_backend(std::move(config));
    }
    const std::string script = spec.value("script", "");
    if (script == "fixed") return fixed_backend(spec.at("reply").get<std::string>());
    if (script == "gold-oracle") return gold_oracle_backend(dataset);
    if (script == "follow-assertion") {
        return follow_assertion_backend(spec.value("fallback", "Yes"));
    }
    if (script == "probabilistic-follower") {
        return probabilistic_follower_backend(spec.at("p").get<double>(),
                                              spec.value("seed", std::uint64_t{0}),
                                              spec.at("fallback").get<std::string>());
    }
    if (script == "critique-following") {
        return critique_following_backend(spec.at("fallback").get<std::string>());
    }
    if (script == "compliant-critic") return compliant_critic_backend();
    if (script == "adversarial-critic") return adversarial_critic_backend(dataset.label_space);
    if (script == "prose-critic") return prose_critic_backend();
    throw ConfigError("backend spec not understood: " + spec.dump());
}

EmbedProviderHandle make_embed_provider(const Json& spec) {
    const std::string kind = spec.value("kind", "hash");
    if (kind == "hash") {
        return hash_embed_provider(spec.value("dim", std::size_t{64}),
                                   spec.value("seed", std::uint64_t{0}));
    }
    if (kind == "http") {
        HttpEmbedConfig config;
        config.base_url = spec.at("base_url").get<std::string>();
        config.model = spec.at("model").get<std::string>();
        config.path = spec.value("path", config.path);
        config.api_key_env = spec.value("api_key_env", config.api_key_env);
        config.timeout_seconds = spec.value("timeout_seconds", config.timeout_seconds);
        config.max_attempts = spec.value("max_attempts", config.max_attempts);
        return http_embed_provider(std::move(config));
    }
    throw ConfigError("embed spec not understood: " + spec.dump());
}

Dataset materialize_dataset(const Json& spec, std::uint64_t default_split_seed) {
    const std::string kind = spec.value("kind", "jsonl");
    if (kind == "jsonl") {
        return load_jsonl_dataset(spec.at("path").get<std::string>());
    }
    if (kind == "synthetic") {
        SyntheticTaskSpec task;
        task.kind = synthetic_kind_from_string(spec.at("task").get<std::string>());
        task.size = spec.at("size").get<std::size_t>();
        task.seed = spec.value("seed", default_split_seed);
        if (spec.contains("labels")) {
            task.label_space =
                LabelSpace(spec.at("labels").get<std::vector<std::string>>(),
                           label_kind_from_string(spec.value("label_kind", "binary")));
        }
        return generate_synthetic(task);
    }
    throw ConfigError("dataset spec not understood: " + spec.dump());
}

void to_json(Json& j, const EvalCell& cell) {
    j = Json{{"dataset", cell.dataset},
             {"user", cell.user},
             {"strategy", to_string(cell.strategy)},
             {"fraction", cell.fraction},
             {"n", cell.n},
             {"n_correct", cell.n_correct},
             {"accuracy", cell.accuracy},
             {"prompt_tokens", cell.prompt_tokens},
             {"completion_tokens", cell.completion_tokens},
             {"predictions", cell.predictions}};
}

void from_json(const Json& j, EvalCell& cell) {
    cell.dataset = j.at("dataset").get<std::string>();
    cell.user = j.at("user").get<std::string>();
    cell.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    cell.fraction = j.at("fraction").get<double>();
    cell.n = j.at("n").get<std::size_t>();
    cell.n_correct = j.at("n_correct").get<std::size_t>();
    cell.accuracy = j.at("accuracy").get<double>();
    cell.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
    cell.completion_tokens = j.at("completion_tokens").get<std::size_t>();
    cell.predictions = j.at("predictions").get<std::vector<PredictionRecord>>();
}

Harness::Harness(RunConfig config)
    : config_(std::move(config)), store_(config_.output_dir / "artifacts") {
    config_.validate();
    embedder_ = make_embed_provider(config_.embed_spec);
    for (const auto& spec : config_.dataset_specs) {
        Dataset dataset = materialize_dataset(spec, config_.split_seed);
        for (const auto& existing : datasets_) {
            if (existing.name == dataset.name) {
                throw ConfigError("duplicate dataset name: " + dataset.name);
            }
        }
        datasets_.push_back(std::move(dataset));
    }
}

std::string Harness::dataset_fingerprint(const Dataset& scoped) const {
    std::string blob = scoped.name + "\x1f" + to_string(scoped.label_space.kind()) + "\x1f" +
                       std::to_string(scoped.split_seed);
    for (const auto& label : scoped.label_space.labels()) blob += "\x1f" + label;
    for (const auto* side : {&scoped.train, &scoped.test}) {
        for (const auto& instance : *side) {
            blob += "\x1f" + instance.id + "\x1e" + instance.gold + "\x1e" + instance.question;
        }
    }
    return to_hex(fnv1a64(blob));
}

ArtifactKey Harness::base_key(ArtifactKind kind, const Dataset& scoped, const std::string& user,
                              double fraction, const std::string& model,
                              const Json& inputs) const {
    ArtifactKey key;
    key.kind = kind;
    key.dataset = scoped.name;
    key.user_id = user.empty() ? std::optional<std::string>{} : user;
    key.critic_model = model;
    key.fraction = fraction;
    key.template_version = kTemplateVersion;
    key.config_hash = hash_json(inputs);
    return key;
}

ArtifactKey Harness::index_key(const Dataset& scoped, const std::string& user,
                               double fraction) const {
    const Json inputs{{"fingerprint", dataset_fingerprint(scoped)},
                      {"fraction", fraction},
                      {"subset_seed", config_.subset_seed},
                      {"embed", config_.embed_spec}};
    return base_key(ArtifactKind::index, scoped, user, fraction, embedder_->provider_id(), inputs);
}

ArtifactKey Harness::critiques_key(const Dataset& scoped, const std::string& user, double fraction,
                                   const std::string& critic_model) const {
    const Json inputs{{"fingerprint", dataset_fingerprint(scoped)},
                      {"fraction", fraction},
                      {"subset_seed", config_.subset_seed},
                      {"pa", config_.pa_backend},
                      {"critic", config_.critic_backend}};
    return base_key(ArtifactKind::critiques, scoped, user, fraction, critic_model, inputs);
}

ArtifactKey Harness::semantic_key(const Dataset& scoped, const std::string& user, double fraction,
                                  const std::string& critic_model) const {
    const Json inputs{{"fingerprint", dataset_fingerprint(scoped)},
                      {"fraction", fraction},
                      {"subset_seed", config_.subset_seed},
                      {"pa", config_.pa_backend},
                      {"critic", config_.critic_backend},
                      {"token_budget", config_.semantic_token_budget},
                      {"chunk_size", config_.semantic_chunk_size}};
    return base_key(ArtifactKind::semantic, scoped, user, fraction, critic_model, inputs);
}

ArtifactKey Harness::eval_cell_key(const Dataset& scoped, const std::string& user,
                                   StrategyKind strategy, double effective,
                                   const std::string& critic_model) const {
    const Json inputs{{"fingerprint", dataset_fingerprint(scoped)},
                      {"strategy", to_string(strategy)},
                      {"fraction", effective},
                      {"subset_seed", config_.subset_seed},
                      {"pa", config_.pa_backend},
                      {"critic", config_.critic_backend},
                      {"embed", config_.embed_spec},
                      {"k", config_.k},
                      {"most_similar_first", config_.most_similar_first},
                      {"token_budget", config_.semantic_token_budget},
                      {"chunk_size", config_.semantic_chunk_size}};
    ArtifactKey key =
        base_key(ArtifactKind::report, scoped, user, effective, critic_model, inputs);
    key.config_hash = to_string(strategy) + "-" + key.config_hash;
    return key;
}

ArtifactKey Harness::probe_key(const Dataset& scoped, const std::string& user,
                               ProbeCondition condition, const std::string& critic_model) const {
    const Json inputs{{"fingerprint", dataset_fingerprint(scoped)},
                      {"condition", to_string(condition)},
                      {"flip_seed", config_.flip_seed},
                      {"pa", config_.pa_backend},
                      {"critic", config_.critic_backend}};
    ArtifactKey key = base_key(ArtifactKind::probe, scoped, user, 1.0, critic_model, inputs);
    key.config_hash = to_string(condition) + "-" + key.config_hash;
    return key;
}

VectorIndex Harness::ensure_index(const Dataset& scoped, const std::string& user, double fraction,
                                  const std::vector<TaskInstance>& subset) {
    const ArtifactKey key = index_key(scoped, user, fraction);
    if (auto bytes = store_.get(key)) {
        return VectorIndex::load_text(*bytes);
    }
    std::vector<std::string> questions;
    questions.reserve(subset.size());
    for (const auto& instance : subset) questions.push_back(instance.question);
    const std::vector<EmbeddingVector> vectors = embed(questions, *embedder_);
    VectorIndex index;
    for (std::size_t i = 0; i < subset.size(); ++i) index.add(subset[i].id, vectors[i]);
    index.freeze();
    store_.put(key, index.save_text());
    return index;
}

Json Harness::ensure_critiques(const Dataset& scoped, const std::string& user, double fraction,
                               const std::vector<TaskInstance>& subset) {
    BackendHandle critic = make_backend(config_.critic_backend, scoped);
    const ArtifactKey key = critiques_key(scoped, user, fraction, critic->model_id());
    if (auto bytes = store_.get(key)) {
        return Json::parse(*bytes);
    }
    BackendHandle pa = make_backend(config_.pa_backend, scoped);
    TokenMeter local;
    Json records = Json::array();
    for (const auto& instance : subset) {
        PredictionRecord initial = initial_predict(instance, *pa, local, scoped.label_space);
        CritiqueRequest request{instance, initial.raw_output, instance.gold};
        Critique critique = generate_critique(request, *critic, local, scoped.label_space);
        records.push_back(Json{{"instance_id", instance.id},
                               {"pa_initial", initial.raw_output},
                               {"asserted_label", instance.gold},
                               {"critique", critique}});
    }
    const PhaseTokens training = local.phase(Phase::training);
    Json artifact{{"dataset", scoped.name},
                  {"user", user},
                  {"fraction", fraction},
                  {"pa_model", pa->model_id()},
                  {"critic_model", critic->model_id()},
                  {"training_prompt_tokens", training.prompt_tokens},
                  {"training_completion_tokens", training.completion_tokens},
                  {"records", std::move(records)}};
    meter_.absorb(local);
    store_.put(key, artifact.dump(2));
    return artifact;
}

SemanticMemory Harness::ensure_semantic(const Dataset& scoped, const std::string& user,
                                        double fraction,
                                        const std::vector<EpisodicEntry>& entries) {
    BackendHandle critic = make_backend(config_.critic_backend, scoped);
    const ArtifactKey key = semantic_key(scoped, user, fraction, critic->model_id());
    if (auto bytes = store_.get(key)) {
        return Json::parse(*bytes).at("semantic").get<SemanticMemory>();
    }
    TokenMeter local;
    SummarizeOptions options;
    options.token_budget = config_.semantic_token_budget;
    options.chunk_size = config_.semantic_chunk_size;
    options.built_from_fraction = fraction;
    SemanticMemory semantic = summarize(entries, *critic, local, options);
    const PhaseTokens training = local.phase(Phase::training);
    Json artifact{{"dataset", scoped.name},
                  {"user", user},
                  {"fraction", fraction},
                  {"critic_model", critic->model_id()},
                  {"training_prompt_tokens", training.prompt_tokens},
                  {"training_completion_tokens", training.completion_tokens},
                  {"semantic", semantic}};
    meter_.absorb(local);
    store_.put(key, artifact.dump(2));
    return semantic;
}

Harness::TrainingArtifacts Harness::ensure_training(const Dataset& scoped, const std::string& user,
                                                    double fraction, bool need_index,
                                                    bool need_critiques, bool need_semantic) {
    TrainingArtifacts artifacts;
    artifacts.subset = select_training_subset(scoped.train, fraction, config_.subset_seed);

    if (need_index) {
        artifacts.index = ensure_index(scoped, user, fraction, artifacts.subset);
        if (artifacts.index.size() != artifacts.subset.size()) {
            throw IntegrityError("index artifact size " + std::to_string(artifacts.index.size()) +
                                 " does not match subset size " +
                                 std::to_string(artifacts.subset.size()));
        }
    }

    if (need_critiques || need_semantic) {
        const Json artifact = ensure_critiques(scoped, user, fraction, artifacts.subset);
        std::unordered_map<std::string, Json> by_id;
        for (const auto& record : artifact.at("records")) {
            by_id[record.at("instance_id").get<std::string>()] = record;
        }
        std::unordered_map<std::string, const EmbeddingVector*> vector_by_id;
        for (const auto& [id, vector] : artifacts.index.entries()) vector_by_id[id] = &vector;

        for (const auto& instance : artifacts.subset) {
            auto it = by_id.find(instance.id);
            if (it == by_id.end()) {
                throw IntegrityError("critique artifact missing record for " + instance.id);
            }
            EpisodicEntry entry;
            entry.instance = instance;
            entry.pa_initial = it->second.at("pa_initial").get<std::string>();
            entry.critique = it->second.at("critique").get<Critique>();
            if (auto vec = vector_by_id.find(instance.id); vec != vector_by_id.end()) {
                entry.embedding = *vec->second;
            }
            artifacts.entries.push_back(std::move(entry));
        }
    }

    if (need_semantic) {
        artifacts.semantic = ensure_semantic(scoped, user, fraction, artifacts.entries);
    }
    return artifacts;
}

double Harness::cell_fraction(StrategyKind strategy, double fraction) const {
    // zero_shot touches no memory, so all fractions share one cell
    return strategy == StrategyKind::zero_shot ? 1.0 : fraction;
}

EvalCell Harness::ensure_eval_cell(const Dataset& scoped, const std::string& user,
                                   StrategyKind strategy, double fraction) {
    const double effective = cell_fraction(strategy, fraction);
    BackendHandle critic = make_backend(config_.critic_backend, scoped);
    const ArtifactKey key = eval_cell_key(scoped, user, strategy, effective, critic->model_id());
    if (auto bytes = store_.get(key)) {
        return Json::parse(*bytes).get<EvalCell>();
    }

    TrainingArtifacts artifacts =
        ensure_training(scoped, user, effective, strategy_uses_retrieval(strategy),
                        strategy_uses_critiques(strategy) || strategy_uses_semantic(strategy),
                        strategy_uses_semantic(strategy));

    StrategyContext context;
    context.examples = &artifacts.subset;
    context.store = &artifacts.entries;
    context.index = &artifacts.index;
    context.semantic = artifacts.semantic ? &*artifacts.semantic : nullptr;
    context.embedder = embedder_.get();
    context.k = config_.k;
    context.most_similar_first = config_.most_similar_first;

    BackendHandle pa = make_backend(config_.pa_backend, scoped);
    TokenMeter local;
    EvalCell cell;
    cell.dataset = scoped.name;
    cell.user = user;
    cell.strategy = strategy;
    cell.fraction = effective;
    for (const auto& instance : scoped.test) {
        const AssembledPrompt prompt = assemble(strategy, instance, context);
        ChatRequest request = make_request(prompt.messages, *pa);
        CompletionResult result;
        try {
            result = complete(*pa, request, local, Phase::utilization);
        } catch (const Error& ex) {
            throw TransportError("eval " + to_string(strategy) + " failed for instance " +
                                 instance.id + ": " + ex.what());
        }
        PredictionRecord record;
        record.instance_id = instance.id;
        record.strategy = strategy;
        record.raw_output = result.text;
        record.predicted = normalize_label(result.text, scoped.label_space);
        record.correct = is_correct(record.predicted, instance.gold, scoped.label_space);
        record.prompt_tokens = result.prompt_tokens;
        record.completion_tokens = result.completion_tokens;
        cell.n += 1;
        cell.n_correct += record.correct ? 1 : 0;
        cell.prompt_tokens += record.prompt_tokens;
        cell.completion_tokens += record.completion_tokens;
        cell.predictions.push_back(std::move(record));
    }
    cell.accuracy =
        cell.n == 0 ? 0.0 : static_cast<double>(cell.n_correct) / static_cast<double>(cell.n);
    meter_.absorb(local);
    store_.put(key, Json(cell).dump(2));
    return cell;
}

SuggestibilityReport Harness::ensure_probe(const Dataset& scoped, const std::string& user,
                                           ProbeCondition condition) {
    BackendHandle critic = make_backend(config_.critic_backend, scoped);
    const ArtifactKey key = probe_key(scoped, user, condition, critic->model_id());
    if (auto bytes = store_.get(key)) {
        return Json::parse(*bytes).at("report").get<SuggestibilityReport>();
    }
    BackendHandle pa = make_backend(config_.pa_backend, scoped);
    TokenMeter local;
    SuggestibilityReport report =
        run_probe(scoped, condition, *pa, *critic, config_.flip_seed, local);
    Json artifact{{"dataset", scoped.name},
                  {"user", user},
                  {"report", report},
                  {"training_tokens", local.phase(Phase::training).total()},
                  {"utilization_tokens", local.phase(Phase::utilization).total()}};
    meter_.absorb(local);
    store_.put(key, artifact.dump(2));
    return report;
}

void Harness::train() {
    bool need_index = false;
    bool need_critiques = false;
    bool need_semantic = false;
    for (StrategyKind strategy : config_.strategies) {
        need_index = need_index || strategy_uses_retrieval(strategy);
        need_critiques = need_critiques || strategy_uses_critiques(strategy) ||
                         strategy_uses_semantic(strategy);
        need_semantic = need_semantic || strategy_uses_semantic(strategy);
    }
    if (!need_index && !need_critiques) return;
    for (const auto& dataset : datasets_) {
        for (const auto& user : user_groups(dataset)) {
            const Dataset scoped = dataset_for_user(dataset, user);
            for (double fraction : config_.fractions) {
                try {
                    ensure_training(scoped, user, fraction, need_index, need_critiques,
                                    need_semantic);
                } catch (const Error& ex) {
                    failures_.push_back({dataset.name, user, "train", ex.what()});
                }
            }
        }
    }
}

Json Harness::run_experiment() {
    for (const auto& dataset : datasets_) {
        for (const auto& user : user_groups(dataset)) {
            const Dataset scoped = dataset_for_user(dataset, user);
            for (double fraction : config_.fractions) {
                for (StrategyKind strategy : config_.strategies) {
                    try {
                        ensure_eval_cell(scoped, user, strategy, fraction);
                    } catch (const Error& ex) {
                        failures_.push_back({dataset.name, user,
                                             "eval " + to_string(strategy) + " f" +
                                                 format_fraction(fraction),
                                             ex.what()});
                    }
                }
            }
        }
    }
    return build_report();
}

void Harness::probe() {
    for (const auto& dataset : datasets_) {
        for (const auto& user : user_groups(dataset)) {
            const Dataset scoped = dataset_for_user(dataset, user);
            for (ProbeCondition condition : config_.probe_conditions) {
                try {
                    ensure_probe(scoped, user, condition);
                } catch (const Error& ex) {
                    failures_.push_back(
                        {dataset.name, user, "probe " + to_string(condition), ex.what()});
                }
            }
        }
    }
}

std::string Harness::dump_prompt(const std::string& dataset_name, const std::string& instance_id,
                                 StrategyKind strategy, double fraction) {
    for (const auto& dataset : datasets_) {
        if (dataset.name != dataset_name) continue;
        for (const auto* side : {&dataset.test, &dataset.train}) {
            for (const auto& instance : *side) {
                if (instance.id != instance_id) continue;
                const std::string user = instance.user_id.value_or("");
                const Dataset scoped = dataset_for_user(dataset, user);
                const double effective = cell_fraction(strategy, fraction);
                TrainingArtifacts artifacts = ensure_training(
                    scoped, user, effective, strategy_uses_retrieval(strategy),
                    strategy_uses_critiques(strategy) || strategy_uses_semantic(strategy),
                    strategy_uses_semantic(strategy));
                StrategyContext context;
                context.examples = &artifacts.subset;
                context.store = &artifacts.entries;
                context.index = &artifacts.index;
                context.semantic = artifacts.semantic ? &*artifacts.semantic : nullptr;
                context.embedder = embedder_.get();
                context.k = config_.k;
                context.most_similar_first = config_.most_similar_first;
                return render_transcript(assemble(strategy, instance, context).messages);
            }
        }
        throw ConfigError("instance '" + instance_id + "' not found in dataset " + dataset_name);
    }
    throw ConfigError("dataset '" + dataset_name + "' not in config");
}

std::string Harness::dump_probe_prompt(const std::string& dataset_name,
                                       const std::string& instance_id, ProbeCondition condition,
                                       bool adversarial) {
    for (const auto& dataset : datasets_) {
        if (dataset.name != dataset_name) continue;
        for (const auto* side : {&dataset.test, &dataset.train}) {
            for (const auto& instance : *side) {
                if (instance.id != instance_id) continue;
                const Dataset scoped = dataset_for_user(dataset, instance.user_id.value_or(""));
                const std::string asserted =
                    adversarial ? flip_label(instance.gold, scoped.label_space,
                                             config_.flip_seed ^ fnv1a64(instance.id))
                                : instance.gold;
                std::optional<Critique> critique;
                if (condition != ProbeCondition::XY) {
                    BackendHandle pa = make_backend(config_.pa_backend, scoped);
                    BackendHandle critic = make_backend(config_.critic_backend, scoped);
                    PredictionRecord initial =
                        initial_predict(instance, *pa, meter_, scoped.label_space);
                    critique = generate_critique({instance, initial.raw_output, asserted}, *critic,
                                                 meter_, scoped.label_space);
                }
                return render_transcript(
                    build_probe_prompt(condition, instance, asserted, critique).messages);
            }
        }
        throw ConfigError("instance '" + instance_id + "' not found in dataset " + dataset_name);
    }
    throw ConfigError("dataset '" + dataset_name + "' not in config");
}

Json Harness::build_report() const {
    Json datasets = Json::object();
    for (const auto& dataset : datasets_) {
        Json accuracy = Json::object();
        Json utilization = Json::object();
        Json training_tokens = Json::object();
        Json memory_sizes = Json::object();
        Json probes = Json::object();
        const std::vector<std::string> users = user_groups(dataset);

        for (double fraction : config_.fractions) {
            const std::string fraction_key = format_fraction(fraction);
            Json sizes_per_user = Json::object();
            std::size_t total_size = 0;
            for (const auto& user : users) {
                const Dataset scoped = dataset_for_user(dataset, user);
                const std::size_t size =
                    round_half_up(fraction * static_cast<double>(scoped.train.size()));
                sizes_per_user[user] = size;
                total_size += size;
            }
            memory_sizes[fraction_key] = Json{{"total", total_size}, {"per_user", sizes_per_user}};
        }

        for (StrategyKind strategy : config_.strategies) {
            Json per_fraction = Json::object();
            Json tokens_per_fraction = Json::object();
            for (double fraction : config_.fractions) {
                const double effective = cell_fraction(strategy, fraction);
                const std::string fraction_key = format_fraction(effective);
                if (per_fraction.contains(fraction_key)) continue;
                Json per_user = Json::object();
                double sum = 0.0;
                std::size_t prompt_tokens = 0;
                std::size_t completion_tokens = 0;
                bool complete_row = !users.empty();
                for (const auto& user : users) {
                    const Dataset scoped = dataset_for_user(dataset, user);
                    BackendHandle critic = make_backend(config_.critic_backend, scoped);
                    const ArtifactKey key =
                        eval_cell_key(scoped, user, strategy, effective, critic->model_id());
                    auto bytes = store_.get(key);
                    if (!bytes) {
                        complete_row = false;
                        break;
                    }
                    const EvalCell cell = Json::parse(*bytes).get<EvalCell>();
                    per_user[user] = cell.accuracy;
                    sum += cell.accuracy;
                    prompt_tokens += cell.prompt_tokens;
                    completion_tokens += cell.completion_tokens;
                }
                if (!complete_row) continue;
                per_fraction[fraction_key] =
                    Json{{"mean", sum / static_cast<double>(users.size())},
                         {"per_user", per_user}};
                tokens_per_fraction[fraction_key] = Json{{"prompt_tokens", prompt_tokens},
                                                         {"completion_tokens", completion_tokens}};
            }
            if (!per_fraction.empty()) {
                accuracy[to_string(strategy)] = per_fraction;
                utilization[to_string(strategy)] = tokens_per_fraction;
            }
        }

        // training-side tokens come from the critique/semantic artifacts
        for (double fraction : config_.fractions) {
            const std::string fraction_key = format_fraction(fraction);
            Json entry = Json::object();
            std::size_t critique_tokens = 0;
            std::size_t semantic_tokens = 0;
            bool have_critiques = false;
            bool have_semantic = false;
            for (const auto& user : users) {
                const Dataset scoped = dataset_for_user(dataset, user);
                BackendHandle critic = make_backend(config_.critic_backend, scoped);
                if (auto bytes =
                        store_.get(critiques_key(scoped, user, fraction, critic->model_id()))) {
                    const Json artifact = Json::parse(*bytes);
                    critique_tokens += artifact.at("training_prompt_tokens").get<std::size_t>() +
                                       artifact.at("training_completion_tokens").get<std::size_t>();
                    have_critiques = true;
                }
                if (auto bytes =
                        store_.get(semantic_key(scoped, user, fraction, critic->model_id()))) {
                    const Json artifact = Json::parse(*bytes);
                    semantic_tokens += artifact.at("training_prompt_tokens").get<std::size_t>() +
                                       artifact.at("training_completion_tokens").get<std::size_t>();
                    have_semantic = true;
                }
            }
            if (have_critiques) entry["critiques"] = critique_tokens;
            if (have_semantic) entry["semantic"] = semantic_tokens;
            if (!entry.empty()) training_tokens[fraction_key] = entry;
        }

        for (ProbeCondition condition : config_.probe_conditions) {
            Json per_user = Json::object();
            double s_sum = 0.0;
            double best_sum = 0.0;
            double adversarial_sum = 0.0;
            bool complete_row = !users.empty();
            for (const auto& user : users) {
                const Dataset scoped = dataset_for_user(dataset, user);
                BackendHandle critic = make_backend(config_.critic_backend, scoped);
                const ArtifactKey key = probe_key(scoped, user, condition, critic->model_id());
                auto bytes = store_.get(key);
                if (!bytes) {
                    complete_row = false;
                    break;
                }
                const SuggestibilityReport report =
                    Json::parse(*bytes).at("report").get<SuggestibilityReport>();
                per_user[user] = Json{{"s", report.s},
                                      {"acc_best", report.acc_best},
                                      {"acc_adversarial", report.acc_adversarial},
                                      {"n", report.n}};
                s_sum += report.s;
                best_sum += report.acc_best;
                adversarial_sum += report.acc_adversarial;
            }
            if (!complete_row) continue;
            const double count = static_cast<double>(users.size());
            probes[to_string(condition)] = Json{{"mean_s", s_sum / count},
                                                {"mean_acc_best", best_sum / count},
                                                {"mean_acc_adversarial", adversarial_sum / count},
                                                {"per_user", per_user}};
        }

        Json entry{{"users", users},
                   {"n_train", dataset.train.size()},
                   {"n_test", dataset.test.size()},
                   {"label_space", dataset.label_space},
                   {"memory_sizes", memory_sizes},
                   {"accuracy", accuracy},
                   {"utilization_tokens", utilization},
                   {"training_tokens", training_tokens}};
        if (!probes.empty()) entry["probes"] = probes;
        datasets[dataset.name] = std::move(entry);
    }

    Json failures = Json::array();
    for (const auto& failure : failures_) {
        failures.push_back(Json{{"dataset", failure.dataset},
                                {"user", failure.user},
                                {"stage", failure.stage},
                                {"message", failure.message}});
    }

    Json report{{"template_version", kTemplateVersion},
                {"config_hash", config_.config_hash()},
                {"datasets", std::move(datasets)},
                {"failures", std::move(failures)}};

    try {
        const GainTable gains = aggregate_gains(report);
        Json rows = Json::object();
        for (const auto& row : gains.rows) {
            rows[row.dataset] = Json{{"best_critique", row.best_critique},
                                     {"best_baseline", row.best_baseline},
                                     {"gain", row.gain}};
        }
        report["gains"] =
            Json{{"per_dataset", rows}, {"mean", gains.mean}, {"variance", gains.variance}};
    } catch (const AggregationError&) {
        // not all five strategies present; gains are omitted
    }
    return report;
}

} // namespace critmem
