#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "critmem/core.hpp"
#include "critmem/datasets.hpp"
#include "critmem/embed.hpp"
#include "critmem/gateway.hpp"
#include "critmem/memory.hpp"
#include "critmem/prompts.hpp"
#include "critmem/store.hpp"
#include "critmem/suggestibility.hpp"

namespace critmem {

struct RunConfig {
    std::vector<Json> dataset_specs;
    Json pa_backend;
    Json critic_backend;
    Json embed_spec = Json{{"kind", "hash"}, {"dim", 64}, {"seed", 0}};
    std::vector<StrategyKind> strategies;
    std::vector<double> fractions = {1.0};
    std::size_t k = 5;
    std::uint64_t split_seed = 7;
    std::uint64_t subset_seed = 13;
    std::uint64_t flip_seed = 99;
    std::vector<ProbeCondition> probe_conditions;
    std::size_t semantic_token_budget = 3000;
    std::size_t semantic_chunk_size = 40;
    bool most_similar_first = true;
    std::filesystem::path output_dir = "out";

    static RunConfig from_json(const Json& j);
    static RunConfig from_file(const std::filesystem::path& path);
    Json to_json() const;
    std::string config_hash() const; // everything except output_dir
    void validate() const;
};

// Backend / embed provider factories driven by the config specs. Scripted
// specs bind to the dataset at hand (the gold oracle needs its answer table).
BackendHandle make_backend(const Json& spec, const Dataset& dataset);
EmbedProviderHandle make_embed_provider(const Json& spec);
Dataset materialize_dataset(const Json& spec, std::uint64_t default_split_seed);

struct EvalCell {
    std::string dataset;
    std::string user;
    StrategyKind strategy = StrategyKind::zero_shot;
    double fraction = 1.0;
    std::size_t n = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0;
    std::size_t prompt_tokens = 0;     // utilization phase
    std::size_t completion_tokens = 0; // utilization phase
    std::vector<PredictionRecord> predictions;
};

void to_json(Json& j, const EvalCell& cell);
void from_json(const Json& j, EvalCell& cell);

struct RunFailure {
    std::string dataset;
    std::string user;
    std::string stage;
    std::string message;
};

struct GainRow {
    std::string dataset;
    double best_critique = 0.0;
    double best_baseline = 0.0;
    double gain = 0.0; // best critique strategy minus best baseline
};

struct GainTable {
    std::vector<GainRow> rows;
    double mean = 0.0;
    double variance = 0.0; // population variance across datasets
};

// Orchestrates (datasets x users x fractions x strategies) with every
// intermediate artifact persisted and reused; reruns with a warm store make
// no gateway calls.
class Harness {
public:
    explicit Harness(RunConfig config);

    // Builds critique, index and semantic artifacts for everything the
    // configured strategies need.
    void train();

    // Train on demand, evaluate every configured cell, return the report.
    Json run_experiment();

    // Suggestibility probes for every configured condition.
    void probe();

    // Assembles the report from persisted artifacts only.
    Json build_report() const;

    // Audit rendering of the exact prompt a strategy or probe would send.
    std::string dump_prompt(const std::string& dataset_name, const std::string& instance_id,
                            StrategyKind strategy, double fraction);
    std::string dump_probe_prompt(const std::string& dataset_name, const std::string& instance_id,
                                  ProbeCondition condition, bool adversarial);

    const RunConfig& config() const { return config_; }
    const TokenMeter& meter() const { return meter_; }
    const std::vector<RunFailure>& failures() const { return failures_; }
    const std::vector<Dataset>& datasets() const { return datasets_; }
    ArtifactStore& store() { return store_; }

private:
    struct TrainingArtifacts {
        std::vector<TaskInstance> subset;
        std::vector<EpisodicEntry> entries; // empty unless critiques were built
        VectorIndex index;
        std::optional<SemanticMemory> semantic;
    };

    ArtifactKey base_key(ArtifactKind kind, const Dataset& scoped, const std::string& user,
                         double fraction, const std::string& model, const Json& inputs) const;
    ArtifactKey index_key(const Dataset& scoped, const std::string& user, double fraction) const;
    ArtifactKey critiques_key(const Dataset& scoped, const std::string& user, double fraction,
                              const std::string& critic_model) const;
    ArtifactKey semantic_key(const Dataset& scoped, const std::string& user, double fraction,
                             const std::string& critic_model) const;
    ArtifactKey eval_cell_key(const Dataset& scoped, const std::string& user, StrategyKind strategy,
                              double effective, const std::string& critic_model) const;
    ArtifactKey probe_key(const Dataset& scoped, const std::string& user, ProbeCondition condition,
                          const std::string& critic_model) const;
    VectorIndex ensure_index(const Dataset& scoped, const std::string& user, double fraction,
                             const std::vector<TaskInstance>& subset);
    Json ensure_critiques(const Dataset& scoped, const std::string& user, double fraction,
                          const std::vector<TaskInstance>& subset);
    SemanticMemory ensure_semantic(const Dataset& scoped, const std::string& user, double fraction,
                                   const std::vector<EpisodicEntry>& entries);
    TrainingArtifacts ensure_training(const Dataset& scoped, const std::string& user,
                                      double fraction, bool need_index, bool need_critiques,
                                      bool need_semantic);
    EvalCell ensure_eval_cell(const Dataset& scoped, const std::string& user, StrategyKind strategy,
                              double fraction);
    SuggestibilityReport ensure_probe(const Dataset& scoped, const std::string& user,
                                      ProbeCondition condition);

    std::string dataset_fingerprint(const Dataset& scoped) const;
    double cell_fraction(StrategyKind strategy, double fraction) const;

    RunConfig config_;
    ArtifactStore store_;
    TokenMeter meter_;
    std::vector<Dataset> datasets_;
    EmbedProviderHandle embedder_;
    std::vector<RunFailure> failures_;
};

// Per dataset: best critique-based strategy minus best baseline, at the given
// fraction, plus mean and population variance across datasets.
GainTable aggregate_gains(const Json& report, double fraction = 1.0);

// Aligned text tables mirroring the published layouts.
std::string render_accuracy_table(const Json& report, double fraction = 1.0);
std::string render_fraction_grid(const Json& report);
std::string render_probe_table(const Json& report);
std::string render_token_table(const Json& report, double fraction = 1.0);
std::string render_gain_table(const GainTable& gains);

} // namespace critmem
