#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "critmem/core.hpp"
#include "critmem/gateway.hpp"
#include "critmem/memory.hpp"

namespace critmem {

struct CritiqueRequest {
    TaskInstance instance;
    std::string pa_initial;    // the agent's raw first answer
    std::string asserted_label; // gold during training, possibly flipped in probes
};

// Zero-shot first answer for one instance; tokens booked under training.
PredictionRecord initial_predict(const TaskInstance& instance, Backend& pa_backend,
                                 TokenMeter& meter, const LabelSpace& space);

// Runs the three-turn critique transcript and validates the result. The
// returned assertion always equals the asserted label: a disagreeing critic is
// overridden (assertion_overridden), an unparseable one falls back to a stub
// critique (parse_fallback) after a single repair attempt.
Critique generate_critique(const CritiqueRequest& request, Backend& critic_backend,
                           TokenMeter& meter, const LabelSpace& space);

// First balanced {...} object in the text, or nullopt. Models like wrapping
// their JSON in prose.
std::optional<std::string> extract_json_object(const std::string& text);

// Seeded uniform subset of round-half-up(fraction * N) instances, returned in
// the original train order.
std::vector<TaskInstance> select_training_subset(const std::vector<TaskInstance>& train,
                                                 double fraction, std::uint64_t seed);

// Full training pass over a seeded train fraction: initial prediction,
// gold-grounded critique, question embedding, one entry per instance.
std::vector<EpisodicEntry> build_training_memory(const Dataset& dataset, Backend& pa_backend,
                                                 Backend& critic_backend,
                                                 EmbedProvider& embed_provider, double fraction,
                                                 std::uint64_t seed, TokenMeter& meter);

} // namespace critmem
