#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "critmem/core.hpp"

namespace critmem {

// Seeded shuffle, then an even split; odd counts give train the extra item.
std::pair<std::vector<TaskInstance>, std::vector<TaskInstance>>
split(std::vector<TaskInstance> instances, std::uint64_t seed);

struct PrefItem {
    std::string title;
    std::optional<double> priority; // higher is sampled first when present
};

struct PreferenceSpec {
    std::string user_id;
    std::vector<PrefItem> in_history;
    std::vector<PrefItem> out_of_history;
    std::size_t per_side_target = 250;
};

// Binary In/Out membership task over a user's history, up to per_side_target
// sampled per side (favorites first when priorities are present), then split.
Dataset build_preference_dataset(const PreferenceSpec& spec, std::uint64_t seed);

enum class SyntheticKind { keyed_binary, keyed_multichoice, planted_preference };

std::string to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(const std::string& text);

struct SyntheticTaskSpec {
    SyntheticKind kind = SyntheticKind::keyed_binary;
    std::size_t size = 100;
    std::uint64_t seed = 0;
    std::optional<LabelSpace> label_space; // defaults per kind when absent
};

// Deterministic desk-scale tasks with planted rules, so scripted agents can
// be checked against enumerable oracles.
Dataset generate_synthetic(const SyntheticTaskSpec& spec);

// planted_preference internals, exposed so tests can flip the taste vector.
std::vector<int> planted_taste(std::uint64_t seed);
Dataset planted_preference_dataset(std::size_t size, std::uint64_t seed,
                                   const std::vector<int>& taste);

// The key phrase that decides a keyed_binary question's gold label. Oracle
// helpers and scripted critics share it.
std::string keyed_binary_key(const std::string& gold_is_first_label, bool first);
std::string keyed_binary_key_for(const Dataset& dataset, const TaskInstance& instance);

// --- canonical file schema ---------------------------------------------------
//
// <stem>.jsonl        one {"id", "question", "gold", "user_id"?} object per line
// <stem>.header.json  {"name", "labels", "kind", "split_seed"}
//
// Loading validates the invariants and applies split() with the header seed.

Dataset load_jsonl_dataset(const std::filesystem::path& jsonl_path);
void save_jsonl_dataset(const Dataset& dataset, const std::filesystem::path& jsonl_path);

// Train/test instances of one user, preserving order. Instances without a
// user id form the "" group.
std::vector<std::string> user_groups(const Dataset& dataset);
Dataset dataset_for_user(const Dataset& dataset, const std::string& user_id);

} // namespace critmem
