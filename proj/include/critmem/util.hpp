#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace critmem {

// FNV-1a, used wherever a hash must be stable across platforms and runs
// (std::hash gives no such guarantee).
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t mix_hash(std::uint64_t a, std::uint64_t b);

std::string trim(std::string_view text);
std::string casefold(std::string_view text);

// Splits on runs of whitespace. Also the scripted backends' token counter.
std::vector<std::string> whitespace_tokens(std::string_view text);
std::size_t whitespace_token_count(std::string_view text);

// Alphanumeric word tokens, case-folded. Used by the hash embedder.
std::vector<std::string> word_tokens(std::string_view text);

// round(x) with halves going up: 62.5 -> 63.
std::size_t round_half_up(double x);

// Portable seeded draws. uniform_int_distribution is implementation-defined,
// so all seeded choices go through these helpers instead.
std::uint64_t draw_u64(std::mt19937_64& gen);
std::size_t draw_index(std::mt19937_64& gen, std::size_t n);
double draw_unit(std::mt19937_64& gen); // [0, 1)

// In-place Fisher-Yates with portable draws.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& gen) {
    if (items.size() < 2) return;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
        const std::size_t j = i + draw_index(gen, items.size() - i);
        if (j != i) std::swap(items[i], items[j]);
    }
}

std::string to_hex(std::uint64_t value);

} // namespace critmem
