#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sessrl/embed.hpp"

namespace sessrl {

enum class WeightScheme { Linear, Exponential };

struct BaselineConfig {
    int window = 4;
    WeightScheme scheme = WeightScheme::Linear;
    double decay = 0.5; // lambda for the exponential scheme, in (0, 1]
};

void validate_baseline_config(const BaselineConfig& cfg);

/// Recency-weighted average of the window's embeddings. Weights sum to 1 and
/// increase toward the most recent position: linear w_j proportional to j, or
/// exponential w_j proportional to decay^(k-j), j = 1..k with j = k most
/// recent. decay = 1 degenerates to the plain average.
Vec weighted_state(const EmbeddingTable& table, std::span<const std::int32_t> window,
                   const BaselineConfig& cfg);

struct RankedList {
    std::vector<std::int32_t> ids;
    bool degenerate = false; // query vector had zero norm; order fell back to ids
};

/// Ranks every attribute by cosine similarity against the weighted state,
/// descending; ties broken by ascending id. Myopic by construction: no state
/// beyond the window.
RankedList recommend_top_k_baseline(const EmbeddingTable& table,
                                    std::span<const std::int32_t> window, int top_k,
                                    const BaselineConfig& cfg);

} // namespace sessrl
