#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "sessrl/data.hpp"
#include "sessrl/tensor.hpp"

namespace sessrl {

/// Dense attribute embeddings, one row per attribute id. `vectors` holds the
/// input vectors (the E(.) map consumers read); `context_vectors` exist only
/// for training and are not serialized.
struct EmbeddingTable {
    std::int32_t dim = 0;
    Tensor2 vectors;         // V x dim
    Tensor2 context_vectors; // V x dim

    std::int32_t size() const { return vectors.rows; }

    /// Input vector for `id`, copied. Throws BoundsError outside [0, V).
    Vec lookup(std::int32_t id) const;

    /// Borrowed view of the input vector row (bounds-checked).
    std::span<const double> row_span(std::int32_t id) const;
};

struct SkipGramConfig {
    int dim = 32;
    int window = 2;
    int negatives = 5; // negative samples per positive pair
    int epochs = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 0;
};

/// Skip-gram with negative sampling over session attribute sequences.
/// Negatives are drawn from the unigram distribution raised to 3/4.
/// Deterministic for a given config.
EmbeddingTable train_embeddings(std::span<const SessionLog> sessions,
                                const AttributeVocab& vocab, const SkipGramConfig& cfg);

/// u.v / (|u||v|), clamped to [-1, 1]. Zero norm on either side yields 0 so a
/// degenerate query still produces a total ranking; callers that care flag it.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Versioned binary checkpoint (input vectors only): magic, version, V, dim,
/// then V*dim little-endian 64-bit floats.
void save_embeddings(const std::string& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::string& path);

/// Plain-text export for inspection: one row per line, space-separated.
void export_embeddings_text(const std::string& path, const EmbeddingTable& table);

/// Fingerprint over dims and input-vector bytes; identical before/after a
/// checkpoint round-trip.
std::string embedding_hash(const EmbeddingTable& table);

} // namespace sessrl
