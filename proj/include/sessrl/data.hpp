#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sessrl/transition.hpp"

namespace sessrl {

/// The attribute universe. Ids are dense in [0, size()) and equal the line
/// number in the vocabulary file.
class AttributeVocab {
public:
    static AttributeVocab from_names(std::vector<std::string> names);

    std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
    const std::string& name(std::int32_t id) const;
    std::optional<std::int32_t> id_of(const std::string& name) const;
    const std::vector<std::string>& names() const { return names_; }

    /// Fingerprint over the ordered names; used to pair artifacts.
    std::string hash() const;

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::int32_t> index_;
};

AttributeVocab load_vocab(const std::string& path);
void save_vocab(const std::string& path, const AttributeVocab& vocab);

/// Synthetic vocabulary "attr_0000".."attr_<V-1>".
AttributeVocab make_session_vocab(std::int32_t vocab_size);

struct SessionEvent {
    std::int32_t attribute = 0;
    double dwell_ms = 0.0;
};

struct SessionLog {
    std::string id;
    std::vector<SessionEvent> events; // nonempty; indices 0..N
    bool purchased = false;

    /// N: index of the last event.
    int last_index() const { return static_cast<int>(events.size()) - 1; }
};

/// One JSON object per line: {"id":..., "purchased":..., "events":[[name, dwell], ...]}.
std::vector<SessionLog> load_sessions(const std::string& path, const AttributeVocab& vocab);
void save_sessions(const std::string& path, std::span<const SessionLog> sessions,
                   const AttributeVocab& vocab);

/// Canonical one-line serialization of a session (exactly what save_sessions writes).
std::string session_to_json_line(const SessionLog& session, const AttributeVocab& vocab);

/// Fingerprint of a session corpus: FNV-1a over the canonical serialization.
std::string sessions_hash(std::span<const SessionLog> sessions, const AttributeVocab& vocab);

/// Dwell normalization: clip at the cap (a percentile of the training dwells)
/// and divide, mapping into [0, 1].
struct NormalizationStats {
    double cap = 0.0;        // dwell value at `percentile`, nearest-rank
    double percentile = 0.0; // in (0, 100]
};

NormalizationStats fit_normalizer(std::span<const SessionLog> sessions, double percentile);
double normalize_dwell(double dwell_ms, const NormalizationStats& stats);

/// Markov-chain session generator standing in for real click-stream logs.
struct GeneratorConfig {
    std::int32_t vocab_size = 0;
    std::vector<std::vector<double>> transition_matrix; // V rows, each row-stochastic
    std::vector<double> purchase_affinity;              // per attribute, in [0, 1]
    std::vector<double> dwell_means;                    // per attribute, positive, ms
    int min_length = 2;                                 // events per session, inclusive
    int max_length = 2;
    std::uint64_t seed = 0;
    std::int64_t num_sessions = 0;
};

void validate_generator_config(const GeneratorConfig& cfg);
std::vector<SessionLog> generate_sessions(const GeneratorConfig& cfg);

/// Knobs for a generator with planted, learnable structure: attributes live in
/// clusters, and each attribute routes most of its transition mass to a fixed
/// per-attribute set of successors inside its cluster. Successor sets are
/// directed (j in succ(i) does not imply i in succ(j)), which is the pattern a
/// sequence model can learn but a symmetric similarity cannot.
struct PlantedConfig {
    std::int32_t vocab_size = 200;
    std::int64_t num_sessions = 1000;
    std::uint64_t seed = 0;
    int clusters = 8;
    int successors_per_attribute = 8;
    double structured_mass = 0.9;  // transition mass routed to the successor set
    double successor_decay = 0.65; // geometric weight decay across the set
    int min_length = 6;
    int max_length = 10;
    double dwell_mean_lo = 400.0;
    double dwell_mean_hi = 1600.0;
    double affinity_lo = 0.05;
    double affinity_hi = 0.45;
};

GeneratorConfig make_planted_generator(const PlantedConfig& cfg);

/// Deterministic train/test split on the session-id hash. A session goes to
/// the train side when (fnv1a64(id) >> 11) * 2^-53 < ratio.
std::pair<std::vector<SessionLog>, std::vector<SessionLog>>
split_sessions(std::span<const SessionLog> sessions, double train_ratio);

/// Cuts a session into transitions: one per event index n in [k, N]. Sessions
/// with fewer than k+1 events yield none.
std::vector<Transition> sessions_to_transitions(const SessionLog& session, int k,
                                                const NormalizationStats& stats);

} // namespace sessrl
