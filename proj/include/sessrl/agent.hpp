#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sessrl/data.hpp"
#include "sessrl/embed.hpp"
#include "sessrl/nnet.hpp"
#include "sessrl/rng.hpp"
#include "sessrl/transition.hpp"

namespace sessrl {

struct AgentConfig {
    int window = 4;                          // previous attributes fed to the LSTM
    double gamma = 1.0;                      // sound here: every session is a finite
                                             // episode with a terminal branch
    double learning_rate = 1e-3;
    int target_sync_interval = 100;          // updates between target-network syncs;
                                             // 1 recovers a per-step previous-theta target
    double purchase_reward = 10.0;
    double exit_reward = 0.0;                // terminal reward without a purchase
    int epochs = 5;
    std::uint64_t seed = 0;
    int lstm_hidden = 64;
    int dense_hidden = 64;
    std::optional<double> grad_clip = 5.0;   // global-norm threshold; nullopt disables
    double normalizer_percentile = 95.0;
};

void validate_agent_config(const AgentConfig& cfg);

struct EpochSummary {
    double mean_loss = 0.0;
    std::uint64_t transitions = 0;
};

/// The recommendation agent: a Q-network over frozen attribute embeddings,
/// trained off-policy on logged transitions against a lagged target network.
class TrainedAgent {
public:
    TrainedAgent(EmbeddingTable embeddings, AgentConfig cfg);

    /// Q-values for every attribute given the window of previous attribute ids.
    Vec q_values(std::span<const std::int32_t> window, bool use_target = false) const;

    /// Regression target: the fixed terminal value when the session ended here,
    /// otherwise reward + gamma * max over the target network at the next window.
    double td_target(const Transition& t) const;

    /// One SGD update on the squared TD error of this transition; returns the
    /// loss before the update. Syncs the target network every
    /// target_sync_interval updates.
    double train_step(const Transition& t);

    /// One pass over the corpus: sessions in a seeded shuffled order,
    /// transitions within each session in temporal order.
    EpochSummary train_epoch(std::span<const SessionLog> sessions,
                             const NormalizationStats& stats);

    /// The K attributes with the highest Q-values, descending; ties broken by
    /// ascending attribute id.
    std::vector<std::int32_t> recommend_top_k(std::span<const std::int32_t> window,
                                              int top_k) const;

    const AgentConfig& config() const { return cfg_; }
    AgentConfig& config() { return cfg_; }
    const QNetworkParams& params() const { return params_; }
    QNetworkParams& params() { return params_; }
    const QNetworkParams& target_params() const { return target_params_; }
    const EmbeddingTable& embeddings() const { return embeddings_; }
    std::uint64_t updates_done() const { return updates_done_; }

    /// Used by the checkpoint loader; also syncs the target network.
    void restore(QNetworkParams params, std::uint64_t updates_done);

private:
    std::vector<Vec> embed_window(std::span<const std::int32_t> window) const;

    EmbeddingTable embeddings_;
    AgentConfig cfg_;
    QNetworkParams params_;
    QNetworkParams target_params_;
    std::uint64_t updates_done_ = 0;
    Rng shuffle_rng_;
    GradientBundle grads_;
    QForwardCache cache_;
};

/// Agent checkpoint = network checkpoint + JSON sidecar (config, vocabulary
/// hash, embedding-table hash, updates_done). The loader refuses artifacts
/// whose hashes do not match the vocabulary/embeddings it is given.
void save_agent(const std::string& network_path, const std::string& sidecar_path,
                const TrainedAgent& agent, const AttributeVocab& vocab);
TrainedAgent load_agent(const std::string& network_path, const std::string& sidecar_path,
                        const EmbeddingTable& embeddings, const AttributeVocab& vocab);

} // namespace sessrl
