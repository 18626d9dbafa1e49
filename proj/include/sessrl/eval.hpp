#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sessrl/agent.hpp"
#include "sessrl/baseline.hpp"
#include "sessrl/data.hpp"

#include <nlohmann/json.hpp>

namespace sessrl {

/// Anything that can turn a window of previous attribute ids into an ordered
/// top-K attribute list. Implementations must be pure: same window, same list.
class Recommender {
public:
    virtual ~Recommender() = default;
    virtual std::string name() const = 0;
    virtual RankedList top_k(std::span<const std::int32_t> window, int top_k) const = 0;
};

class AgentRecommender : public Recommender {
public:
    explicit AgentRecommender(const TrainedAgent& agent) : agent_(agent) {}
    std::string name() const override { return "drqn"; }
    RankedList top_k(std::span<const std::int32_t> window, int top_k) const override;

private:
    const TrainedAgent& agent_;
};

class BaselineRecommender : public Recommender {
public:
    BaselineRecommender(const EmbeddingTable& table, BaselineConfig cfg)
        : table_(table), cfg_(cfg) {}
    std::string name() const override { return "similar-attributes"; }
    RankedList top_k(std::span<const std::int32_t> window, int top_k) const override;

private:
    const EmbeddingTable& table_;
    BaselineConfig cfg_;
};

/// Seeded random ranker. The permutation is keyed on (seed, window), not on
/// call order, so evaluation stays side-effect-free.
class RandomRecommender : public Recommender {
public:
    RandomRecommender(std::int32_t vocab_size, std::uint64_t seed)
        : vocab_size_(vocab_size), seed_(seed) {}
    std::string name() const override { return "random"; }
    RankedList top_k(std::span<const std::int32_t> window, int top_k) const override;

private:
    std::int32_t vocab_size_;
    std::uint64_t seed_;
};

struct EvalReport {
    std::string algorithm;
    int top_k = 0;
    std::uint64_t hits = 0;
    std::uint64_t steps = 0;
    double hit_rate = 0.0;
    std::uint64_t sessions_used = 0;
    std::uint64_t sessions_skipped = 0; // shorter than window+1 events
    std::uint64_t degenerate_steps = 0; // recommender fell back to id order
    std::uint64_t seed = 0;
    std::string test_set_hash;
    nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();
};

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::ordered_json& j);
void save_report(const std::string& path, const EvalReport& report);
EvalReport load_report(const std::string& path);

/// Micro-averaged Hit-Rate@K with teacher forcing: at every step t in [k, N]
/// of every usable session, query the recommender with the ground-truth
/// window and count a hit when the browsed attribute is in the list.
EvalReport hit_rate_at_k(const Recommender& rec, std::span<const SessionLog> sessions,
                         const AttributeVocab& vocab, int window, int top_k,
                         std::uint64_t seed = 0);

struct ProductCatalog {
    struct Product {
        std::string id;
        std::map<std::string, std::int32_t> attributes; // attribute type -> id
    };
    std::vector<Product> products;
};

/// JSON lines: {"product_id": ..., "attributes": {"<type>": "<attribute-name>"}}.
ProductCatalog load_catalog(const std::string& path, const AttributeVocab& vocab);

/// Scores each product as the sum of its attributes' scores (absent ids score
/// 0) and returns the top M product ids, ties broken by ascending product id.
std::vector<std::string> assemble_products(
    const ProductCatalog& catalog,
    const std::unordered_map<std::int32_t, double>& attribute_scores, int top_m);

struct Comparison {
    std::string text; // aligned table
    std::string csv;
};

/// Rows sorted by hit rate descending, with absolute/relative deltas against
/// the best row that is not the leader. Requires identical K and test-set
/// hashes across reports.
Comparison compare_reports(std::span<const EvalReport> reports);

} // namespace sessrl
