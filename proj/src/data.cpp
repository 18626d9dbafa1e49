#include "sessrl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sessrl/errors.hpp"
#include "sessrl/hashing.hpp"
#include "sessrl/rng.hpp"

namespace sessrl {

using nlohmann::ordered_json;

AttributeVocab AttributeVocab::from_names(std::vector<std::string> names) {
    if (names.empty()) throw DataError("vocabulary is empty");
    AttributeVocab vocab;
    vocab.names_ = std::move(names);
    for (std::size_t i = 0; i < vocab.names_.size(); ++i) {
        const std::string& name = vocab.names_[i];
        if (name.empty()) {
            throw DataError("vocabulary entry " + std::to_string(i) + " is empty");
        }
        if (name.find('\n') != std::string::npos) {
            throw DataError("vocabulary entry contains a newline: " + name);
        }
        auto [_, inserted] = vocab.index_.emplace(name, static_cast<std::int32_t>(i));
        if (!inserted) throw DataError("duplicate vocabulary entry: " + name);
    }
    return vocab;
}

const std::string& AttributeVocab::name(std::int32_t id) const {
    if (id < 0 || id >= size()) {
        throw BoundsError("attribute id " + std::to_string(id) + " outside [0, " +
                          std::to_string(size()) + ")");
    }
    return names_[static_cast<std::size_t>(id)];
}

std::optional<std::int32_t> AttributeVocab::id_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::string AttributeVocab::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& name : names_) {
        h = fnv1a64(name, h);
        h = fnv1a64("\n", h);
    }
    return hash_hex(h);
}

AttributeVocab load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary file: " + path);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        names.push_back(line);
    }
    if (names.size() < 2) {
        throw DataError("vocabulary file " + path + " has " + std::to_string(names.size()) +
                        " entries; at least 2 required");
    }
    return AttributeVocab::from_names(std::move(names));
}

void save_vocab(const std::string& path, const AttributeVocab& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary file: " + path);
    for (const auto& name : vocab.names()) out << name << '\n';
    if (!out) throw DataError("write failed: " + path);
}

AttributeVocab make_session_vocab(std::int32_t vocab_size) {
    if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(vocab_size));
    char buf[16];
    for (std::int32_t i = 0; i < vocab_size; ++i) {
        std::snprintf(buf, sizeof buf, "attr_%04d", i);
        names.emplace_back(buf);
    }
    return AttributeVocab::from_names(std::move(names));
}

namespace {

void validate_session(const SessionLog& session) {
    if (session.events.empty()) throw DataError("session " + session.id + " has no events");
}

SessionLog parse_session_line(const std::string& line, std::size_t line_no,
                              const AttributeVocab& vocab) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (!j.is_object() || !j.contains("id") || !j.contains("purchased") ||
        !j.contains("events")) {
        throw DataError(where + "record must be an object with id, purchased, events");
    }
    if (!j["id"].is_string()) throw DataError(where + "id must be a string");
    if (!j["purchased"].is_boolean()) throw DataError(where + "purchased must be a boolean");
    if (!j["events"].is_array() || j["events"].empty()) {
        throw DataError(where + "events must be a nonempty array");
    }
    SessionLog session;
    session.id = j["id"].get<std::string>();
    session.purchased = j["purchased"].get<bool>();
    session.events.reserve(j["events"].size());
    for (const auto& ev : j["events"]) {
        if (!ev.is_array() || ev.size() != 2 || !ev[0].is_string() || !ev[1].is_number()) {
            throw DataError(where + "each event must be [attribute-name, dwell-ms]");
        }
        const std::string name = ev[0].get<std::string>();
        const auto id = vocab.id_of(name);
        if (!id) {
            throw DataError(where + "vocabulary error: unknown attribute \"" + name + "\"");
        }
        const double dwell = ev[1].get<double>();
        if (!(dwell >= 0.0)) throw DataError(where + "dwell must be >= 0");
        session.events.push_back(SessionEvent{*id, dwell});
    }
    return session;
}

} // namespace

std::vector<SessionLog> load_sessions(const std::string& path, const AttributeVocab& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open session file: " + path);
    std::vector<SessionLog> sessions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        sessions.push_back(parse_session_line(line, line_no, vocab));
    }
    return sessions;
}

std::string session_to_json_line(const SessionLog& session, const AttributeVocab& vocab) {
    validate_session(session);
    ordered_json j;
    j["id"] = session.id;
    j["purchased"] = session.purchased;
    auto events = ordered_json::array();
    for (const auto& ev : session.events) {
        events.push_back(ordered_json::array({vocab.name(ev.attribute), ev.dwell_ms}));
    }
    j["events"] = std::move(events);
    return j.dump();
}

void save_sessions(const std::string& path, std::span<const SessionLog> sessions,
                   const AttributeVocab& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write session file: " + path);
    for (const auto& session : sessions) {
        out << session_to_json_line(session, vocab) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

std::string sessions_hash(std::span<const SessionLog> sessions, const AttributeVocab& vocab) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& session : sessions) {
        h = fnv1a64(session_to_json_line(session, vocab), h);
        h = fnv1a64("\n", h);
    }
    return hash_hex(h);
}

NormalizationStats fit_normalizer(std::span<const SessionLog> sessions, double percentile) {
    if (!(percentile > 0.0 && percentile <= 100.0)) {
        throw ConfigError("percentile must be in (0, 100]");
    }
    std::vector<double> dwells;
    for (const auto& session : sessions) {
        for (const auto& ev : session.events) dwells.push_back(ev.dwell_ms);
    }
    if (dwells.empty()) throw DataError("cannot fit dwell normalizer on an empty corpus");
    std::sort(dwells.begin(), dwells.end());
    // Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
    const auto n = dwells.size();
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
    rank = std::max<std::size_t>(rank, 1);
    const double cap = dwells[rank - 1];
    if (!(cap > 0.0)) {
        throw DataError("dwell normalizer cap is not positive; corpus dwells are degenerate");
    }
    return NormalizationStats{cap, percentile};
}

double normalize_dwell(double dwell_ms, const NormalizationStats& stats) {
    if (!(stats.cap > 0.0)) throw ConfigError("normalizer is not fitted");
    if (dwell_ms < 0.0) throw DataError("dwell must be >= 0");
    return std::min(dwell_ms, stats.cap) / stats.cap;
}

void validate_generator_config(const GeneratorConfig& cfg) {
    const auto v = cfg.vocab_size;
    if (v < 2) throw ConfigError("generator vocab_size must be >= 2");
    if (cfg.num_sessions < 0) throw ConfigError("num_sessions must be >= 0");
    if (cfg.min_length < 2 || cfg.max_length < cfg.min_length) {
        throw ConfigError("session_length range must satisfy 2 <= min <= max");
    }
    if (static_cast<std::int32_t>(cfg.transition_matrix.size()) != v) {
        throw ConfigError("transition_matrix must have vocab_size rows");
    }
    for (std::int32_t r = 0; r < v; ++r) {
        const auto& row = cfg.transition_matrix[static_cast<std::size_t>(r)];
        if (static_cast<std::int32_t>(row.size()) != v) {
            throw ConfigError("transition_matrix row " + std::to_string(r) +
                              " must have vocab_size entries");
        }
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) throw ConfigError("transition probabilities must be >= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError("transition_matrix row " + std::to_string(r) +
                              " sums to " + std::to_string(sum) + ", expected 1");
        }
    }
    if (static_cast<std::int32_t>(cfg.purchase_affinity.size()) != v) {
        throw ConfigError("purchase_affinity must have vocab_size entries");
    }
    for (double a : cfg.purchase_affinity) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("purchase affinities must be in [0, 1]");
    }
    if (static_cast<std::int32_t>(cfg.dwell_means.size()) != v) {
        throw ConfigError("dwell_means must have vocab_size entries");
    }
    for (double m : cfg.dwell_means) {
        if (!(m > 0.0)) throw ConfigError("dwell means must be positive");
    }
}

std::vector<SessionLog> generate_sessions(const GeneratorConfig& cfg) {
    validate_generator_config(cfg);
    const auto v = static_cast<std::size_t>(cfg.vocab_size);

    // Per-row cumulative weights for attribute sampling.
    std::vector<std::vector<double>> cdfs(v);
    for (std::size_t r = 0; r < v; ++r) {
        auto& cdf = cdfs[r];
        cdf.resize(v);
        double acc = 0.0;
        for (std::size_t c = 0; c < v; ++c) {
            acc += cfg.transition_matrix[r][c];
            cdf[c] = acc;
        }
    }

    Rng rng(cfg.seed);
    std::vector<SessionLog> sessions;
    sessions.reserve(static_cast<std::size_t>(cfg.num_sessions));
    char idbuf[24];
    for (std::int64_t s = 0; s < cfg.num_sessions; ++s) {
        SessionLog session;
        std::snprintf(idbuf, sizeof idbuf, "s%07lld", static_cast<long long>(s));
        session.id = idbuf;
        const auto span_len = static_cast<std::uint64_t>(cfg.max_length - cfg.min_length + 1);
        const int length = cfg.min_length + static_cast<int>(rng.below(span_len));
        session.events.reserve(static_cast<std::size_t>(length));
        std::int32_t attr = static_cast<std::int32_t>(rng.below(v));
        double affinity_sum = 0.0;
        for (int n = 0; n < length; ++n) {
            if (n > 0) {
                attr = static_cast<std::int32_t>(
                    rng.sample_cdf(cdfs[static_cast<std::size_t>(attr)]));
            }
            const double dwell = rng.exponential(cfg.dwell_means[static_cast<std::size_t>(attr)]);
            session.events.push_back(SessionEvent{attr, dwell});
            affinity_sum += cfg.purchase_affinity[static_cast<std::size_t>(attr)];
        }
        session.purchased = rng.bernoulli(affinity_sum / length);
        sessions.push_back(std::move(session));
    }
    return sessions;
}

GeneratorConfig make_planted_generator(const PlantedConfig& cfg) {
    const auto v = cfg.vocab_size;
    if (v < 2) throw ConfigError("vocab_size must be >= 2");
    if (cfg.clusters < 1 || v % cfg.clusters != 0) {
        throw ConfigError("vocab_size must be a positive multiple of clusters");
    }
    const std::int32_t members = v / cfg.clusters;
    if (cfg.successors_per_attribute < 1 || cfg.successors_per_attribute >= members) {
        throw ConfigError("successors_per_attribute must be in [1, cluster size)");
    }
    if (!(cfg.structured_mass > 0.0 && cfg.structured_mass < 1.0)) {
        throw ConfigError("structured_mass must be in (0, 1)");
    }
    if (!(cfg.successor_decay > 0.0 && cfg.successor_decay <= 1.0)) {
        throw ConfigError("successor_decay must be in (0, 1]");
    }
    if (!(cfg.dwell_mean_lo > 0.0 && cfg.dwell_mean_hi >= cfg.dwell_mean_lo)) {
        throw ConfigError("dwell mean range must be positive and ordered");
    }
    if (!(cfg.affinity_lo >= 0.0 && cfg.affinity_hi <= 1.0 &&
          cfg.affinity_lo <= cfg.affinity_hi)) {
        throw ConfigError("affinity range must be inside [0, 1]");
    }

    GeneratorConfig out;
    out.vocab_size = v;
    out.num_sessions = cfg.num_sessions;
    out.seed = cfg.seed;
    out.min_length = cfg.min_length;
    out.max_length = cfg.max_length;

    Rng rng(derive_seed(cfg.seed, "planted-structure"));
    out.transition_matrix.assign(static_cast<std::size_t>(v), std::vector<double>(v, 0.0));
    const double noise = (1.0 - cfg.structured_mass) / v;
    for (std::int32_t i = 0; i < v; ++i) {
        auto& row = out.transition_matrix[static_cast<std::size_t>(i)];
        const std::int32_t base = (i / members) * members;
        // Draw the successor set: distinct cluster members other than i.
        std::vector<std::int32_t> pool;
        pool.reserve(static_cast<std::size_t>(members - 1));
        for (std::int32_t m = 0; m < members; ++m) {
            if (base + m != i) pool.push_back(base + m);
        }
        rng.shuffle(pool);
        double weight = 1.0, weight_sum = 0.0;
        std::vector<double> weights(static_cast<std::size_t>(cfg.successors_per_attribute));
        for (int t = 0; t < cfg.successors_per_attribute; ++t) {
            weights[static_cast<std::size_t>(t)] = weight;
            weight_sum += weight;
            weight *= cfg.successor_decay;
        }
        for (std::int32_t c = 0; c < v; ++c) row[static_cast<std::size_t>(c)] = noise;
        for (int t = 0; t < cfg.successors_per_attribute; ++t) {
            row[static_cast<std::size_t>(pool[static_cast<std::size_t>(t)])] +=
                cfg.structured_mass * weights[static_cast<std::size_t>(t)] / weight_sum;
        }
        double sum = 0.0;
        for (double p : row) sum += p;
        for (double& p : row) p /= sum;
    }

    out.dwell_means.resize(static_cast<std::size_t>(v));
    for (std::int32_t i = 0; i < v; ++i) {
        out.dwell_means[static_cast<std::size_t>(i)] =
            rng.uniform(cfg.dwell_mean_lo, cfg.dwell_mean_hi);
    }
    out.purchase_affinity.resize(static_cast<std::size_t>(v));
    for (std::int32_t i = 0; i < v; ++i) {
        const double frac = cfg.clusters == 1
                                ? 0.0
                                : static_cast<double>(i / members) / (cfg.clusters - 1);
        out.purchase_affinity[static_cast<std::size_t>(i)] =
            cfg.affinity_lo + (cfg.affinity_hi - cfg.affinity_lo) * frac;
    }
    validate_generator_config(out);
    return out;
}

std::pair<std::vector<SessionLog>, std::vector<SessionLog>>
split_sessions(std::span<const SessionLog> sessions, double train_ratio) {
    if (!(train_ratio >= 0.0 && train_ratio <= 1.0)) {
        throw ConfigError("split ratio must be in [0, 1]");
    }
    std::vector<SessionLog> train, test;
    for (const auto& session : sessions) {
        const double u = static_cast<double>(fnv1a64(session.id) >> 11) * 0x1.0p-53;
        (u < train_ratio ? train : test).push_back(session);
    }
    return {std::move(train), std::move(test)};
}

std::vector<Transition> sessions_to_transitions(const SessionLog& session, int k,
                                                const NormalizationStats& stats) {
    if (k < 1) throw ConfigError("window k must be >= 1");
    validate_session(session);
    std::vector<Transition> transitions;
    const int last = session.last_index();
    if (last < k) return transitions; // shorter than k+1 events: skipped, not padded
    transitions.reserve(static_cast<std::size_t>(last - k + 1));
    for (int n = k; n <= last; ++n) {
        Transition t;
        t.state.reserve(static_cast<std::size_t>(k));
        t.next_state.reserve(static_cast<std::size_t>(k));
        for (int j = n - k; j < n; ++j) {
            t.state.push_back(session.events[static_cast<std::size_t>(j)].attribute);
        }
        for (int j = n - k + 1; j <= n; ++j) {
            t.next_state.push_back(session.events[static_cast<std::size_t>(j)].attribute);
        }
        t.action = session.events[static_cast<std::size_t>(n)].attribute;
        t.reward = normalize_dwell(session.events[static_cast<std::size_t>(n)].dwell_ms, stats);
        t.terminal = (n == last);
        t.purchased = t.terminal && session.purchased;
        transitions.push_back(std::move(t));
    }
    return transitions;
}

} // namespace sessrl
