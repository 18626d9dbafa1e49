#include "sessrl/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sessrl/errors.hpp"
#include "sessrl/hashing.hpp"
#include "sessrl/rng.hpp"

namespace sessrl {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'L', 'E', 'M', 'B', 'E', 'D'};
constexpr std::uint32_t kVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) {
    const std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

Vec EmbeddingTable::lookup(std::int32_t id) const {
    const auto span = row_span(id);
    return Vec(span.begin(), span.end());
}

std::span<const double> EmbeddingTable::row_span(std::int32_t id) const {
    if (id < 0 || id >= size()) {
        throw BoundsError("embedding lookup id " + std::to_string(id) + " outside [0, " +
                          std::to_string(size()) + ")");
    }
    return {vectors.row(id), static_cast<std::size_t>(dim)};
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw ShapeError("cosine_similarity: dimension " + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()));
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

EmbeddingTable train_embeddings(std::span<const SessionLog> sessions,
                                const AttributeVocab& vocab, const SkipGramConfig& cfg) {
    if (vocab.size() < 2) {
        throw ConfigError("embedding training needs a vocabulary of at least 2 attributes");
    }
    if (sessions.empty()) throw DataError("embedding training corpus is empty");
    if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 1 || cfg.epochs < 1) {
        throw ConfigError("skip-gram config requires dim, window, negatives, epochs >= 1");
    }
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");

    const auto v = vocab.size();

    // Unigram^0.75 cumulative table for negative sampling.
    std::vector<double> counts(static_cast<std::size_t>(v), 0.0);
    std::size_t pair_positions = 0;
    for (const auto& session : sessions) {
        for (const auto& ev : session.events) {
            counts[static_cast<std::size_t>(ev.attribute)] += 1.0;
        }
        if (session.events.size() >= 2) pair_positions += session.events.size();
    }
    if (pair_positions == 0) {
        throw DataError("embedding corpus has no co-occurring events to train on");
    }
    std::vector<double> neg_cdf(static_cast<std::size_t>(v));
    double acc = 0.0;
    for (std::int32_t i = 0; i < v; ++i) {
        acc += std::pow(counts[static_cast<std::size_t>(i)], 0.75);
        neg_cdf[static_cast<std::size_t>(i)] = acc;
    }
    if (!(acc > 0.0)) throw DataError("embedding corpus is empty");

    EmbeddingTable table;
    table.dim = cfg.dim;
    table.vectors = Tensor2(v, cfg.dim);
    table.context_vectors = Tensor2(v, cfg.dim);
    Rng rng(cfg.seed);
    for (std::int32_t r = 0; r < v; ++r) {
        double* row = table.vectors.row(r);
        for (int c = 0; c < cfg.dim; ++c) {
            row[c] = rng.uniform(-0.5, 0.5) / cfg.dim;
        }
    }

    const double lr = cfg.learning_rate;
    Vec input_grad(static_cast<std::size_t>(cfg.dim));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& session : sessions) {
            const auto len = static_cast<int>(session.events.size());
            for (int center = 0; center < len; ++center) {
                const auto center_id = session.events[static_cast<std::size_t>(center)].attribute;
                double* center_vec = table.vectors.row(center_id);
                const int lo = std::max(0, center - cfg.window);
                const int hi = std::min(len - 1, center + cfg.window);
                for (int ctx = lo; ctx <= hi; ++ctx) {
                    if (ctx == center) continue;
                    const auto context_id =
                        session.events[static_cast<std::size_t>(ctx)].attribute;
                    std::fill(input_grad.begin(), input_grad.end(), 0.0);
                    // Positive pair plus `negatives` draws from unigram^0.75.
                    for (int sample = 0; sample <= cfg.negatives; ++sample) {
                        std::int32_t target;
                        double label;
                        if (sample == 0) {
                            target = context_id;
                            label = 1.0;
                        } else {
                            target = static_cast<std::int32_t>(rng.sample_cdf(neg_cdf));
                            if (target == context_id) continue;
                            label = 0.0;
                        }
                        double* target_vec = table.context_vectors.row(target);
                        double dot = 0.0;
                        for (int c = 0; c < cfg.dim; ++c) dot += center_vec[c] * target_vec[c];
                        const double g = lr * (label - sigmoid(dot));
                        for (int c = 0; c < cfg.dim; ++c) {
                            input_grad[static_cast<std::size_t>(c)] += g * target_vec[c];
                            target_vec[c] += g * center_vec[c];
                        }
                    }
                    for (int c = 0; c < cfg.dim; ++c) {
                        center_vec[c] += input_grad[static_cast<std::size_t>(c)];
                    }
                }
            }
        }
        if (!all_finite(table.vectors) || !all_finite(table.context_vectors)) {
            throw NumericalError("embedding training produced a non-finite value in epoch " +
                                 std::to_string(epoch));
        }
    }
    return table;
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding checkpoint: " + path);
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u32(out, 0); // reserved
    write_u64(out, static_cast<std::uint64_t>(table.size()));
    write_u64(out, static_cast<std::uint64_t>(table.dim));
    for (double x : table.vectors.data) write_f64(out, x);
    if (!out) throw DataError("write failed: " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embedding checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError(path + " is not an embedding checkpoint");
    }
    const auto version = read_u32(in);
    if (version != kVersion) {
        throw DataError(path + ": unsupported embedding checkpoint version " +
                        std::to_string(version));
    }
    read_u32(in); // reserved
    const auto v = read_u64(in);
    const auto dim = read_u64(in);
    if (!in || v < 1 || dim < 1 || v > (1ULL << 31) || dim > (1ULL << 20)) {
        throw DataError(path + ": corrupt embedding checkpoint header");
    }
    EmbeddingTable table;
    table.dim = static_cast<std::int32_t>(dim);
    table.vectors = Tensor2(static_cast<int>(v), static_cast<int>(dim));
    table.context_vectors = Tensor2(static_cast<int>(v), static_cast<int>(dim));
    for (double& x : table.vectors.data) x = read_f64(in);
    if (!in) throw DataError(path + ": truncated embedding checkpoint");
    return table;
}

void export_embeddings_text(const std::string& path, const EmbeddingTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding text export: " + path);
    out.precision(17);
    for (std::int32_t r = 0; r < table.size(); ++r) {
        const double* row = table.vectors.row(r);
        for (int c = 0; c < table.dim; ++c) {
            if (c > 0) out << ' ';
            out << row[c];
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

std::string embedding_hash(const EmbeddingTable& table) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const std::int32_t dims[2] = {table.size(), table.dim};
    h = fnv1a64(dims, sizeof dims, h);
    h = fnv1a64(table.vectors.data.data(), table.vectors.data.size() * sizeof(double), h);
    return hash_hex(h);
}

} // namespace sessrl
