#include "sessrl/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sessrl/errors.hpp"

namespace sessrl {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'L', 'Q', 'N', 'E', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor2 init_weight(int rows, int cols, Rng& rng) {
    Tensor2 w(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& x : w.data) x = rng.uniform(-bound, bound);
    return w;
}

void check_vec(const Vec& v, int expect, const char* what) {
    require_shape(static_cast<int>(v.size()) == expect, what);
}

} // namespace

LstmParams make_lstm(int input_dim, int hidden_dim, Rng& rng) {
    if (input_dim < 1 || hidden_dim < 1) throw ConfigError("LSTM dims must be >= 1");
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.w_in = init_weight(hidden_dim, input_dim, rng);
    p.w_forget = init_weight(hidden_dim, input_dim, rng);
    p.w_out = init_weight(hidden_dim, input_dim, rng);
    p.w_cell = init_weight(hidden_dim, input_dim, rng);
    p.u_in = init_weight(hidden_dim, hidden_dim, rng);
    p.u_forget = init_weight(hidden_dim, hidden_dim, rng);
    p.u_out = init_weight(hidden_dim, hidden_dim, rng);
    p.u_cell = init_weight(hidden_dim, hidden_dim, rng);
    p.b_in.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    p.b_forget.assign(static_cast<std::size_t>(hidden_dim), 1.0);
    p.b_out.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    p.b_cell.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    return p;
}

DenseParams make_dense(int in_dim, int out_dim, Activation act, Rng& rng) {
    if (in_dim < 1 || out_dim < 1) throw ConfigError("dense dims must be >= 1");
    DenseParams p;
    p.weight = init_weight(out_dim, in_dim, rng);
    p.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    p.activation = act;
    return p;
}

QNetworkParams make_qnetwork(int input_dim, int lstm_hidden, int dense_hidden,
                             int num_actions, Rng& rng) {
    QNetworkParams net;
    net.lstm = make_lstm(input_dim, lstm_hidden, rng);
    net.hidden1 = make_dense(lstm_hidden, dense_hidden, Activation::Rectifier, rng);
    net.hidden2 = make_dense(dense_hidden, dense_hidden, Activation::Rectifier, rng);
    net.output = make_dense(dense_hidden, num_actions, Activation::Identity, rng);
    return net;
}

namespace {

LstmParams zeros_like(const LstmParams& p) {
    LstmParams g;
    g.input_dim = p.input_dim;
    g.hidden_dim = p.hidden_dim;
    g.w_in = Tensor2(p.hidden_dim, p.input_dim);
    g.w_forget = Tensor2(p.hidden_dim, p.input_dim);
    g.w_out = Tensor2(p.hidden_dim, p.input_dim);
    g.w_cell = Tensor2(p.hidden_dim, p.input_dim);
    g.u_in = Tensor2(p.hidden_dim, p.hidden_dim);
    g.u_forget = Tensor2(p.hidden_dim, p.hidden_dim);
    g.u_out = Tensor2(p.hidden_dim, p.hidden_dim);
    g.u_cell = Tensor2(p.hidden_dim, p.hidden_dim);
    g.b_in.assign(static_cast<std::size_t>(p.hidden_dim), 0.0);
    g.b_forget.assign(static_cast<std::size_t>(p.hidden_dim), 0.0);
    g.b_out.assign(static_cast<std::size_t>(p.hidden_dim), 0.0);
    g.b_cell.assign(static_cast<std::size_t>(p.hidden_dim), 0.0);
    return g;
}

DenseParams zeros_like(const DenseParams& p) {
    DenseParams g;
    g.weight = Tensor2(p.out_dim(), p.in_dim());
    g.bias.assign(static_cast<std::size_t>(p.out_dim()), 0.0);
    g.activation = p.activation;
    return g;
}

} // namespace

GradientBundle make_gradients(const QNetworkParams& net) {
    GradientBundle g;
    g.lstm = zeros_like(net.lstm);
    g.hidden1 = zeros_like(net.hidden1);
    g.hidden2 = zeros_like(net.hidden2);
    g.output = zeros_like(net.output);
    return g;
}

void GradientBundle::zero() {
    for (Tensor2* t : {&lstm.w_in, &lstm.w_forget, &lstm.w_out, &lstm.w_cell, &lstm.u_in,
                       &lstm.u_forget, &lstm.u_out, &lstm.u_cell, &hidden1.weight,
                       &hidden2.weight, &output.weight}) {
        t->fill(0.0);
    }
    for (Vec* v : {&lstm.b_in, &lstm.b_forget, &lstm.b_out, &lstm.b_cell, &hidden1.bias,
                   &hidden2.bias, &output.bias}) {
        std::fill(v->begin(), v->end(), 0.0);
    }
}

Vec lstm_forward(const LstmParams& params, const std::vector<Vec>& inputs, LstmCache* cache) {
    if (inputs.empty()) throw ShapeError("lstm_forward: empty input sequence");
    const int h_dim = params.hidden_dim;
    const auto hs = static_cast<std::size_t>(h_dim);
    for (const auto& x : inputs) check_vec(x, params.input_dim, "lstm input dimension");

    if (cache) {
        cache->inputs = inputs;
        const auto k = inputs.size();
        for (auto* store : {&cache->gate_in, &cache->gate_forget, &cache->gate_out,
                            &cache->gate_cell, &cache->cell, &cache->cell_tanh,
                            &cache->hidden}) {
            store->assign(k, Vec(hs, 0.0));
        }
    }

    Vec h(hs, 0.0), c(hs, 0.0);
    Vec gi(hs), gf(hs), go(hs), gc(hs);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const double* x = inputs[t].data();
        matvec(params.w_in, x, gi.data());
        matvec(params.w_forget, x, gf.data());
        matvec(params.w_out, x, go.data());
        matvec(params.w_cell, x, gc.data());
        matvec_acc(params.u_in, h.data(), gi.data());
        matvec_acc(params.u_forget, h.data(), gf.data());
        matvec_acc(params.u_out, h.data(), go.data());
        matvec_acc(params.u_cell, h.data(), gc.data());
        for (int j = 0; j < h_dim; ++j) {
            const auto js = static_cast<std::size_t>(j);
            gi[js] = sigmoid(gi[js] + params.b_in[js]);
            gf[js] = sigmoid(gf[js] + params.b_forget[js]);
            go[js] = sigmoid(go[js] + params.b_out[js]);
            gc[js] = std::tanh(gc[js] + params.b_cell[js]);
            c[js] = gf[js] * c[js] + gi[js] * gc[js];
            h[js] = go[js] * std::tanh(c[js]);
        }
        if (cache) {
            cache->gate_in[t] = gi;
            cache->gate_forget[t] = gf;
            cache->gate_out[t] = go;
            cache->gate_cell[t] = gc;
            cache->cell[t] = c;
            for (int j = 0; j < h_dim; ++j) {
                cache->cell_tanh[t][static_cast<std::size_t>(j)] =
                    std::tanh(c[static_cast<std::size_t>(j)]);
            }
            cache->hidden[t] = h;
        }
    }
    return h;
}

std::vector<Vec> lstm_backward(const LstmParams& params, const LstmCache& cache,
                               const Vec& grad_final_hidden, LstmParams& grads) {
    const auto k = cache.inputs.size();
    if (k == 0 || cache.hidden.size() != k) {
        throw ShapeError("lstm_backward: cache does not match a forward call");
    }
    const int h_dim = params.hidden_dim;
    const auto hs = static_cast<std::size_t>(h_dim);
    check_vec(grad_final_hidden, h_dim, "lstm_backward upstream gradient");
    require_shape(grads.hidden_dim == h_dim && grads.input_dim == params.input_dim,
                  "lstm_backward gradient container");

    std::vector<Vec> input_grads(k, Vec(static_cast<std::size_t>(params.input_dim), 0.0));
    Vec dh = grad_final_hidden;
    Vec dc(hs, 0.0);
    Vec dpre_i(hs), dpre_f(hs), dpre_o(hs), dpre_g(hs);
    const Vec zero(hs, 0.0);

    for (std::size_t t = k; t-- > 0;) {
        const Vec& gi = cache.gate_in[t];
        const Vec& gf = cache.gate_forget[t];
        const Vec& go = cache.gate_out[t];
        const Vec& gc = cache.gate_cell[t];
        const Vec& tanh_c = cache.cell_tanh[t];
        const Vec& c_prev = (t == 0) ? zero : cache.cell[t - 1];
        const Vec& h_prev = (t == 0) ? zero : cache.hidden[t - 1];

        for (int j = 0; j < h_dim; ++j) {
            const auto js = static_cast<std::size_t>(j);
            // h = o * tanh(c)
            const double d_o = dh[js] * tanh_c[js];
            const double d_c = dh[js] * go[js] * (1.0 - tanh_c[js] * tanh_c[js]) + dc[js];
            // c = f * c_prev + i * g
            const double d_i = d_c * gc[js];
            const double d_f = d_c * c_prev[js];
            const double d_g = d_c * gi[js];
            dpre_i[js] = d_i * gi[js] * (1.0 - gi[js]);
            dpre_f[js] = d_f * gf[js] * (1.0 - gf[js]);
            dpre_o[js] = d_o * go[js] * (1.0 - go[js]);
            dpre_g[js] = d_g * (1.0 - gc[js] * gc[js]);
            dc[js] = d_c * gf[js]; // flows to c_{t-1}
        }

        const double* x = cache.inputs[t].data();
        outer_acc(grads.w_in, dpre_i.data(), x);
        outer_acc(grads.w_forget, dpre_f.data(), x);
        outer_acc(grads.w_out, dpre_o.data(), x);
        outer_acc(grads.w_cell, dpre_g.data(), x);
        outer_acc(grads.u_in, dpre_i.data(), h_prev.data());
        outer_acc(grads.u_forget, dpre_f.data(), h_prev.data());
        outer_acc(grads.u_out, dpre_o.data(), h_prev.data());
        outer_acc(grads.u_cell, dpre_g.data(), h_prev.data());
        axpy(1.0, dpre_i.data(), grads.b_in.data(), hs);
        axpy(1.0, dpre_f.data(), grads.b_forget.data(), hs);
        axpy(1.0, dpre_o.data(), grads.b_out.data(), hs);
        axpy(1.0, dpre_g.data(), grads.b_cell.data(), hs);

        double* dx = input_grads[t].data();
        matvec_t_acc(params.w_in, dpre_i.data(), dx);
        matvec_t_acc(params.w_forget, dpre_f.data(), dx);
        matvec_t_acc(params.w_out, dpre_o.data(), dx);
        matvec_t_acc(params.w_cell, dpre_g.data(), dx);

        std::fill(dh.begin(), dh.end(), 0.0);
        matvec_t_acc(params.u_in, dpre_i.data(), dh.data());
        matvec_t_acc(params.u_forget, dpre_f.data(), dh.data());
        matvec_t_acc(params.u_out, dpre_o.data(), dh.data());
        matvec_t_acc(params.u_cell, dpre_g.data(), dh.data());
    }
    return input_grads;
}

Vec dense_forward(const DenseParams& params, const Vec& x, DenseCache* cache) {
    check_vec(x, params.in_dim(), "dense input dimension");
    Vec y(static_cast<std::size_t>(params.out_dim()));
    matvec(params.weight, x.data(), y.data());
    for (int j = 0; j < params.out_dim(); ++j) {
        y[static_cast<std::size_t>(j)] += params.bias[static_cast<std::size_t>(j)];
    }
    if (cache) {
        cache->input = x;
        cache->pre = y;
    }
    if (params.activation == Activation::Rectifier) {
        for (double& v : y) v = v > 0.0 ? v : 0.0;
    }
    return y;
}

Vec dense_backward(const DenseParams& params, const DenseCache& cache, const Vec& grad_y,
                   DenseParams& grads) {
    check_vec(grad_y, params.out_dim(), "dense_backward upstream gradient");
    if (static_cast<int>(cache.input.size()) != params.in_dim()) {
        throw ShapeError("dense_backward: cache does not match a forward call");
    }
    require_shape(grads.weight.rows == params.out_dim() && grads.weight.cols == params.in_dim(),
                  "dense_backward gradient container");
    Vec dz = grad_y;
    if (params.activation == Activation::Rectifier) {
        for (int j = 0; j < params.out_dim(); ++j) {
            // subgradient at exactly 0 is 0
            if (!(cache.pre[static_cast<std::size_t>(j)] > 0.0)) {
                dz[static_cast<std::size_t>(j)] = 0.0;
            }
        }
    }
    outer_acc(grads.weight, dz.data(), cache.input.data());
    axpy(1.0, dz.data(), grads.bias.data(), dz.size());
    Vec dx(static_cast<std::size_t>(params.in_dim()), 0.0);
    matvec_t_acc(params.weight, dz.data(), dx.data());
    return dx;
}

Vec qnet_forward(const QNetworkParams& net, const std::vector<Vec>& inputs,
                 QForwardCache* cache) {
    const Vec h = lstm_forward(net.lstm, inputs, cache ? &cache->lstm : nullptr);
    const Vec a1 = dense_forward(net.hidden1, h, cache ? &cache->d1 : nullptr);
    const Vec a2 = dense_forward(net.hidden2, a1, cache ? &cache->d2 : nullptr);
    Vec q = dense_forward(net.output, a2, cache ? &cache->out : nullptr);
    if (cache) cache->q = q;
    return q;
}

void qnet_backward(const QNetworkParams& net, const QForwardCache& cache, int action,
                   double grad_q_action, GradientBundle& grads) {
    const int v = net.num_actions();
    if (action < 0 || action >= v) {
        throw BoundsError("qnet_backward: action " + std::to_string(action) + " outside [0, " +
                          std::to_string(v) + ")");
    }
    Vec dq(static_cast<std::size_t>(v), 0.0);
    dq[static_cast<std::size_t>(action)] = grad_q_action;
    const Vec da2 = dense_backward(net.output, cache.out, dq, grads.output);
    const Vec da1 = dense_backward(net.hidden2, cache.d2, da2, grads.hidden2);
    const Vec dh = dense_backward(net.hidden1, cache.d1, da1, grads.hidden1);
    lstm_backward(net.lstm, cache.lstm, dh, grads.lstm);
}

std::vector<SpanRef> param_spans(QNetworkParams& net) {
    std::vector<SpanRef> spans;
    spans.reserve(19);
    for (Tensor2* t : {&net.lstm.w_in, &net.lstm.w_forget, &net.lstm.w_out, &net.lstm.w_cell,
                       &net.lstm.u_in, &net.lstm.u_forget, &net.lstm.u_out, &net.lstm.u_cell}) {
        spans.push_back({t->data.data(), t->data.size()});
    }
    for (Vec* v : {&net.lstm.b_in, &net.lstm.b_forget, &net.lstm.b_out, &net.lstm.b_cell}) {
        spans.push_back({v->data(), v->size()});
    }
    for (DenseParams* d : {&net.hidden1, &net.hidden2, &net.output}) {
        spans.push_back({d->weight.data.data(), d->weight.data.size()});
        spans.push_back({d->bias.data(), d->bias.size()});
    }
    return spans;
}

std::vector<SpanRef> param_spans(GradientBundle& grads) {
    std::vector<SpanRef> spans;
    spans.reserve(19);
    for (Tensor2* t : {&grads.lstm.w_in, &grads.lstm.w_forget, &grads.lstm.w_out,
                       &grads.lstm.w_cell, &grads.lstm.u_in, &grads.lstm.u_forget,
                       &grads.lstm.u_out, &grads.lstm.u_cell}) {
        spans.push_back({t->data.data(), t->data.size()});
    }
    for (Vec* v : {&grads.lstm.b_in, &grads.lstm.b_forget, &grads.lstm.b_out,
                   &grads.lstm.b_cell}) {
        spans.push_back({v->data(), v->size()});
    }
    for (DenseParams* d : {&grads.hidden1, &grads.hidden2, &grads.output}) {
        spans.push_back({d->weight.data.data(), d->weight.data.size()});
        spans.push_back({d->bias.data(), d->bias.size()});
    }
    return spans;
}

void sgd_step(QNetworkParams& net, const GradientBundle& grads, double lr,
              std::optional<double> clip_norm) {
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
    auto& mutable_grads = const_cast<GradientBundle&>(grads);
    const auto g_spans = param_spans(mutable_grads);
    auto p_spans = param_spans(net);
    if (g_spans.size() != p_spans.size()) throw ShapeError("sgd_step: bundle mismatch");

    double sq_norm = 0.0;
    for (std::size_t s = 0; s < g_spans.size(); ++s) {
        if (g_spans[s].len != p_spans[s].len) throw ShapeError("sgd_step: bundle mismatch");
        const double* g = g_spans[s].ptr;
        for (std::size_t i = 0; i < g_spans[s].len; ++i) sq_norm += g[i] * g[i];
    }
    if (!std::isfinite(sq_norm)) {
        throw NumericalError("sgd_step: non-finite gradient; training halted");
    }
    double scale = lr;
    if (clip_norm) {
        if (!(*clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
        const double norm = std::sqrt(sq_norm);
        if (norm > *clip_norm) scale = lr * (*clip_norm / norm);
    }
    for (std::size_t s = 0; s < g_spans.size(); ++s) {
        const double* g = g_spans[s].ptr;
        double* p = p_spans[s].ptr;
        for (std::size_t i = 0; i < g_spans[s].len; ++i) p[i] -= scale * g[i];
    }
}

double td_loss(const QNetworkParams& net, const std::vector<Vec>& inputs, int action,
               double target) {
    const Vec q = qnet_forward(net, inputs);
    if (action < 0 || action >= static_cast<int>(q.size())) {
        throw BoundsError("td_loss: action outside the output range");
    }
    const double err = target - q[static_cast<std::size_t>(action)];
    return err * err;
}

double finite_difference_check(const QNetworkParams& net, const std::vector<Vec>& inputs,
                               int action, double target, double eps) {
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    QNetworkParams work = net;
    QForwardCache cache;
    GradientBundle analytic = make_gradients(net);
    const Vec q = qnet_forward(work, inputs, &cache);
    const double err = target - q[static_cast<std::size_t>(action)];
    qnet_backward(work, cache, action, -2.0 * err, analytic);

    const auto a_spans = param_spans(analytic);
    const auto p_spans = param_spans(work);
    double worst = 0.0;
    for (std::size_t s = 0; s < p_spans.size(); ++s) {
        for (std::size_t i = 0; i < p_spans[s].len; ++i) {
            double& theta = p_spans[s].ptr[i];
            const double saved = theta;
            theta = saved + eps;
            const double up = td_loss(work, inputs, action, target);
            theta = saved - eps;
            const double down = td_loss(work, inputs, action, target);
            theta = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic_g = a_spans[s].ptr[i];
            const double denom =
                std::max({std::abs(analytic_g), std::abs(numeric), 0.01});
            worst = std::max(worst, std::abs(analytic_g - numeric) / denom);
        }
    }
    return worst;
}

namespace {

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

} // namespace

void save_network(const std::string& path, const QNetworkParams& net, int window) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write network checkpoint: " + path);
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u32(out, 0); // reserved
    write_u64(out, static_cast<std::uint64_t>(net.input_dim()));
    write_u64(out, static_cast<std::uint64_t>(net.hidden_dim()));
    write_u64(out, static_cast<std::uint64_t>(net.hidden1.out_dim()));
    write_u64(out, static_cast<std::uint64_t>(net.num_actions()));
    write_u64(out, static_cast<std::uint64_t>(window));
    auto spans = param_spans(const_cast<QNetworkParams&>(net));
    for (const auto& span : spans) {
        for (std::size_t i = 0; i < span.len; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &span.ptr[i], 8);
            write_u64(out, bits);
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

QNetworkParams load_network(const std::string& path, int* window_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open network checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError(path + " is not a network checkpoint");
    }
    const auto version = read_u32(in);
    if (version != kVersion) {
        throw DataError(path + ": unsupported network checkpoint version " +
                        std::to_string(version));
    }
    read_u32(in); // reserved
    const auto input_dim = read_u64(in);
    const auto lstm_hidden = read_u64(in);
    const auto dense_hidden = read_u64(in);
    const auto actions = read_u64(in);
    const auto window = read_u64(in);
    constexpr std::uint64_t kDimLimit = 1ULL << 20;
    if (!in || input_dim < 1 || lstm_hidden < 1 || dense_hidden < 1 || actions < 1 ||
        window < 1 || input_dim > kDimLimit || lstm_hidden > kDimLimit ||
        dense_hidden > kDimLimit || actions > kDimLimit || window > kDimLimit) {
        throw DataError(path + ": corrupt network checkpoint header");
    }
    Rng rng(0);
    QNetworkParams net =
        make_qnetwork(static_cast<int>(input_dim), static_cast<int>(lstm_hidden),
                      static_cast<int>(dense_hidden), static_cast<int>(actions), rng);
    for (auto& span : param_spans(net)) {
        for (std::size_t i = 0; i < span.len; ++i) {
            const std::uint64_t bits = read_u64(in);
            std::memcpy(&span.ptr[i], &bits, 8);
        }
    }
    if (!in) throw DataError(path + ": truncated network checkpoint");
    if (window_out) *window_out = static_cast<int>(window);
    return net;
}

bool network_finite(const QNetworkParams& net) {
    auto spans = param_spans(const_cast<QNetworkParams&>(net));
    for (const auto& span : spans) {
        if (!all_finite(span.ptr, span.len)) return false;
    }
    return true;
}

} // namespace sessrl
