#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sessrl/rng.hpp"
#include "sessrl/tensor.hpp"

namespace sessrl {

/// LSTM cell parameters. Gate order everywhere in this file: input, forget,
/// output, cell candidate.
struct LstmParams {
    int input_dim = 0;
    int hidden_dim = 0;
    Tensor2 w_in, w_forget, w_out, w_cell; // hidden_dim x input_dim
    Tensor2 u_in, u_forget, u_out, u_cell; // hidden_dim x hidden_dim
    Vec b_in, b_forget, b_out, b_cell;     // hidden_dim
};

enum class Activation { Rectifier, Identity };

struct DenseParams {
    Tensor2 weight; // out x in
    Vec bias;       // out
    Activation activation = Activation::Identity;

    int in_dim() const { return weight.cols; }
    int out_dim() const { return weight.rows; }
};

/// Full Q-network: LSTM state encoder, two rectifier layers, linear output
/// head with one unit per attribute.
struct QNetworkParams {
    LstmParams lstm;
    DenseParams hidden1, hidden2, output;

    int input_dim() const { return lstm.input_dim; }
    int hidden_dim() const { return lstm.hidden_dim; }
    int num_actions() const { return output.out_dim(); }
};

/// dL/dtheta, shape-congruent with QNetworkParams.
struct GradientBundle {
    LstmParams lstm;
    DenseParams hidden1, hidden2, output;

    void zero();
};

/// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] weights, zero biases except the
/// forget-gate bias, which starts at 1 to keep early cell-state gradients alive.
LstmParams make_lstm(int input_dim, int hidden_dim, Rng& rng);
DenseParams make_dense(int in_dim, int out_dim, Activation act, Rng& rng);
QNetworkParams make_qnetwork(int input_dim, int lstm_hidden, int dense_hidden,
                             int num_actions, Rng& rng);
GradientBundle make_gradients(const QNetworkParams& net);

/// Per-step activations retained for backpropagation through time.
struct LstmCache {
    std::vector<Vec> inputs;                          // k x input_dim
    std::vector<Vec> gate_in, gate_forget, gate_out;  // k x hidden_dim
    std::vector<Vec> gate_cell;                       // tanh candidates
    std::vector<Vec> cell, cell_tanh, hidden;         // k x hidden_dim
};

struct DenseCache {
    Vec input;
    Vec pre; // pre-activation
};

struct QForwardCache {
    LstmCache lstm;
    DenseCache d1, d2, out;
    Vec q;
};

/// Runs the recurrence over the input sequence from zero initial state and
/// returns the final hidden vector. Pass a cache to enable a backward pass.
Vec lstm_forward(const LstmParams& params, const std::vector<Vec>& inputs,
                 LstmCache* cache = nullptr);

/// Reverse-mode accumulation over the cached steps. Gradients of the final
/// hidden state are accumulated into `grads`; returns gradients w.r.t. the
/// inputs (same shapes as the forward inputs).
std::vector<Vec> lstm_backward(const LstmParams& params, const LstmCache& cache,
                               const Vec& grad_final_hidden, LstmParams& grads);

Vec dense_forward(const DenseParams& params, const Vec& x, DenseCache* cache = nullptr);

/// Accumulates into `grads`; returns grad w.r.t. the layer input. The
/// rectifier subgradient at exactly 0 is 0.
Vec dense_backward(const DenseParams& params, const DenseCache& cache,
                   const Vec& grad_y, DenseParams& grads);

/// Q-values for one window of k input vectors.
Vec qnet_forward(const QNetworkParams& net, const std::vector<Vec>& inputs,
                 QForwardCache* cache = nullptr);

/// Backward of a scalar loss that touches only output unit `action` with
/// upstream gradient `grad_q_action`. Accumulates into `grads`.
void qnet_backward(const QNetworkParams& net, const QForwardCache& cache, int action,
                   double grad_q_action, GradientBundle& grads);

/// theta <- theta - lr * grad, after an optional global-norm clip at
/// `clip_norm`. Throws NumericalError when any gradient entry is non-finite.
void sgd_step(QNetworkParams& net, const GradientBundle& grads, double lr,
              std::optional<double> clip_norm = std::nullopt);

/// Squared TD error (target - q[action])^2 for one window; the quantity whose
/// gradient the training step follows.
double td_loss(const QNetworkParams& net, const std::vector<Vec>& inputs, int action,
               double target);

/// Perturbs every parameter by +/-eps, compares the central difference of the
/// TD loss against the analytic gradient, and returns the largest relative
/// error, using |a-n| / max(|a|, |n|, 0.01) so near-zero entries are judged on
/// an absolute scale where central differences bottom out.
double finite_difference_check(const QNetworkParams& net, const std::vector<Vec>& inputs,
                               int action, double target, double eps = 1e-5);

/// Versioned binary checkpoint: magic, version, dims (input, hidden, dense,
/// actions, window), then every tensor in declaration order, little-endian
/// 64-bit floats. The loader rejects magic/version/dimension mismatches.
void save_network(const std::string& path, const QNetworkParams& net, int window);
QNetworkParams load_network(const std::string& path, int* window_out = nullptr);

/// Flat views over all parameters in declaration order; the shared ordering
/// behind sgd_step, clipping, checkpoints, and the finite-difference sweep.
struct SpanRef {
    double* ptr;
    std::size_t len;
};
std::vector<SpanRef> param_spans(QNetworkParams& net);
std::vector<SpanRef> param_spans(GradientBundle& grads);

bool network_finite(const QNetworkParams& net);

} // namespace sessrl
