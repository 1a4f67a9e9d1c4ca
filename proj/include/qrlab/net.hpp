#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrlab/dataset.hpp"

// Minimal MLP engine with quantization-aware training.  The optimizer updates
// full-precision "shadow" parameters clipped to [-1,1]; every forward pass
// runs on their quantized images, and gradients flow back to the shadows
// unchanged (straight-through estimator).

namespace qrlab::nn {

enum class Activation { step, sigmoid, relu };
enum class OutputHead { softmax_xent, sigmoid_bce };

// Weight-grid convention.  `span`: 2^q uniformly spaced levels covering
// [-1,1] inclusive (1-bit degenerates to {-1,+1}).  `cell`: the alternative
// 2^q+1 grid with cell length 2^(1-q), selectable per run.
enum class GridMode { span, cell };

const char* to_string(Activation a);
const char* to_string(OutputHead h);
Activation activation_from_string(const std::string& s);

struct QuantScheme {
    int bits = 0;  // 0 = full precision
    GridMode mode = GridMode::span;

    bool full() const { return bits == 0; }
    long num_levels() const;
    /// Kernel parameter m = num_levels - 1 (grid is {(2k - m)/m, k = 0..m}).
    double grid_m() const;
    std::vector<double> levels() const;

    /// Nearest level, exact midpoints toward +inf.  Domain error if
    /// |w| > 1 + 1e-9.
    double quantize_value(double w) const;
    /// Batch quantization of pre-clipped parameters (no domain check).
    void quantize(const double* w, double* out, std::size_t n) const;
};

struct LayerParams {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
};

struct MlpNetwork {
    std::vector<std::size_t> layer_dims;  // e.g. {784, 100, 10}
    Activation hidden_activation = Activation::relu;
    OutputHead output_head = OutputHead::softmax_xent;
    double hidden_gain = 1.0;  // scales the first hidden pre-activation
    QuantScheme quant;
    std::vector<LayerParams> shadow;
    std::vector<LayerParams> quantized;
    std::uint64_t param_version = 0;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t num_layers() const { return shadow.size(); }
    std::size_t num_params() const;

    /// Re-quantizes shadow -> quantized and bumps param_version.
    void refresh_quantized();
};

/// Glorot-uniform initialized network (biases zero), quantized cache ready.
MlpNetwork make_network(const std::vector<std::size_t>& layer_dims, Activation activation,
                        OutputHead head, double hidden_gain, QuantScheme quant,
                        std::uint64_t init_seed);

/// Reusable forward/backward buffers for one network shape.  A forward pass
/// stamps the workspace with the network's param_version; backward refuses a
/// stale stamp.
struct Workspace {
    std::vector<std::vector<double>> z;      // pre-activations per layer
    std::vector<std::vector<double>> a;      // activations per layer
    std::vector<std::vector<double>> delta;  // backprop scratch
    std::vector<double> output;              // probabilities
    std::vector<double> dinput;              // input-gradient scratch
    std::uint64_t param_version = ~0ULL;

    void resize_for(const MlpNetwork& net);
};

/// Quantized forward pass; fills ws.z/ws.a/ws.output.
void forward(const MlpNetwork& net, const double* input, Workspace& ws);

/// Predicted class from ws.output after forward(): argmax for the softmax
/// head (lowest index on ties), p >= 0.5 for the sigmoid head.
int predict_from_output(const MlpNetwork& net, const Workspace& ws);

int predict(const MlpNetwork& net, const double* input, Workspace& ws);

/// Loss of the cached forward pass against `label`.
double loss_from_output(const MlpNetwork& net, const Workspace& ws, int label);

struct Gradients {
    std::vector<LayerParams> layer;  // same shapes as net.shadow; w/b hold grads
    std::vector<double> input;       // dL/du, filled when requested

    void resize_for(const MlpNetwork& net);
    void clear();
    void scale(double factor);
};

/// Backprop through the quantized parameters (straight-through to shadows),
/// ACCUMULATING into `grads`.  Requires a workspace from a matching forward
/// call; throws numeric_error on a stale cache.  When want_input_grad is set,
/// dL/du is accumulated into grads.input.
void backward(const MlpNetwork& net, const double* input, int label, Workspace& ws,
              Gradients& grads, bool want_input_grad = false);

struct TrainConfig {
    int max_epochs = 200;
    int batch_size = 64;
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int patience = 10;                  // epochs without val-accuracy improvement
    double validation_fraction = 0.10;  // used by callers carving the holdout
    std::uint64_t seed = 1;
};

struct AdamState {
    std::vector<LayerParams> m;
    std::vector<LayerParams> v;
    long t = 0;

    void resize_for(const MlpNetwork& net);
};

/// One Adam step on the shadow parameters (bias-corrected, then hard clip to
/// [-1,1]) followed by a quantized-cache refresh.
void adam_step(AdamState& state, MlpNetwork& net, const Gradients& grads,
               const TrainConfig& config);

struct EpochStats {
    int epoch;  // 1-based
    double train_loss;
    double val_accuracy;
};

struct History {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double best_val_accuracy = 0.0;
    int stopped_epoch = 0;
};

/// Mini-batch training with early stopping on validation accuracy.  The
/// returned network carries the shadow parameters of the best epoch.
History train(MlpNetwork& net, const data::DatasetSplit& train_split,
              const data::DatasetSplit& validation, const TrainConfig& config);

/// Fraction of correct predictions on the split.
double evaluate(const MlpNetwork& net, const data::DatasetSplit& split);

}  // namespace qrlab::nn
