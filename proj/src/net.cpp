#include "qrlab/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qrlab/errors.hpp"
#include "qrlab/kernels.hpp"
#include "qrlab/rng.hpp"

namespace qrlab::nn {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::step: return "step";
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
    }
    return "?";
}

const char* to_string(OutputHead h) {
    return h == OutputHead::softmax_xent ? "softmax_xent" : "sigmoid_bce";
}

Activation activation_from_string(const std::string& s) {
    if (s == "step") return Activation::step;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "relu") return Activation::relu;
    throw data_error("unknown activation '" + s + "'");
}

long QuantScheme::num_levels() const {
    if (full()) return 0;
    if (bits < 1 || bits > 30) throw std::domain_error("QuantScheme: bits must be in [1,30]");
    return mode == GridMode::span ? (1L << bits) : (1L << bits) + 1;
}

double QuantScheme::grid_m() const { return static_cast<double>(num_levels() - 1); }

std::vector<double> QuantScheme::levels() const {
    std::vector<double> out;
    if (full()) return out;
    const double m = grid_m();
    out.reserve(num_levels());
    for (long k = 0; k < num_levels(); ++k) out.push_back((2.0 * k - m) / m);
    return out;
}

double QuantScheme::quantize_value(double w) const {
    if (std::abs(w) > 1.0 + 1e-9)
        throw std::domain_error("quantize: |w| > 1 (" + std::to_string(w) + ")");
    if (full()) return w;
    double out;
    kern::quantize(&w, &out, 1, grid_m());
    return out;
}

void QuantScheme::quantize(const double* w, double* out, std::size_t n) const {
    if (full()) {
        std::copy_n(w, n, out);
        return;
    }
    kern::quantize(w, out, n, grid_m());
}

std::size_t MlpNetwork::num_params() const {
    std::size_t total = 0;
    for (const auto& l : shadow) total += l.w.size() + l.b.size();
    return total;
}

void MlpNetwork::refresh_quantized() {
    for (std::size_t l = 0; l < shadow.size(); ++l) {
        quant.quantize(shadow[l].w.data(), quantized[l].w.data(), shadow[l].w.size());
        quant.quantize(shadow[l].b.data(), quantized[l].b.data(), shadow[l].b.size());
    }
    ++param_version;
}

MlpNetwork make_network(const std::vector<std::size_t>& layer_dims, Activation activation,
                        OutputHead head, double hidden_gain, QuantScheme quant,
                        std::uint64_t init_seed) {
    if (layer_dims.size() < 2) throw data_error("make_network: need at least input and output dims");
    for (std::size_t d : layer_dims)
        if (d == 0) throw data_error("make_network: zero layer dimension");
    if (head == OutputHead::sigmoid_bce && layer_dims.back() != 1)
        throw data_error("make_network: sigmoid_bce head requires a single output");

    MlpNetwork net;
    net.layer_dims = layer_dims;
    net.hidden_activation = activation;
    net.output_head = head;
    net.hidden_gain = hidden_gain;
    net.quant = quant;

    SplitMix64 rng(init_seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        LayerParams p;
        p.in = layer_dims[l];
        p.out = layer_dims[l + 1];
        p.w.resize(p.in * p.out);
        p.b.assign(p.out, 0.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(p.in + p.out));
        for (double& w : p.w) w = rng.uniform(-limit, limit);
        net.shadow.push_back(std::move(p));
    }
    net.quantized = net.shadow;  // shapes; values overwritten below
    net.refresh_quantized();
    return net;
}

void Workspace::resize_for(const MlpNetwork& net) {
    const std::size_t layers = net.num_layers();
    z.resize(layers);
    a.resize(layers);
    delta.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        z[l].resize(net.shadow[l].out);
        a[l].resize(net.shadow[l].out);
        delta[l].resize(net.shadow[l].out);
    }
    output.resize(net.output_dim());
    dinput.resize(net.input_dim());
    param_version = ~0ULL;
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void apply_activation(Activation act, const double* z, double* a, std::size_t n) {
    switch (act) {
        case Activation::relu: kern::relu(z, a, n); return;
        case Activation::step: kern::step01(z, a, n); return;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < n; ++i) a[i] = sigmoid(z[i]);
            return;
    }
}

// Derivative used on the backward pass, evaluated from cached z/a.  The step
// activation uses a unit-steepness sigmoid surrogate.
inline double activation_derivative(Activation act, double z, double a) {
    switch (act) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: return a * (1.0 - a);
        case Activation::step: {
            double s = sigmoid(z);
            return s * (1.0 - s);
        }
    }
    return 0.0;
}

void softmax(const double* z, double* p, std::size_t n) {
    double zmax = z[0];
    for (std::size_t i = 1; i < n; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(z[i] - zmax);
        sum += p[i];
    }
    for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
}

}  // namespace

void forward(const MlpNetwork& net, const double* input, Workspace& ws) {
    if (ws.z.size() != net.num_layers()) ws.resize_for(net);
    const std::size_t layers = net.num_layers();
    const double* activ = input;
    for (std::size_t l = 0; l < layers; ++l) {
        const LayerParams& p = net.quantized[l];
        kern::matvec(p.w.data(), activ, p.b.data(), ws.z[l].data(), p.out, p.in);
        if (l == 0 && layers >= 2 && net.hidden_gain != 1.0)
            for (double& v : ws.z[l]) v *= net.hidden_gain;
        if (l + 1 < layers) {
            apply_activation(net.hidden_activation, ws.z[l].data(), ws.a[l].data(), p.out);
            activ = ws.a[l].data();
        }
    }
    const std::size_t out_dim = net.output_dim();
    const double* logits = ws.z[layers - 1].data();
    if (net.output_head == OutputHead::softmax_xent) {
        softmax(logits, ws.output.data(), out_dim);
    } else {
        ws.output[0] = sigmoid(logits[0]);
    }
    ws.param_version = net.param_version;
}

int predict_from_output(const MlpNetwork& net, const Workspace& ws) {
    if (net.output_head == OutputHead::sigmoid_bce) return ws.output[0] >= 0.5 ? 1 : 0;
    int best = 0;
    for (std::size_t i = 1; i < ws.output.size(); ++i)
        if (ws.output[i] > ws.output[best]) best = static_cast<int>(i);
    return best;
}

int predict(const MlpNetwork& net, const double* input, Workspace& ws) {
    forward(net, input, ws);
    return predict_from_output(net, ws);
}

double loss_from_output(const MlpNetwork& net, const Workspace& ws, int label) {
    if (net.output_head == OutputHead::softmax_xent) {
        double p = ws.output[static_cast<std::size_t>(label)];
        return -std::log(std::max(p, 1e-300));
    }
    // Stable BCE from the cached logit.
    const double z = ws.z.back()[0];
    const double y = static_cast<double>(label);
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

void Gradients::resize_for(const MlpNetwork& net) {
    layer.resize(net.num_layers());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        layer[l].in = net.shadow[l].in;
        layer[l].out = net.shadow[l].out;
        layer[l].w.assign(net.shadow[l].w.size(), 0.0);
        layer[l].b.assign(net.shadow[l].b.size(), 0.0);
    }
    input.assign(net.input_dim(), 0.0);
}

void Gradients::clear() {
    for (auto& l : layer) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    std::fill(input.begin(), input.end(), 0.0);
}

void Gradients::scale(double factor) {
    for (auto& l : layer) {
        for (double& v : l.w) v *= factor;
        for (double& v : l.b) v *= factor;
    }
    for (double& v : input) v *= factor;
}

void backward(const MlpNetwork& net, const double* input, int label, Workspace& ws,
              Gradients& grads, bool want_input_grad) {
    if (ws.param_version != net.param_version)
        throw numeric_error("backward: stale forward cache (parameters changed)");
    if (grads.layer.size() != net.num_layers()) grads.resize_for(net);

    const std::size_t layers = net.num_layers();
    const std::size_t out_dim = net.output_dim();

    // Output delta = dL/d(logits).  The label component is computed as the
    // complement of the other probabilities: p - 1 underflows to exactly 0
    // for saturated-confident predictions, which would zero the input
    // gradient and silently mask FGSM.
    std::vector<double>& dout = ws.delta[layers - 1];
    if (net.output_head == OutputHead::softmax_xent) {
        double others = 0.0;
        for (std::size_t i = 0; i < out_dim; ++i) {
            dout[i] = ws.output[i];
            if (i != static_cast<std::size_t>(label)) others += ws.output[i];
        }
        dout[static_cast<std::size_t>(label)] = -others;
    } else {
        const double z = ws.z[layers - 1][0];
        dout[0] = label == 1 ? -sigmoid(-z) : sigmoid(z);
    }

    for (std::size_t l = layers; l-- > 0;) {
        std::vector<double>& d = ws.delta[l];
        // Gain on the first hidden pre-activation scales its raw-affine delta.
        if (l == 0 && layers >= 2 && net.hidden_gain != 1.0)
            for (double& v : d) v *= net.hidden_gain;
        const double* below = l == 0 ? input : ws.a[l - 1].data();
        kern::rank1_acc(grads.layer[l].w.data(), d.data(), below, net.shadow[l].out,
                        net.shadow[l].in);
        for (std::size_t i = 0; i < net.shadow[l].out; ++i) grads.layer[l].b[i] += d[i];
        if (l > 0) {
            std::vector<double>& dprev = ws.delta[l - 1];
            kern::matvec_t(net.quantized[l].w.data(), d.data(), dprev.data(),
                           net.shadow[l].out, net.shadow[l].in);
            for (std::size_t i = 0; i < dprev.size(); ++i)
                dprev[i] *= activation_derivative(net.hidden_activation, ws.z[l - 1][i],
                                                  ws.a[l - 1][i]);
        } else if (want_input_grad) {
            kern::matvec_t(net.quantized[0].w.data(), d.data(), ws.dinput.data(),
                           net.shadow[0].out, net.shadow[0].in);
            for (std::size_t i = 0; i < ws.dinput.size(); ++i) grads.input[i] += ws.dinput[i];
        }
    }
}

void AdamState::resize_for(const MlpNetwork& net) {
    m.resize(net.num_layers());
    v.resize(net.num_layers());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        m[l].in = v[l].in = net.shadow[l].in;
        m[l].out = v[l].out = net.shadow[l].out;
        m[l].w.assign(net.shadow[l].w.size(), 0.0);
        m[l].b.assign(net.shadow[l].b.size(), 0.0);
        v[l].w.assign(net.shadow[l].w.size(), 0.0);
        v[l].b.assign(net.shadow[l].b.size(), 0.0);
    }
    t = 0;
}

void adam_step(AdamState& state, MlpNetwork& net, const Gradients& grads,
               const TrainConfig& config) {
    if (state.m.size() != net.num_layers()) state.resize_for(net);
    ++state.t;
    const double c1 = 1.0 / (1.0 - std::pow(config.beta1, static_cast<double>(state.t)));
    const double c2 = 1.0 / (1.0 - std::pow(config.beta2, static_cast<double>(state.t)));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        kern::adam_update(net.shadow[l].w.data(), state.m[l].w.data(), state.v[l].w.data(),
                          grads.layer[l].w.data(), net.shadow[l].w.size(), config.alpha,
                          config.beta1, config.beta2, config.epsilon, c1, c2, -1.0, 1.0);
        kern::adam_update(net.shadow[l].b.data(), state.m[l].b.data(), state.v[l].b.data(),
                          grads.layer[l].b.data(), net.shadow[l].b.size(), config.alpha,
                          config.beta1, config.beta2, config.epsilon, c1, c2, -1.0, 1.0);
    }
    net.refresh_quantized();
}

History train(MlpNetwork& net, const data::DatasetSplit& train_split,
              const data::DatasetSplit& validation, const TrainConfig& config) {
    if (train_split.rows == 0 || validation.rows == 0)
        throw data_error("train: empty dataset");
    if (train_split.cols != net.input_dim())
        throw data_error("train: feature dimension mismatch");

    AdamState adam;
    adam.resize_for(net);
    Workspace ws;
    ws.resize_for(net);
    Gradients grads;
    grads.resize_for(net);

    SplitMix64 shuffle_rng(derive_stream(config.seed, 7));
    std::vector<std::size_t> order(train_split.rows);
    std::iota(order.begin(), order.end(), 0);

    History history;
    std::vector<LayerParams> best_shadow = net.shadow;
    double best_val = -1.0;
    int best_epoch = 0;
    int epochs_since_improvement = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            grads.clear();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const double* x = train_split.example(order[k]);
                const int label = train_split.labels[order[k]];
                forward(net, x, ws);
                batch_loss += loss_from_output(net, ws, label);
                backward(net, x, label, ws, grads);
            }
            const auto count = static_cast<double>(stop - start);
            if (!std::isfinite(batch_loss))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch starting at " + std::to_string(start));
            grads.scale(1.0 / count);
            adam_step(adam, net, grads, config);
            epoch_loss += batch_loss;
            seen += stop - start;
        }

        double val_acc = evaluate(net, validation);
        history.epochs.push_back({epoch, epoch_loss / static_cast<double>(seen), val_acc});

        if (val_acc > best_val) {
            best_val = val_acc;
            best_epoch = epoch;
            best_shadow = net.shadow;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
        }
        history.stopped_epoch = epoch;
        if (epochs_since_improvement >= config.patience) break;
    }

    net.shadow = std::move(best_shadow);
    net.refresh_quantized();
    history.best_epoch = best_epoch;
    history.best_val_accuracy = best_val;
    return history;
}

double evaluate(const MlpNetwork& net, const data::DatasetSplit& split) {
    if (split.rows == 0) throw data_error("evaluate: empty split");
    if (split.cols != net.input_dim()) throw data_error("evaluate: feature dimension mismatch");
    Workspace ws;
    ws.resize_for(net);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < split.rows; ++i)
        if (predict(net, split.example(i), ws) == split.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(split.rows);
}

}  // namespace qrlab::nn
