#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gazeconv/rng.hpp"

namespace gazeconv {

// Rank-3 value grid with an implicit width of 1: depth channels stacked
// over an arbitrary height. Values and grad always share the same shape.
struct Tensor {
    int depth = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<double> grad;

    Tensor() = default;
    Tensor(int depth_, int height_);

    double& at(int d, int h) { return values[static_cast<std::size_t>(d) * height + h]; }
    double at(int d, int h) const { return values[static_cast<std::size_t>(d) * height + h]; }
    double& grad_at(int d, int h) { return grad[static_cast<std::size_t>(d) * height + h]; }
    double grad_at(int d, int h) const { return grad[static_cast<std::size_t>(d) * height + h]; }

    std::size_t size() const { return values.size(); }
    void zero_grad();
    bool same_shape(const Tensor& other) const {
        return depth == other.depth && height == other.height;
    }
};

bool all_finite(const Tensor& t);

// One 1D convolution layer. The kernel spans the full input depth and
// slides only along the height. Gradient and optimizer-state arrays are
// kept shape-congruent with the weights and bias.
struct ConvLayer {
    int in_depth = 0;
    int out_depth = 0;
    int kernel_height = 0;

    std::vector<double> weights; // [out][in][k]
    std::vector<double> bias;    // [out]
    std::vector<double> weight_grad;
    std::vector<double> bias_grad;

    // SGD momentum buffers.
    std::vector<double> weight_momentum;
    std::vector<double> bias_momentum;
    // Adam first/second moments and step counter.
    std::vector<double> weight_m;
    std::vector<double> weight_v;
    std::vector<double> bias_m;
    std::vector<double> bias_v;
    long adam_step = 0;

    ConvLayer() = default;
    ConvLayer(int in_depth_, int out_depth_, int kernel_height_);

    double& w(int o, int i, int j) {
        return weights[(static_cast<std::size_t>(o) * in_depth + i) * kernel_height + j];
    }
    double w(int o, int i, int j) const {
        return weights[(static_cast<std::size_t>(o) * in_depth + i) * kernel_height + j];
    }
    double& w_grad(int o, int i, int j) {
        return weight_grad[(static_cast<std::size_t>(o) * in_depth + i) * kernel_height + j];
    }

    void zero_grad();
};

// Uniform fan-in-scaled initialization (He-style bound); biases start at zero.
void he_uniform_init(ConvLayer& layer, Rng& rng);

enum class OptimKind { sgd_momentum, adam };

struct OptimConfig {
    OptimKind kind = OptimKind::sgd_momentum;
    double learning_rate = 1e-2;
    double weight_decay = 0.0;
    double momentum = 0.9;     // SGD
    double beta1 = 0.9;        // Adam
    double beta2 = 0.999;      // Adam
    double epsilon = 1e-8;     // Adam
};

enum class Padding { same_zero, valid };

// Forward convolution. same_zero keeps the output height equal to the
// input height for every kernel height; valid shrinks it by k-1.
Tensor conv1d_forward(const Tensor& input, const ConvLayer& layer, Padding padding);

// Returns dL/dinput and accumulates dL/dweights, dL/dbias into the layer.
Tensor conv1d_backward(const Tensor& input, ConvLayer& layer, const Tensor& output_grad,
                       Padding padding);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& output_grad);

Tensor avg_pool_halve(const Tensor& input);
Tensor avg_pool_halve_backward(const Tensor& input, const Tensor& output_grad);

Tensor upsample_double(const Tensor& input);
Tensor upsample_double_backward(const Tensor& input, const Tensor& output_grad);

// Column-wise softmax along depth, computed with max-subtraction.
Tensor softmax(const Tensor& logits);

struct LossResult {
    double value = 0.0;
    Tensor input_grad; // dL/dprediction (or dL/dlogits)
};

// Mean over samples of -class_weights[label] * log(softmax[label]).
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                 std::span<const double> class_weights);

LossResult l2_loss(const Tensor& prediction, const Tensor& target);
LossResult l1_loss(const Tensor& prediction, const Tensor& target);

struct KlResult {
    double value = 0.0;
    Tensor mean_grad;
    Tensor log_variance_grad;
};

// Mean over entries of 0.5 * (exp(logvar) + mean^2 - 1 - logvar);
// the KL divergence of N(mean, exp(logvar)) from N(0, 1).
KlResult kl_standard_normal(const Tensor& mean, const Tensor& log_variance);

// Applies one update to every layer using the gradients accumulated since
// the last step, then zeroes the gradients. A layer whose gradients and
// optimizer state are all zero (no backward pass has run) is left untouched.
void optimizer_step(std::span<ConvLayer*> layers, const OptimConfig& config);

// Plain conv->ReLU stack shared by the segmentation and reconstruction
// nets: same-padding convolutions with ReLU after every layer but the last.
struct StackTrace {
    std::vector<Tensor> inputs;   // input to each conv layer
    std::vector<Tensor> pre_acts; // conv outputs before ReLU (all but last layer)
};

Tensor conv_stack_forward(std::span<const ConvLayer> layers, const Tensor& input,
                          StackTrace* trace = nullptr);
Tensor conv_stack_backward(std::span<ConvLayer> layers, const StackTrace& trace,
                           const Tensor& output_grad);

} // namespace gazeconv
