#include "gazeconv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gazeconv/errors.hpp"

namespace gazeconv {

namespace {

std::string shape_str(const Tensor& t) {
    return std::to_string(t.depth) + "x" + std::to_string(t.height);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
    }
}

bool all_zero(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

} // namespace

Tensor::Tensor(int depth_, int height_) : depth(depth_), height(height_) {
    if (depth <= 0 || height <= 0) {
        throw ShapeError("Tensor dimensions must be positive, got " + std::to_string(depth_) +
                         "x" + std::to_string(height_));
    }
    values.assign(static_cast<std::size_t>(depth) * height, 0.0);
    grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

bool all_finite(const Tensor& t) {
    return std::all_of(t.values.begin(), t.values.end(),
                       [](double v) { return std::isfinite(v); });
}

ConvLayer::ConvLayer(int in_depth_, int out_depth_, int kernel_height_)
    : in_depth(in_depth_), out_depth(out_depth_), kernel_height(kernel_height_) {
    if (in_depth <= 0 || out_depth <= 0 || kernel_height <= 0) {
        throw ShapeError("ConvLayer dimensions must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(out_depth) * in_depth * kernel_height;
    weights.assign(n, 0.0);
    weight_grad.assign(n, 0.0);
    weight_momentum.assign(n, 0.0);
    weight_m.assign(n, 0.0);
    weight_v.assign(n, 0.0);
    bias.assign(static_cast<std::size_t>(out_depth), 0.0);
    bias_grad.assign(bias.size(), 0.0);
    bias_momentum.assign(bias.size(), 0.0);
    bias_m.assign(bias.size(), 0.0);
    bias_v.assign(bias.size(), 0.0);
}

void ConvLayer::zero_grad() {
    std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
    std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
}

void he_uniform_init(ConvLayer& layer, Rng& rng) {
    const double fan_in = static_cast<double>(layer.in_depth) * layer.kernel_height;
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& w : layer.weights) {
        w = rng.uniform(-bound, bound);
    }
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

Tensor conv1d_forward(const Tensor& input, const ConvLayer& layer, Padding padding) {
    if (input.depth != layer.in_depth) {
        throw ShapeError("conv1d_forward: input depth " + std::to_string(input.depth) +
                         " does not match layer in_depth " + std::to_string(layer.in_depth));
    }
    const int k = layer.kernel_height;
    int out_height = 0;
    int pad_begin = 0;
    if (padding == Padding::same_zero) {
        out_height = input.height;
        pad_begin = (k - 1) / 2;
    } else {
        if (input.height < k) {
            throw LengthError("conv1d_forward: valid padding needs input height >= " +
                              std::to_string(k) + ", got " + std::to_string(input.height));
        }
        out_height = input.height - k + 1;
    }

    Tensor out(layer.out_depth, out_height);
    for (int o = 0; o < layer.out_depth; ++o) {
        for (int i = 0; i < out_height; ++i) {
            double acc = layer.bias[static_cast<std::size_t>(o)];
            for (int c = 0; c < layer.in_depth; ++c) {
                for (int j = 0; j < k; ++j) {
                    const int src = i + j - pad_begin;
                    if (src < 0 || src >= input.height) {
                        continue; // zero padding
                    }
                    acc += layer.w(o, c, j) * input.at(c, src);
                }
            }
            out.at(o, i) = acc;
        }
    }
    return out;
}

Tensor conv1d_backward(const Tensor& input, ConvLayer& layer, const Tensor& output_grad,
                       Padding padding) {
    if (input.depth != layer.in_depth) {
        throw ShapeError("conv1d_backward: input depth does not match layer");
    }
    const int k = layer.kernel_height;
    const int expected_height =
        padding == Padding::same_zero ? input.height : input.height - k + 1;
    if (output_grad.depth != layer.out_depth || output_grad.height != expected_height) {
        throw ShapeError("conv1d_backward: output_grad shape " + shape_str(output_grad) +
                         " does not match forward output " + std::to_string(layer.out_depth) +
                         "x" + std::to_string(expected_height));
    }
    const int pad_begin = padding == Padding::same_zero ? (k - 1) / 2 : 0;

    Tensor input_grad(input.depth, input.height);
    for (int o = 0; o < layer.out_depth; ++o) {
        for (int i = 0; i < output_grad.height; ++i) {
            const double g = output_grad.at(o, i);
            if (g == 0.0) {
                continue;
            }
            layer.bias_grad[static_cast<std::size_t>(o)] += g;
            for (int c = 0; c < layer.in_depth; ++c) {
                for (int j = 0; j < k; ++j) {
                    const int src = i + j - pad_begin;
                    if (src < 0 || src >= input.height) {
                        continue;
                    }
                    layer.w_grad(o, c, j) += g * input.at(c, src);
                    input_grad.at(c, src) += g * layer.w(o, c, j);
                }
            }
        }
    }
    return input_grad;
}

Tensor relu(const Tensor& input) {
    Tensor out(input.depth, input.height);
    for (std::size_t i = 0; i < input.values.size(); ++i) {
        out.values[i] = input.values[i] > 0.0 ? input.values[i] : 0.0;
    }
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& output_grad) {
    require_same_shape(input, output_grad, "relu_backward");
    Tensor input_grad(input.depth, input.height);
    for (std::size_t i = 0; i < input.values.size(); ++i) {
        input_grad.values[i] = input.values[i] > 0.0 ? output_grad.values[i] : 0.0;
    }
    return input_grad;
}

Tensor avg_pool_halve(const Tensor& input) {
    if (input.height < 2) {
        throw LengthError("avg_pool_halve: input height must be >= 2, got " +
                          std::to_string(input.height));
    }
    Tensor out(input.depth, input.height / 2);
    for (int c = 0; c < input.depth; ++c) {
        for (int i = 0; i < out.height; ++i) {
            out.at(c, i) = 0.5 * (input.at(c, 2 * i) + input.at(c, 2 * i + 1));
        }
    }
    return out;
}

Tensor avg_pool_halve_backward(const Tensor& input, const Tensor& output_grad) {
    if (output_grad.depth != input.depth || output_grad.height != input.height / 2) {
        throw ShapeError("avg_pool_halve_backward: output_grad shape mismatch");
    }
    Tensor input_grad(input.depth, input.height);
    for (int c = 0; c < input.depth; ++c) {
        for (int i = 0; i < output_grad.height; ++i) {
            const double half = 0.5 * output_grad.at(c, i);
            input_grad.at(c, 2 * i) = half;
            input_grad.at(c, 2 * i + 1) = half;
        }
    }
    return input_grad; // odd trailing sample, if any, keeps zero gradient
}

Tensor upsample_double(const Tensor& input) {
    Tensor out(input.depth, input.height * 2);
    for (int c = 0; c < input.depth; ++c) {
        for (int i = 0; i < input.height; ++i) {
            out.at(c, 2 * i) = input.at(c, i);
            out.at(c, 2 * i + 1) = input.at(c, i);
        }
    }
    return out;
}

Tensor upsample_double_backward(const Tensor& input, const Tensor& output_grad) {
    if (output_grad.depth != input.depth || output_grad.height != input.height * 2) {
        throw ShapeError("upsample_double_backward: output_grad shape mismatch");
    }
    Tensor input_grad(input.depth, input.height);
    for (int c = 0; c < input.depth; ++c) {
        for (int i = 0; i < input.height; ++i) {
            input_grad.at(c, i) = output_grad.at(c, 2 * i) + output_grad.at(c, 2 * i + 1);
        }
    }
    return input_grad;
}

Tensor softmax(const Tensor& logits) {
    Tensor out(logits.depth, logits.height);
    for (int i = 0; i < logits.height; ++i) {
        double max_logit = logits.at(0, i);
        for (int c = 1; c < logits.depth; ++c) {
            max_logit = std::max(max_logit, logits.at(c, i));
        }
        double sum = 0.0;
        for (int c = 0; c < logits.depth; ++c) {
            const double e = std::exp(logits.at(c, i) - max_logit);
            out.at(c, i) = e;
            sum += e;
        }
        for (int c = 0; c < logits.depth; ++c) {
            out.at(c, i) /= sum;
        }
    }
    return out;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                 std::span<const double> class_weights) {
    if (static_cast<int>(class_weights.size()) != logits.depth) {
        throw ShapeError("softmax_cross_entropy: class_weights size " +
                         std::to_string(class_weights.size()) + " != logits depth " +
                         std::to_string(logits.depth));
    }
    if (static_cast<int>(labels.size()) != logits.height) {
        throw ShapeError("softmax_cross_entropy: labels length " +
                         std::to_string(labels.size()) + " != logits height " +
                         std::to_string(logits.height));
    }
    for (int i = 0; i < logits.height; ++i) {
        if (labels[static_cast<std::size_t>(i)] < 0 ||
            labels[static_cast<std::size_t>(i)] >= logits.depth) {
            throw LabelError("softmax_cross_entropy: label " +
                             std::to_string(labels[static_cast<std::size_t>(i)]) +
                             " out of range at sample " + std::to_string(i));
        }
    }

    const Tensor probs = softmax(logits);
    const double inv_n = 1.0 / logits.height;
    LossResult result;
    result.input_grad = Tensor(logits.depth, logits.height);
    double loss = 0.0;
    for (int i = 0; i < logits.height; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        const double w = class_weights[static_cast<std::size_t>(y)];
        // log(p_y) via the max-subtracted representation kept inside softmax
        // is already stable; probs can only underflow for extreme logits.
        loss += -w * std::log(std::max(probs.at(y, i), 1e-300));
        for (int c = 0; c < logits.depth; ++c) {
            const double indicator = c == y ? 1.0 : 0.0;
            result.input_grad.at(c, i) = w * inv_n * (probs.at(c, i) - indicator);
        }
    }
    result.value = loss * inv_n;
    return result;
}

LossResult l2_loss(const Tensor& prediction, const Tensor& target) {
    require_same_shape(prediction, target, "l2_loss");
    const double inv_n = 1.0 / static_cast<double>(prediction.size());
    LossResult result;
    result.input_grad = Tensor(prediction.depth, prediction.height);
    double loss = 0.0;
    for (std::size_t i = 0; i < prediction.values.size(); ++i) {
        const double diff = prediction.values[i] - target.values[i];
        loss += diff * diff;
        result.input_grad.values[i] = 2.0 * diff * inv_n;
    }
    result.value = loss * inv_n;
    return result;
}

LossResult l1_loss(const Tensor& prediction, const Tensor& target) {
    require_same_shape(prediction, target, "l1_loss");
    const double inv_n = 1.0 / static_cast<double>(prediction.size());
    LossResult result;
    result.input_grad = Tensor(prediction.depth, prediction.height);
    double loss = 0.0;
    for (std::size_t i = 0; i < prediction.values.size(); ++i) {
        const double diff = prediction.values[i] - target.values[i];
        loss += std::abs(diff);
        // subgradient at zero residual is defined as 0
        result.input_grad.values[i] = diff > 0.0 ? inv_n : (diff < 0.0 ? -inv_n : 0.0);
    }
    result.value = loss * inv_n;
    return result;
}

KlResult kl_standard_normal(const Tensor& mean, const Tensor& log_variance) {
    require_same_shape(mean, log_variance, "kl_standard_normal");
    const double inv_n = 1.0 / static_cast<double>(mean.size());
    KlResult result;
    result.mean_grad = Tensor(mean.depth, mean.height);
    result.log_variance_grad = Tensor(mean.depth, mean.height);
    double total = 0.0;
    for (std::size_t i = 0; i < mean.values.size(); ++i) {
        const double m = mean.values[i];
        const double lv = log_variance.values[i];
        const double ev = std::exp(lv);
        total += 0.5 * (ev + m * m - 1.0 - lv);
        result.mean_grad.values[i] = m * inv_n;
        result.log_variance_grad.values[i] = 0.5 * (ev - 1.0) * inv_n;
    }
    result.value = total * inv_n;
    return result;
}

namespace {

void validate_optim_config(const OptimConfig& c) {
    if (c.learning_rate < 0.0) {
        throw ConfigError("optimizer: learning_rate must be >= 0");
    }
    if (c.momentum < 0.0 || c.momentum >= 1.0 || c.beta1 < 0.0 || c.beta1 >= 1.0 ||
        c.beta2 < 0.0 || c.beta2 >= 1.0) {
        throw ConfigError("optimizer: momentum/beta parameters must lie in [0, 1)");
    }
    if (c.epsilon <= 0.0) {
        throw ConfigError("optimizer: epsilon must be > 0");
    }
}

bool pristine(const ConvLayer& l) {
    return all_zero(l.weight_grad) && all_zero(l.bias_grad) && all_zero(l.weight_momentum) &&
           all_zero(l.bias_momentum) && all_zero(l.weight_m) && all_zero(l.weight_v) &&
           all_zero(l.bias_m) && all_zero(l.bias_v) && l.adam_step == 0;
}

void sgd_step(ConvLayer& l, const OptimConfig& c) {
    for (std::size_t i = 0; i < l.weights.size(); ++i) {
        const double g = l.weight_grad[i] + c.weight_decay * l.weights[i];
        l.weight_momentum[i] = c.momentum * l.weight_momentum[i] + g;
        l.weights[i] -= c.learning_rate * l.weight_momentum[i];
    }
    // weight decay never applies to biases
    for (std::size_t i = 0; i < l.bias.size(); ++i) {
        l.bias_momentum[i] = c.momentum * l.bias_momentum[i] + l.bias_grad[i];
        l.bias[i] -= c.learning_rate * l.bias_momentum[i];
    }
}

void adam_step(ConvLayer& l, const OptimConfig& c) {
    ++l.adam_step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(l.adam_step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(l.adam_step));
    for (std::size_t i = 0; i < l.weights.size(); ++i) {
        const double g = l.weight_grad[i] + c.weight_decay * l.weights[i];
        l.weight_m[i] = c.beta1 * l.weight_m[i] + (1.0 - c.beta1) * g;
        l.weight_v[i] = c.beta2 * l.weight_v[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = l.weight_m[i] / bc1;
        const double v_hat = l.weight_v[i] / bc2;
        l.weights[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
    for (std::size_t i = 0; i < l.bias.size(); ++i) {
        const double g = l.bias_grad[i];
        l.bias_m[i] = c.beta1 * l.bias_m[i] + (1.0 - c.beta1) * g;
        l.bias_v[i] = c.beta2 * l.bias_v[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = l.bias_m[i] / bc1;
        const double v_hat = l.bias_v[i] / bc2;
        l.bias[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

} // namespace

void optimizer_step(std::span<ConvLayer*> layers, const OptimConfig& config) {
    validate_optim_config(config);
    for (ConvLayer* layer : layers) {
        if (pristine(*layer)) {
            continue; // no backward pass has touched this layer yet
        }
        if (config.kind == OptimKind::sgd_momentum) {
            sgd_step(*layer, config);
        } else {
            adam_step(*layer, config);
        }
        layer->zero_grad();
    }
}

Tensor conv_stack_forward(std::span<const ConvLayer> layers, const Tensor& input,
                          StackTrace* trace) {
    if (trace != nullptr) {
        trace->inputs.clear();
        trace->pre_acts.clear();
    }
    Tensor x = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (trace != nullptr) {
            trace->inputs.push_back(x);
        }
        Tensor pre = conv1d_forward(x, layers[i], Padding::same_zero);
        if (i + 1 < layers.size()) {
            if (trace != nullptr) {
                trace->pre_acts.push_back(pre);
            }
            x = relu(pre);
        } else {
            x = std::move(pre);
        }
    }
    return x;
}

Tensor conv_stack_backward(std::span<ConvLayer> layers, const StackTrace& trace,
                           const Tensor& output_grad) {
    if (trace.inputs.size() != layers.size()) {
        throw ShapeError("conv_stack_backward: trace does not match layer count");
    }
    Tensor g = output_grad;
    for (std::size_t i = layers.size(); i-- > 0;) {
        if (i + 1 < layers.size()) {
            g = relu_backward(trace.pre_acts[i], g);
        }
        g = conv1d_backward(trace.inputs[i], layers[i], g, Padding::same_zero);
    }
    return g;
}

} // namespace gazeconv
