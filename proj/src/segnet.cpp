#include "gazeconv/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gazeconv/errors.hpp"

namespace gazeconv {

void sign_init_first_layer(ConvLayer& layer, Rng& rng) {
    if (layer.kernel_height != 2) {
        throw ConfigError("sign_init_first_layer: kernel_height must be 2, got " +
                          std::to_string(layer.kernel_height));
    }
    he_uniform_init(layer, rng);
    for (int o = 0; o < layer.out_depth; ++o) {
        for (int c = 0; c < layer.in_depth; ++c) {
            // If both superimposed weights share a sign, negate the second;
            // magnitudes stay untouched.
            if (layer.w(o, c, 0) * layer.w(o, c, 1) > 0.0) {
                layer.w(o, c, 1) = -layer.w(o, c, 1);
            }
        }
    }
}

bool first_layer_sign_property_holds(const ConvLayer& layer) {
    if (layer.kernel_height != 2) {
        return false;
    }
    for (int o = 0; o < layer.out_depth; ++o) {
        for (int c = 0; c < layer.in_depth; ++c) {
            if (layer.w(o, c, 0) * layer.w(o, c, 1) > 0.0) {
                return false;
            }
        }
    }
    return true;
}

SegModel seg_model_init(const SegArchitecture& arch, Rng& rng) {
    if (arch.kernel_heights.size() != 5 || arch.channels.size() != 5) {
        throw ConfigError("segnet: exactly 5 layers expected");
    }
    if (arch.kernel_heights.front() != 2) {
        throw ConfigError("segnet: first layer must have kernel height 2");
    }
    if (arch.channels.back() != kNumClasses) {
        throw ConfigError("segnet: last layer must have " + std::to_string(kNumClasses) +
                          " output channels");
    }
    SegModel model;
    int in_depth = 3;
    for (std::size_t i = 0; i < arch.kernel_heights.size(); ++i) {
        ConvLayer layer(in_depth, arch.channels[i], arch.kernel_heights[i]);
        if (i == 0) {
            sign_init_first_layer(layer, rng);
        } else {
            he_uniform_init(layer, rng);
        }
        in_depth = arch.channels[i];
        model.layers.push_back(std::move(layer));
    }
    return model;
}

SegModel seg_model_init(Rng& rng) {
    return seg_model_init(SegArchitecture{}, rng);
}

Tensor seg_forward(const SegModel& model, const Tensor& input) {
    if (input.depth != 3) {
        throw ShapeError("seg_forward: expected depth-3 input, got depth " +
                         std::to_string(input.depth));
    }
    return conv_stack_forward(model.layers, input);
}

double seg_lr_for_epoch(const SegTrainConfig& config, int epoch) {
    const int segment = (epoch - 1) / config.lr_decay_every;
    const double lr = config.initial_lr * std::pow(config.lr_decay_factor, segment);
    return lr >= config.stop_lr * (1.0 - 1e-9) ? lr : 0.0;
}

std::vector<double> inverse_frequency_weights(std::span<const long long> class_counts) {
    long long total = 0;
    for (long long c : class_counts) {
        total += c;
    }
    std::vector<double> weights(class_counts.size(), 1.0);
    if (total == 0) {
        return weights;
    }
    double sum_present = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        if (class_counts[c] > 0) {
            weights[c] = static_cast<double>(total) / static_cast<double>(class_counts[c]);
            sum_present += weights[c];
            ++present;
        }
    }
    const double mean = sum_present / present;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        if (class_counts[c] > 0) {
            weights[c] /= mean;
        }
    }
    return weights;
}

std::vector<TrainRecord> seg_train(SegModel& model, std::span<const GazeSequence> dataset,
                                   const SegTrainConfig& config, Rng& rng) {
    if (dataset.empty()) {
        throw ConfigError("seg_train: empty dataset");
    }
    for (const auto& seq : dataset) {
        if (!seq.labeled()) {
            throw ConfigError("seg_train: sequence '" + seq.subject_id +
                              "' is not fully labeled");
        }
    }

    std::vector<Tensor> tensors;
    std::vector<std::vector<int>> labels;
    std::vector<long long> counts(kNumClasses, 0);
    for (const auto& seq : dataset) {
        tensors.push_back(to_input_tensor(seq));
        std::vector<int> seq_labels;
        seq_labels.reserve(seq.samples.size());
        for (const auto& s : seq.samples) {
            seq_labels.push_back(s.label);
            ++counts[static_cast<std::size_t>(s.label)];
        }
        labels.push_back(std::move(seq_labels));
    }
    model.class_weights = inverse_frequency_weights(counts);

    std::vector<ConvLayer*> params;
    for (auto& layer : model.layers) {
        params.push_back(&layer);
    }

    OptimConfig optim;
    optim.kind = config.optimizer;
    optim.weight_decay = config.weight_decay;
    optim.momentum = config.momentum;

    std::vector<TrainRecord> history;
    for (int epoch = 1;; ++epoch) {
        const double lr = seg_lr_for_epoch(config, epoch);
        if (lr == 0.0 || (config.max_epochs > 0 && epoch > config.max_epochs)) {
            break;
        }
        optim.learning_rate = lr;

        // Fresh crops and augmentations every epoch.
        std::vector<Tensor> epoch_tensors;
        std::vector<std::vector<int>> epoch_labels;
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            Tensor t = tensors[i];
            std::vector<int> l = labels[i];
            if (config.crop && t.height >= 2) {
                const CropSpan span = draw_crop_span(t.height, rng, config.crop_min_fraction);
                t = crop(t, span.start, span.length);
                l.assign(labels[i].begin() + span.start,
                         labels[i].begin() + span.start + span.length);
            }
            epoch_tensors.push_back(augment(std::move(t), rng, config.jitter, config.shift));
            epoch_labels.push_back(std::move(l));
        }

        const auto batches =
            make_batches(epoch_tensors, rng, static_cast<std::size_t>(config.batch_size));

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (const auto& batch : batches) {
            const double inv_batch = 1.0 / static_cast<double>(batch.size());
            for (std::size_t member : batch) {
                StackTrace trace;
                const Tensor logits =
                    conv_stack_forward(model.layers, epoch_tensors[member], &trace);
                LossResult loss =
                    softmax_cross_entropy(logits, epoch_labels[member], model.class_weights);
                if (!std::isfinite(loss.value)) {
                    throw NumericError("seg_train: non-finite loss at epoch " +
                                       std::to_string(epoch));
                }
                loss_sum += loss.value;
                ++loss_count;
                for (double& g : loss.input_grad.values) {
                    g *= inv_batch;
                }
                conv_stack_backward(model.layers, trace, loss.input_grad);
            }
            optimizer_step(params, optim);
        }
        history.push_back({epoch, lr, loss_sum / static_cast<double>(loss_count)});
    }
    return history;
}

SegPrediction seg_predict(const SegModel& model, const GazeSequence& seq) {
    const Tensor input = to_input_tensor(seq); // throws LengthError on empty input
    const Tensor logits = seg_forward(model, input);
    SegPrediction prediction;
    prediction.probabilities = softmax(logits);
    prediction.labels.resize(static_cast<std::size_t>(logits.height));
    for (int i = 0; i < logits.height; ++i) {
        int best = 0;
        for (int c = 1; c < logits.depth; ++c) {
            // ties break toward the lowest class index
            if (prediction.probabilities.at(c, i) > prediction.probabilities.at(best, i)) {
                best = c;
            }
        }
        prediction.labels[static_cast<std::size_t>(i)] = best;
    }
    return prediction;
}

} // namespace gazeconv
