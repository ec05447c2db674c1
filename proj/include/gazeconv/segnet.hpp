#pragma once

#include <span>
#include <vector>

#include "gazeconv/gaze_data.hpp"
#include "gazeconv/rng.hpp"
#include "gazeconv/tensor.hpp"

namespace gazeconv {

// Five same-padding convolution layers over the raw (x, y, t)/100 signal.
// Only the layer count, the first kernel height (2) and the output depth
// (5) are fixed; the hidden widths are a documented choice.
struct SegArchitecture {
    std::vector<int> kernel_heights{2, 3, 5, 7, 9};
    std::vector<int> channels{16, 16, 16, 16, 5};
};

struct SegModel {
    std::vector<ConvLayer> layers;
    std::vector<double> class_weights = std::vector<double>(kNumClasses, 1.0);
};

struct SegTrainConfig {
    OptimKind optimizer = OptimKind::sgd_momentum;
    double initial_lr = 1e-2;
    double weight_decay = 1e-4;
    double momentum = 0.9;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 500; // epochs per learning-rate segment
    double stop_lr = 1e-6;    // the last segment runs at this rate, then training stops
    bool jitter = true;
    bool shift = true;
    bool crop = true; // random length-cropping so batches see varying input sizes
    double crop_min_fraction = 0.5;
    int batch_size = 8;
    int max_epochs = 0; // 0 = run the full schedule
};

struct TrainRecord {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
};

// Re-randomizes the weights, then flips signs so that the two kernel
// weights stacked along the height have opposite signs for every
// (filter, input channel) pair. Requires kernel_height == 2.
void sign_init_first_layer(ConvLayer& layer, Rng& rng);

// True when every height-stacked weight pair has non-positive product.
// Guaranteed right after sign_init_first_layer; may drift during training.
bool first_layer_sign_property_holds(const ConvLayer& layer);

SegModel seg_model_init(const SegArchitecture& arch, Rng& rng);
SegModel seg_model_init(Rng& rng);

// Depth-5 logits with output height == input height for any input height.
Tensor seg_forward(const SegModel& model, const Tensor& input);

// Learning rate for a 1-based epoch under the decay schedule, or 0 when the
// schedule is exhausted.
double seg_lr_for_epoch(const SegTrainConfig& config, int epoch);

std::vector<TrainRecord> seg_train(SegModel& model, std::span<const GazeSequence> dataset,
                                   const SegTrainConfig& config, Rng& rng);

struct SegPrediction {
    std::vector<int> labels;
    Tensor probabilities; // kNumClasses x sample count
};

SegPrediction seg_predict(const SegModel& model, const GazeSequence& seq);

// Inverse relative class frequency, normalized to mean 1 over the classes
// that actually occur; absent classes get weight 1.
std::vector<double> inverse_frequency_weights(std::span<const long long> class_counts);

} // namespace gazeconv
