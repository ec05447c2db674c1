#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gazeconv/gaze_data.hpp"
#include "gazeconv/rng.hpp"
#include "gazeconv/tensor.hpp"

namespace gazeconv {

// Convolutional VAE over delta-encoded scanpaths. The encoder halves the
// height twice by average pooling and ends in a depth-2 head (mean and
// log-variance); z has depth 1. The decoder mirrors the encoder with
// nearest-neighbor doubling followed by convolution. No sign-initialized
// first layer: positions are not part of the input.
struct VaeArchitecture {
    int width1 = 16;
    int width2 = 32;
    int kernel_height = 3;
};

struct VaeModel {
    std::vector<ConvLayer> encoder_layers; // conv, conv, latent head
    std::vector<ConvLayer> decoder_layers; // conv, conv, output conv
    bool trained = false;
};

struct VaeTrainConfig {
    OptimKind optimizer = OptimKind::sgd_momentum;
    double warmup_lr = 1e-4;
    int warmup_epochs = 100;
    double base_lr = 1e-3;
    double weight_decay = 1e-6;
    double momentum = 0.9;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 1000;
    double stop_lr = 1e-6;
    int batch_size = 8;
    int max_epochs = 0;
    // no data augmentation: reparametrized sampling already deforms outputs
};

struct VaeTrainRecord {
    int epoch = 0;
    double lr = 0.0;
    double recon_loss = 0.0;
    double kl_loss = 0.0;
};

VaeModel vae_model_init(const VaeArchitecture& arch, Rng& rng);
VaeModel vae_model_init(Rng& rng);

// Input must have depth 3 and a height divisible by 4 (pad or crop
// upstream); both outputs have depth 1 and height h/4.
std::pair<Tensor, Tensor> vae_encode(const VaeModel& model, const Tensor& deltas);

struct Reparam {
    Tensor z;
    Tensor noise; // the standard-normal draw, kept for the backward pass
};

// z = mean + exp(0.5 * log_variance) * noise. Gradients flow to mean and
// log_variance, never to the noise.
Reparam reparameterize(const Tensor& mean, const Tensor& log_variance, Rng& rng);

// Accumulates into mean_grad and log_variance_grad.
void reparameterize_backward(const Tensor& log_variance, const Tensor& noise,
                             const Tensor& z_grad, Tensor& mean_grad,
                             Tensor& log_variance_grad);

// z must have depth 1; output has depth 3 and height 4 * z.height.
Tensor vae_decode(const VaeModel& model, const Tensor& z);

double vae_lr_for_epoch(const VaeTrainConfig& config, int epoch);

// Minimizes L2(x, decoded) + KL(N(mean, var) || N(0, 1)).
std::vector<VaeTrainRecord> vae_train(VaeModel& model, std::span<const Tensor> delta_corpus,
                                      const VaeTrainConfig& config, Rng& rng);

// Draws z ~ N(0, 1), decodes, rescales by 100 and integrates from `start`.
// dt is clamped to at least 1 ms so timestamps increase strictly.
GazeSequence generate_scanpath(const VaeModel& model, Rng& rng, int target_length,
                               const GazeSample& start);

// Translates x/y so the path mean lands on the canvas center.
GazeSequence center_scanpath(const GazeSequence& seq, double canvas_width,
                             double canvas_height);

} // namespace gazeconv
