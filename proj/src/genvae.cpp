#include "gazeconv/genvae.hpp"

#include <cmath>
#include <string>

#include "gazeconv/errors.hpp"

namespace gazeconv {

namespace {

struct EncoderTrace {
    Tensor input;
    Tensor pre1, act1, pooled1;
    Tensor pre2, act2, pooled2;
};

struct DecoderTrace {
    Tensor z;
    Tensor pre1, act1, up1;
    Tensor pre2, act2, up2;
};

std::pair<Tensor, Tensor> encode_impl(const VaeModel& model, const Tensor& deltas,
                                      EncoderTrace* trace) {
    if (deltas.depth != 3) {
        throw ShapeError("vae_encode: expected depth-3 delta tensor, got depth " +
                         std::to_string(deltas.depth));
    }
    if (deltas.height % 4 != 0 || deltas.height < 4) {
        throw ShapeError("vae_encode: height " + std::to_string(deltas.height) +
                         " is not divisible by 4; pad or crop the input first");
    }
    Tensor pre1 = conv1d_forward(deltas, model.encoder_layers[0], Padding::same_zero);
    Tensor act1 = relu(pre1);
    Tensor pooled1 = avg_pool_halve(act1);
    Tensor pre2 = conv1d_forward(pooled1, model.encoder_layers[1], Padding::same_zero);
    Tensor act2 = relu(pre2);
    Tensor pooled2 = avg_pool_halve(act2);
    Tensor latent = conv1d_forward(pooled2, model.encoder_layers[2], Padding::same_zero);

    if (trace != nullptr) {
        trace->input = deltas;
        trace->pre1 = std::move(pre1);
        trace->act1 = std::move(act1);
        trace->pooled1 = std::move(pooled1);
        trace->pre2 = std::move(pre2);
        trace->act2 = std::move(act2);
        trace->pooled2 = std::move(pooled2);
    }

    Tensor mean(1, latent.height);
    Tensor log_variance(1, latent.height);
    for (int i = 0; i < latent.height; ++i) {
        mean.at(0, i) = latent.at(0, i);
        log_variance.at(0, i) = latent.at(1, i);
    }
    return {std::move(mean), std::move(log_variance)};
}

// Pushes (mean_grad, log_variance_grad) back through the encoder.
void encode_backward(VaeModel& model, const EncoderTrace& trace, const Tensor& mean_grad,
                     const Tensor& log_variance_grad) {
    Tensor latent_grad(2, mean_grad.height);
    for (int i = 0; i < mean_grad.height; ++i) {
        latent_grad.at(0, i) = mean_grad.at(0, i);
        latent_grad.at(1, i) = log_variance_grad.at(0, i);
    }
    Tensor g = conv1d_backward(trace.pooled2, model.encoder_layers[2], latent_grad,
                               Padding::same_zero);
    g = avg_pool_halve_backward(trace.act2, g);
    g = relu_backward(trace.pre2, g);
    g = conv1d_backward(trace.pooled1, model.encoder_layers[1], g, Padding::same_zero);
    g = avg_pool_halve_backward(trace.act1, g);
    g = relu_backward(trace.pre1, g);
    conv1d_backward(trace.input, model.encoder_layers[0], g, Padding::same_zero);
}

Tensor decode_impl(const VaeModel& model, const Tensor& z, DecoderTrace* trace) {
    if (z.depth != 1) {
        throw ShapeError("vae_decode: z must have depth 1, got depth " +
                         std::to_string(z.depth));
    }
    Tensor pre1 = conv1d_forward(z, model.decoder_layers[0], Padding::same_zero);
    Tensor act1 = relu(pre1);
    Tensor up1 = upsample_double(act1);
    Tensor pre2 = conv1d_forward(up1, model.decoder_layers[1], Padding::same_zero);
    Tensor act2 = relu(pre2);
    Tensor up2 = upsample_double(act2);
    Tensor out = conv1d_forward(up2, model.decoder_layers[2], Padding::same_zero);

    if (trace != nullptr) {
        trace->z = z;
        trace->pre1 = std::move(pre1);
        trace->act1 = std::move(act1);
        trace->up1 = std::move(up1);
        trace->pre2 = std::move(pre2);
        trace->act2 = std::move(act2);
        trace->up2 = std::move(up2);
    }
    return out;
}

Tensor decode_backward(VaeModel& model, const DecoderTrace& trace,
                       const Tensor& output_grad) {
    Tensor g = conv1d_backward(trace.up2, model.decoder_layers[2], output_grad,
                               Padding::same_zero);
    g = upsample_double_backward(trace.act2, g);
    g = relu_backward(trace.pre2, g);
    g = conv1d_backward(trace.up1, model.decoder_layers[1], g, Padding::same_zero);
    g = upsample_double_backward(trace.act1, g);
    g = relu_backward(trace.pre1, g);
    return conv1d_backward(trace.z, model.decoder_layers[0], g, Padding::same_zero);
}

} // namespace

VaeModel vae_model_init(const VaeArchitecture& arch, Rng& rng) {
    if (arch.width1 < 1 || arch.width2 < 1 || arch.kernel_height < 1) {
        throw ConfigError("vae: architecture values must be positive");
    }
    VaeModel model;
    model.encoder_layers.emplace_back(3, arch.width1, arch.kernel_height);
    model.encoder_layers.emplace_back(arch.width1, arch.width2, arch.kernel_height);
    model.encoder_layers.emplace_back(arch.width2, 2, arch.kernel_height); // mean, logvar
    model.decoder_layers.emplace_back(1, arch.width2, arch.kernel_height);
    model.decoder_layers.emplace_back(arch.width2, arch.width1, arch.kernel_height);
    model.decoder_layers.emplace_back(arch.width1, 3, arch.kernel_height);
    for (auto& layer : model.encoder_layers) {
        he_uniform_init(layer, rng);
    }
    for (auto& layer : model.decoder_layers) {
        he_uniform_init(layer, rng);
    }
    return model;
}

VaeModel vae_model_init(Rng& rng) {
    return vae_model_init(VaeArchitecture{}, rng);
}

std::pair<Tensor, Tensor> vae_encode(const VaeModel& model, const Tensor& deltas) {
    return encode_impl(model, deltas, nullptr);
}

Reparam reparameterize(const Tensor& mean, const Tensor& log_variance, Rng& rng) {
    if (!mean.same_shape(log_variance)) {
        throw ShapeError("reparameterize: mean and log_variance shapes differ");
    }
    Reparam result;
    result.noise = Tensor(mean.depth, mean.height);
    result.z = Tensor(mean.depth, mean.height);
    for (std::size_t i = 0; i < mean.values.size(); ++i) {
        const double eps = rng.normal();
        result.noise.values[i] = eps;
        result.z.values[i] =
            mean.values[i] + std::exp(0.5 * log_variance.values[i]) * eps;
    }
    return result;
}

void reparameterize_backward(const Tensor& log_variance, const Tensor& noise,
                             const Tensor& z_grad, Tensor& mean_grad,
                             Tensor& log_variance_grad) {
    if (!log_variance.same_shape(noise) || !log_variance.same_shape(z_grad) ||
        !log_variance.same_shape(mean_grad) || !log_variance.same_shape(log_variance_grad)) {
        throw ShapeError("reparameterize_backward: shape mismatch");
    }
    for (std::size_t i = 0; i < z_grad.values.size(); ++i) {
        const double g = z_grad.values[i];
        mean_grad.values[i] += g;
        log_variance_grad.values[i] +=
            g * 0.5 * std::exp(0.5 * log_variance.values[i]) * noise.values[i];
    }
}

Tensor vae_decode(const VaeModel& model, const Tensor& z) {
    return decode_impl(model, z, nullptr);
}

double vae_lr_for_epoch(const VaeTrainConfig& config, int epoch) {
    if (epoch <= config.warmup_epochs) {
        return config.warmup_lr;
    }
    const int segment = (epoch - 1) / config.lr_decay_every;
    const double lr = config.base_lr * std::pow(config.lr_decay_factor, segment);
    return lr >= config.stop_lr * (1.0 - 1e-9) ? lr : 0.0;
}

std::vector<VaeTrainRecord> vae_train(VaeModel& model, std::span<const Tensor> delta_corpus,
                                      const VaeTrainConfig& config, Rng& rng) {
    if (delta_corpus.empty()) {
        throw ConfigError("vae_train: empty corpus");
    }
    for (const auto& t : delta_corpus) {
        if (t.depth != 3 || t.height % 4 != 0 || t.height < 4) {
            throw ShapeError("vae_train: every corpus tensor needs depth 3 and a height "
                             "divisible by 4");
        }
    }

    std::vector<ConvLayer*> params;
    for (auto& layer : model.encoder_layers) {
        params.push_back(&layer);
    }
    for (auto& layer : model.decoder_layers) {
        params.push_back(&layer);
    }

    OptimConfig optim;
    optim.kind = config.optimizer;
    optim.weight_decay = config.weight_decay;
    optim.momentum = config.momentum;

    std::vector<VaeTrainRecord> history;
    for (int epoch = 1;; ++epoch) {
        const double lr = vae_lr_for_epoch(config, epoch);
        if (lr == 0.0 || (config.max_epochs > 0 && epoch > config.max_epochs)) {
            break;
        }
        optim.learning_rate = lr;

        const auto batches =
            make_batches(delta_corpus, rng, static_cast<std::size_t>(config.batch_size));

        double recon_sum = 0.0;
        double kl_sum = 0.0;
        std::size_t count = 0;
        for (const auto& batch : batches) {
            const double inv_batch = 1.0 / static_cast<double>(batch.size());
            for (std::size_t member : batch) {
                const Tensor& x = delta_corpus[member];

                EncoderTrace enc_trace;
                auto [mean, log_variance] = encode_impl(model, x, &enc_trace);
                Reparam reparam = reparameterize(mean, log_variance, rng);
                DecoderTrace dec_trace;
                Tensor decoded = decode_impl(model, reparam.z, &dec_trace);

                LossResult recon = l2_loss(decoded, x);
                KlResult kl = kl_standard_normal(mean, log_variance);
                if (!std::isfinite(recon.value) || !std::isfinite(kl.value)) {
                    throw NumericError("vae_train: non-finite loss at epoch " +
                                       std::to_string(epoch));
                }
                recon_sum += recon.value;
                kl_sum += kl.value;
                ++count;

                for (double& g : recon.input_grad.values) {
                    g *= inv_batch;
                }
                Tensor z_grad = decode_backward(model, dec_trace, recon.input_grad);

                Tensor mean_grad = kl.mean_grad;
                Tensor logvar_grad = kl.log_variance_grad;
                for (double& g : mean_grad.values) {
                    g *= inv_batch;
                }
                for (double& g : logvar_grad.values) {
                    g *= inv_batch;
                }
                reparameterize_backward(log_variance, reparam.noise, z_grad, mean_grad,
                                        logvar_grad);
                encode_backward(model, enc_trace, mean_grad, logvar_grad);
            }
            optimizer_step(params, optim);
        }
        history.push_back({epoch, lr, recon_sum / static_cast<double>(count),
                           kl_sum / static_cast<double>(count)});
    }
    model.trained = true;
    return history;
}

GazeSequence generate_scanpath(const VaeModel& model, Rng& rng, int target_length,
                               const GazeSample& start) {
    if (!model.trained) {
        throw ConfigError("generate_scanpath: model has not been trained");
    }
    if (target_length < 4 || target_length % 4 != 0) {
        throw LengthError("generate_scanpath: target_length must be a positive multiple "
                          "of 4, got " +
                          std::to_string(target_length));
    }
    Tensor z(1, target_length / 4);
    for (double& v : z.values) {
        v = rng.normal();
    }
    const Tensor deltas = vae_decode(model, z);

    GazeSequence seq;
    seq.samples.reserve(static_cast<std::size_t>(target_length));
    GazeSample current;
    current.x = start.x;
    current.y = start.y;
    current.t = start.t;
    seq.samples.push_back(current);
    for (int i = 1; i < target_length; ++i) {
        current.x += deltas.at(0, i - 1) * 100.0;
        current.y += deltas.at(1, i - 1) * 100.0;
        current.t += std::max(deltas.at(2, i - 1) * 100.0, 1.0);
        seq.samples.push_back(current);
    }
    return seq;
}

GazeSequence center_scanpath(const GazeSequence& seq, double canvas_width,
                             double canvas_height) {
    if (seq.samples.empty()) {
        throw LengthError("center_scanpath: empty sequence");
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& s : seq.samples) {
        mean_x += s.x;
        mean_y += s.y;
    }
    mean_x /= static_cast<double>(seq.samples.size());
    mean_y /= static_cast<double>(seq.samples.size());

    const double dx = canvas_width / 2.0 - mean_x;
    const double dy = canvas_height / 2.0 - mean_y;
    GazeSequence out = seq;
    for (auto& s : out.samples) {
        s.x += dx;
        s.y += dy;
    }
    return out;
}

} // namespace gazeconv
