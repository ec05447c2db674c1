#include "gazeconv/reconnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gazeconv/errors.hpp"
#include "gazeconv/segnet.hpp" // sign_init_first_layer

namespace gazeconv {

ReconModel recon_model_init(const ReconArchitecture& arch, Rng& rng) {
    if (arch.kernel_heights.size() < 2 ||
        arch.kernel_heights.size() != arch.channels.size()) {
        throw ConfigError("reconnet: kernel_heights and channels must match, >= 2 layers");
    }
    if (arch.kernel_heights.front() != 2) {
        throw ConfigError("reconnet: first layer must have kernel height 2");
    }
    if (arch.kernel_heights.back() != 25 || arch.channels.back() != 3) {
        throw ConfigError("reconnet: last layer must have kernel height 25 and depth 3");
    }
    ReconModel model;
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

ReconModel recon_model_init(Rng& rng) {
    return recon_model_init(ReconArchitecture{}, rng);
}

Tensor recon_forward(const ReconModel& model, const Tensor& input) {
    if (input.depth != 3) {
        throw ShapeError("recon_forward: expected depth-3 input, got depth " +
                         std::to_string(input.depth));
    }
    return conv_stack_forward(model.layers, input);
}

double recon_lr_for_epoch(const ReconTrainConfig& config, int epoch) {
    if (epoch <= config.warmup_epochs) {
        return config.warmup_lr;
    }
    const int segment = (epoch - 1) / config.lr_decay_every;
    const double lr = config.base_lr * std::pow(config.lr_decay_factor, segment);
    return lr >= config.stop_lr * (1.0 - 1e-9) ? lr : 0.0;
}

std::vector<GazeSequence> sample_clean_sections(const GazeSequence& seq, Rng& rng, int count,
                                                int min_len, int max_len,
                                                const SanitationReport* sanitation,
                                                int max_attempts_per_section) {
    if (min_len < 1 || max_len < min_len) {
        throw ConfigError("sample_clean_sections: invalid length range");
    }
    const int n = static_cast<int>(seq.samples.size());
    if (n < min_len) {
        throw DataError("sample_clean_sections: sequence of length " + std::to_string(n) +
                        " is shorter than min_len " + std::to_string(min_len));
    }

    auto is_error = [&](int index) {
        if (seq.samples[static_cast<std::size_t>(index)].label == kNoise) {
            return true;
        }
        return sanitation != nullptr && sanitation->flagged(static_cast<std::size_t>(index));
    };

    std::vector<GazeSequence> sections;
    sections.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        bool accepted = false;
        for (int attempt = 0; attempt < max_attempts_per_section; ++attempt) {
            const int length =
                static_cast<int>(rng.uniform_int(min_len, std::min(max_len, n)));
            const int start = static_cast<int>(rng.uniform_int(0, n - length));
            bool clean = true;
            for (int i = start; i < start + length; ++i) {
                if (is_error(i)) {
                    clean = false; // discard and redraw
                    break;
                }
            }
            if (!clean) {
                continue;
            }
            GazeSequence section;
            section.subject_id = seq.subject_id;
            section.sample_rate_hz = seq.sample_rate_hz;
            section.samples.assign(seq.samples.begin() + start,
                                   seq.samples.begin() + start + length);
            sections.push_back(std::move(section));
            accepted = true;
            break;
        }
        if (!accepted) {
            throw DataError("sample_clean_sections: no error-free section of length >= " +
                            std::to_string(min_len) + " found in " +
                            std::to_string(max_attempts_per_section) + " attempts");
        }
    }
    return sections;
}

Injection inject_errors(const Tensor& tensor, Rng& rng, double fraction, InjectMode mode) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw ConfigError("inject_errors: fraction must lie in (0, 1)");
    }
    if (tensor.depth != 3) {
        throw ShapeError("inject_errors: expected depth-3 tensor");
    }

    Injection result;
    result.corrupted = tensor;
    result.mask.assign(static_cast<std::size_t>(tensor.height), 0);

    // The small epsilon keeps ceil() exact when fraction * height lands a
    // rounding error above an integer (e.g. 0.05 * 100).
    const int n_inject = static_cast<int>(std::ceil(fraction * tensor.height - 1e-9));

    // Injection range: uniform over the observed coordinate range.
    double max_coord = 0.0;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < tensor.height; ++i) {
            max_coord = std::max(max_coord, tensor.at(c, i));
        }
    }

    // Partial Fisher-Yates draw of distinct positions.
    std::vector<int> positions(static_cast<std::size_t>(tensor.height));
    for (int i = 0; i < tensor.height; ++i) {
        positions[static_cast<std::size_t>(i)] = i;
    }
    for (int k = 0; k < n_inject; ++k) {
        const std::size_t j = static_cast<std::size_t>(
            rng.uniform_int(k, static_cast<std::int64_t>(tensor.height) - 1));
        std::swap(positions[static_cast<std::size_t>(k)], positions[j]);
        const int pos = positions[static_cast<std::size_t>(k)];
        if (mode == InjectMode::zero) {
            result.corrupted.at(0, pos) = 0.0;
            result.corrupted.at(1, pos) = 0.0;
        } else {
            result.corrupted.at(0, pos) = rng.uniform(0.0, max_coord);
            result.corrupted.at(1, pos) = rng.uniform(0.0, max_coord);
        }
        result.mask[static_cast<std::size_t>(pos)] = 1;
    }
    return result;
}

std::vector<ReconTrainRecord> recon_train(ReconModel& model,
                                          std::span<const GazeSequence> clean_sections,
                                          const ReconTrainConfig& config, Rng& rng) {
    if (clean_sections.empty()) {
        throw ConfigError("recon_train: no training sections");
    }
    std::vector<Tensor> tensors;
    tensors.reserve(clean_sections.size());
    for (const auto& section : clean_sections) {
        tensors.push_back(to_input_tensor(section));
    }

    std::vector<ConvLayer*> params;
    for (auto& layer : model.layers) {
        params.push_back(&layer);
    }

    OptimConfig optim;
    optim.kind = config.optimizer;
    optim.weight_decay = config.weight_decay;
    optim.beta1 = config.beta1;
    optim.beta2 = config.beta2;

    // Training corruption fractions match the evaluation grid.
    std::vector<double> fractions;
    for (double f = config.min_fraction; f <= config.max_fraction + 1e-12; f += 0.05) {
        fractions.push_back(f);
    }

    std::vector<ReconTrainRecord> history;
    for (int epoch = 1;; ++epoch) {
        const double lr = recon_lr_for_epoch(config, epoch);
        if (lr == 0.0 || (config.max_epochs > 0 && epoch > config.max_epochs)) {
            break;
        }
        optim.learning_rate = lr;
        const bool l1_phase = epoch > config.loss_switch_epoch;

        std::vector<Tensor> epoch_tensors;
        epoch_tensors.reserve(tensors.size());
        for (const auto& t : tensors) {
            epoch_tensors.push_back(augment(t, rng, config.jitter, config.shift));
        }
        const auto batches =
            make_batches(epoch_tensors, rng, static_cast<std::size_t>(config.batch_size));

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (const auto& batch : batches) {
            const double inv_batch = 1.0 / static_cast<double>(batch.size());
            for (std::size_t member : batch) {
                const Tensor& clean = epoch_tensors[member];
                // Corruption is resampled every step.
                const double fraction = fractions[rng.uniform_index(fractions.size())];
                const InjectMode mode =
                    rng.coin_flip() ? InjectMode::zero : InjectMode::random;
                const Injection injection = inject_errors(clean, rng, fraction, mode);

                StackTrace trace;
                const Tensor output =
                    conv_stack_forward(model.layers, injection.corrupted, &trace);
                LossResult loss =
                    l1_phase ? l1_loss(output, clean) : l2_loss(output, clean);
                if (!std::isfinite(loss.value)) {
                    throw NumericError("recon_train: non-finite loss at epoch " +
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
        history.push_back(
            {epoch, lr, loss_sum / static_cast<double>(loss_count), l1_phase});
    }
    return history;
}

namespace detail {

ReconEvalReport finish_recon_report(const std::vector<double>& fractions,
                                    const std::vector<SectionEvalAccumulator>& per_fraction,
                                    std::vector<ReconScatterPoint> scatter) {
    ReconEvalReport report;
    for (std::size_t f = 0; f < fractions.size(); ++f) {
        const auto& acc = per_fraction[f];
        ReconEvalRow entire;
        entire.fraction = fractions[f];
        entire.scope = "entire";
        // Upscaled to the real input value range (the normalization divider
        // is 100).
        entire.mae_px =
            acc.entire_count > 0
                ? 100.0 * acc.entire_sum / static_cast<double>(acc.entire_count)
                : 0.0;
        report.rows.push_back(entire);

        ReconEvalRow induced;
        induced.fraction = fractions[f];
        induced.scope = "induced_only";
        induced.mae_px =
            acc.induced_count > 0
                ? 100.0 * acc.induced_sum / static_cast<double>(acc.induced_count)
                : 0.0;
        report.rows.push_back(induced);
    }

    double max_induced = 0.0;
    for (const auto& p : scatter) {
        max_induced = std::max(max_induced, p.normalized_induced_error);
    }
    if (max_induced > 0.0) {
        for (auto& p : scatter) {
            p.normalized_induced_error /= max_induced;
            p.normalized_reconstruction_error /= max_induced;
        }
    }
    report.scatter = std::move(scatter);
    return report;
}

} // namespace detail

ReconEvalReport recon_evaluate(const ReconModel& model,
                               std::span<const GazeSequence> test_sequences, Rng& rng,
                               const ReconEvalParams& params) {
    return recon_evaluate_with(
        [&model](const Tensor& corrupted) { return recon_forward(model, corrupted); },
        test_sequences, rng, params);
}

namespace {

std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string recon_report_to_csv(const ReconEvalReport& report) {
    std::string out = "fraction,scope,mae_px\n";
    for (const auto& row : report.rows) {
        out += csv_double(row.fraction);
        out += ',';
        out += row.scope;
        out += ',';
        out += csv_double(row.mae_px);
        out += '\n';
    }
    return out;
}

std::string recon_scatter_to_csv(const ReconEvalReport& report) {
    std::string out = "section_id,normalized_induced_error,normalized_reconstruction_error\n";
    for (const auto& p : report.scatter) {
        out += std::to_string(p.section_id);
        out += ',';
        out += csv_double(p.normalized_induced_error);
        out += ',';
        out += csv_double(p.normalized_reconstruction_error);
        out += '\n';
    }
    return out;
}

} // namespace gazeconv
