#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gazeconv/gaze_data.hpp"
#include "gazeconv/rng.hpp"
#include "gazeconv/tensor.hpp"

namespace gazeconv {

// Reconstruction net: sign-initialized height-2 layer first, kernel height
// doubling after the height-7 layer, and a final height-25 layer with an
// output depth of three (x, y, time).
struct ReconArchitecture {
    std::vector<int> kernel_heights{2, 7, 14, 25};
    std::vector<int> channels{16, 32, 32, 3};
};

struct ReconModel {
    std::vector<ConvLayer> layers;
};

struct ReconTrainConfig {
    OptimKind optimizer = OptimKind::adam;
    double warmup_lr = 1e-4;
    int warmup_epochs = 10;
    double base_lr = 1e-3;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int loss_switch_epoch = 100; // L2 through this epoch, L1 afterwards
    double lr_decay_factor = 0.1;
    int lr_decay_every = 500;
    double stop_lr = 1e-6;
    bool jitter = true;
    bool shift = true;
    double min_fraction = 0.05; // injected-error range during training
    double max_fraction = 0.30;
    int batch_size = 8;
    int max_epochs = 0;
};

struct ReconTrainRecord {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    bool l1_phase = false;
};

ReconModel recon_model_init(const ReconArchitecture& arch, Rng& rng);
ReconModel recon_model_init(Rng& rng);

// Depth-3 output with height == input height for any input height.
Tensor recon_forward(const ReconModel& model, const Tensor& input);

double recon_lr_for_epoch(const ReconTrainConfig& config, int epoch);

// Draws `count` contiguous sections with lengths in [min_len, max_len] that
// contain neither noise-labeled nor sanitation-flagged samples; a section
// overlapping an error is discarded and redrawn.
std::vector<GazeSequence> sample_clean_sections(const GazeSequence& seq, Rng& rng, int count,
                                                int min_len, int max_len,
                                                const SanitationReport* sanitation = nullptr,
                                                int max_attempts_per_section = 100);

enum class InjectMode { zero, random };

struct Injection {
    Tensor corrupted;
    std::vector<std::uint8_t> mask; // 1 at injected sample positions
};

// Overwrites x and y at ceil(fraction * height) distinct random positions;
// the time channel is never touched.
Injection inject_errors(const Tensor& tensor, Rng& rng, double fraction, InjectMode mode);

std::vector<ReconTrainRecord> recon_train(ReconModel& model,
                                          std::span<const GazeSequence> clean_sections,
                                          const ReconTrainConfig& config, Rng& rng);

struct ReconEvalParams {
    std::vector<double> fractions{0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    int num_sections = 100;
    int min_len = 25;
    int max_len = 200;
    int max_attempts_per_section = 100;
};

struct ReconEvalRow {
    double fraction = 0.0;
    std::string scope; // "entire" or "induced_only"
    double mae_px = 0.0;
};

struct ReconScatterPoint {
    int section_id = 0;
    double normalized_induced_error = 0.0;
    double normalized_reconstruction_error = 0.0;
};

struct ReconEvalReport {
    std::vector<ReconEvalRow> rows;
    std::vector<ReconScatterPoint> scatter;
};

// Mean absolute Euclidean distance on (x, y), upscaled by 100 to pixel
// units, reported per fraction over the entire sequence and over injected
// positions only. The reconstructor is pluggable so an oracle can stand in
// for the network in tests.
template <class ReconstructFn>
ReconEvalReport recon_evaluate_with(ReconstructFn&& reconstruct,
                                    std::span<const GazeSequence> test_sequences, Rng& rng,
                                    const ReconEvalParams& params = {});

ReconEvalReport recon_evaluate(const ReconModel& model,
                               std::span<const GazeSequence> test_sequences, Rng& rng,
                               const ReconEvalParams& params = {});

std::string recon_report_to_csv(const ReconEvalReport& report);
std::string recon_scatter_to_csv(const ReconEvalReport& report);

// implementation

namespace detail {

struct SectionEvalAccumulator {
    double entire_sum = 0.0;
    std::size_t entire_count = 0;
    double induced_sum = 0.0;
    std::size_t induced_count = 0;
};

ReconEvalReport finish_recon_report(
    const std::vector<double>& fractions,
    const std::vector<SectionEvalAccumulator>& per_fraction,
    std::vector<ReconScatterPoint> scatter);

} // namespace detail

template <class ReconstructFn>
ReconEvalReport recon_evaluate_with(ReconstructFn&& reconstruct,
                                    std::span<const GazeSequence> test_sequences, Rng& rng,
                                    const ReconEvalParams& params) {
    std::vector<detail::SectionEvalAccumulator> per_fraction(params.fractions.size());
    std::vector<ReconScatterPoint> scatter;
    int section_id = 0;
    for (int draw = 0; draw < params.num_sections; ++draw) {
        const auto& seq = test_sequences[rng.uniform_index(test_sequences.size())];
        const auto sections = sample_clean_sections(seq, rng, 1, params.min_len,
                                                    params.max_len, nullptr,
                                                    params.max_attempts_per_section);
        const Tensor clean = to_input_tensor(sections.front());
        for (std::size_t f = 0; f < params.fractions.size(); ++f) {
            const InjectMode mode = rng.coin_flip() ? InjectMode::zero : InjectMode::random;
            const Injection injection =
                inject_errors(clean, rng, params.fractions[f], mode);
            const Tensor restored = reconstruct(injection.corrupted);

            double induced_damage_sum = 0.0;
            double induced_recon_sum = 0.0;
            std::size_t induced_count = 0;
            auto& acc = per_fraction[f];
            for (int i = 0; i < clean.height; ++i) {
                const double dx = restored.at(0, i) - clean.at(0, i);
                const double dy = restored.at(1, i) - clean.at(1, i);
                const double dist = std::sqrt(dx * dx + dy * dy);
                acc.entire_sum += dist;
                ++acc.entire_count;
                if (injection.mask[static_cast<std::size_t>(i)] != 0) {
                    acc.induced_sum += dist;
                    ++acc.induced_count;
                    induced_recon_sum += dist;
                    const double ix = injection.corrupted.at(0, i) - clean.at(0, i);
                    const double iy = injection.corrupted.at(1, i) - clean.at(1, i);
                    induced_damage_sum += std::sqrt(ix * ix + iy * iy);
                    ++induced_count;
                }
            }

            // One scatter point per corrupted section: how bad the injected
            // damage was vs how far the reconstruction stayed from truth.
            ReconScatterPoint point;
            point.section_id = section_id;
            point.normalized_induced_error =
                induced_count > 0 ? induced_damage_sum / static_cast<double>(induced_count)
                                  : 0.0;
            point.normalized_reconstruction_error =
                induced_count > 0 ? induced_recon_sum / static_cast<double>(induced_count)
                                  : 0.0;
            scatter.push_back(point);
            ++section_id;
        }
    }
    return detail::finish_recon_report(params.fractions, per_fraction, std::move(scatter));
}

} // namespace gazeconv
