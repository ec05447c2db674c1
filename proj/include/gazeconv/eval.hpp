#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazeconv/errors.hpp"
#include "gazeconv/gaze_data.hpp"

namespace gazeconv {

struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<long long> counts; // row-major, rows = true class

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int classes);

    void add(int truth, int predicted);
    long long at(int truth, int predicted) const {
        return counts[static_cast<std::size_t>(truth) * num_classes + predicted];
    }
    long long total() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

struct ClassMetrics {
    std::optional<double> recall;    // empty when the class never occurs
    std::optional<double> precision; // empty when the class is never predicted
};

// recall = TP/(TP+FN), precision = TP/(TP+FP), per class. Empty
// denominators are reported as undefined, not as zero.
std::vector<ClassMetrics> recall_precision(const ConfusionMatrix& cm);

std::string metrics_to_csv(std::span<const ClassMetrics> metrics);
std::string confusion_to_csv(const ConfusionMatrix& cm);

struct FoldReport {
    int fold = 0;
    ConfusionMatrix cm;
};

struct CrossValidationResult {
    ConfusionMatrix aggregate;
    std::vector<FoldReport> folds;
};

// Subject-disjoint cross validation: for every fold, trains on the
// complement and evaluates on the fold; only annotated samples are counted.
// TrainFn: (const std::vector<const GazeSequence*>&) -> Model
// PredictFn: (const Model&, const GazeSequence&) -> std::vector<int>
template <class TrainFn, class PredictFn>
CrossValidationResult cross_validate(std::span<const GazeSequence> dataset,
                                     const FoldPlan& plan, int num_classes, TrainFn&& train,
                                     PredictFn&& predict) {
    for (const auto& seq : dataset) {
        if (!plan.assignment.contains(seq.subject_id)) {
            throw ConfigError("cross_validate: subject '" + seq.subject_id +
                              "' missing from fold plan");
        }
    }

    CrossValidationResult result;
    result.aggregate = ConfusionMatrix(num_classes);
    for (int fold = 0; fold < plan.k; ++fold) {
        std::vector<const GazeSequence*> train_set;
        std::vector<const GazeSequence*> test_set;
        for (const auto& seq : dataset) {
            (plan.assignment.at(seq.subject_id) == fold ? test_set : train_set)
                .push_back(&seq);
        }
        // A subject may never sit on both sides of a fold.
        for (const auto* test_seq : test_set) {
            for (const auto* train_seq : train_set) {
                if (test_seq->subject_id == train_seq->subject_id) {
                    throw ConfigError("cross_validate: subject '" + test_seq->subject_id +
                                      "' leaks between train and test of fold " +
                                      std::to_string(fold));
                }
            }
        }

        auto model = train(train_set);
        FoldReport report;
        report.fold = fold;
        report.cm = ConfusionMatrix(num_classes);
        for (const auto* seq : test_set) {
            const std::vector<int> predicted = predict(model, *seq);
            for (std::size_t i = 0; i < seq->samples.size(); ++i) {
                const int truth = seq->samples[i].label;
                if (truth == kNoLabel) {
                    continue; // only annotated data points are considered
                }
                report.cm.add(truth, predicted[i]);
            }
        }
        if (report.cm.total() == 0) {
            throw ConfigError("cross_validate: fold " + std::to_string(fold) +
                              " has no labeled samples");
        }
        result.aggregate += report.cm;
        result.folds.push_back(std::move(report));
    }
    return result;
}

struct Canvas {
    int width = 0;
    int height = 0;
};

// 8-bit RGB image: gaze dots in red, inter-sample lines in green, a linear
// time ramp (first sample 0, last 255) stamped in blue at sample positions.
struct ScanpathImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // RGB interleaved

    ScanpathImage() = default;
    ScanpathImage(int w, int h);
    std::uint8_t& at(int x, int y, int channel) {
        return pixels[3 * (static_cast<std::size_t>(y) * width + x) + channel];
    }
    std::uint8_t at(int x, int y, int channel) const {
        return pixels[3 * (static_cast<std::size_t>(y) * width + x) + channel];
    }
};

ScanpathImage rasterize_scanpath(const GazeSequence& seq, Canvas canvas, int dot_radius = 1);

void write_png_rgb8(const ScanpathImage& image, const std::filesystem::path& path);

// Channel statistics used by the reduced stimulus-separation check:
// per-channel nonzero pixel fraction and mean intensity.
std::array<double, 6> scanpath_image_features(const ScanpathImage& image);

struct CentroidClassifier {
    std::vector<std::array<double, 6>> centroids;
    int classify(const std::array<double, 6>& features) const;
};

CentroidClassifier fit_centroid_classifier(std::span<const std::array<double, 6>> features,
                                           std::span<const int> labels, int num_classes);

} // namespace gazeconv
