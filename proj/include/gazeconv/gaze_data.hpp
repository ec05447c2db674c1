#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gazeconv/rng.hpp"
#include "gazeconv/tensor.hpp"

namespace gazeconv {

// Eye-movement classes. kNoise doubles as the tracker-error class.
enum GazeLabel : int {
    kFixation = 0,
    kSaccade = 1,
    kPursuit = 2,
    kNoise = 3,
    kPsm = 4,
};

constexpr int kNumClasses = 5;
constexpr int kNoLabel = -1;

const char* label_name(int label);

struct GazeSample {
    double t = 0.0; // milliseconds, non-decreasing within a sequence
    double x = 0.0; // pixels
    double y = 0.0; // pixels
    int label = kNoLabel;
};

struct GazeSequence {
    std::string subject_id;
    std::vector<GazeSample> samples;
    std::optional<double> sample_rate_hz; // metadata only

    bool labeled() const { return !samples.empty() && samples.front().label != kNoLabel; }
};

// CSV schema: t_ms,x_px,y_px[,label], comma separated, header optional.
// label_col < 0 reads the file as unlabeled even if a fourth column exists.
struct CsvSchema {
    int t_col = 0;
    int x_col = 1;
    int y_col = 2;
    int label_col = 3;
};

struct SanitationEntry {
    std::size_t row; // 0-based sample index
    std::string reason;
};

struct SanitationReport {
    std::vector<SanitationEntry> entries;
    std::unordered_set<std::size_t> flagged_rows;

    bool flagged(std::size_t row) const { return flagged_rows.contains(row); }
    bool clean() const { return entries.empty(); }
    std::string to_text() const;
};

struct LoadedSequence {
    GazeSequence sequence;
    SanitationReport sanitation;
};

// Loads one recording. Non-finite t/x/y values are replaced by zero and
// flagged in the sanitation report. The subject id defaults to the part of
// the filename stem before the first underscore.
LoadedSequence load_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                        std::string subject_id = "");

void save_csv(const GazeSequence& seq, const std::filesystem::path& path);

// Loads every *.csv in a directory (sorted by path) or a single file.
std::vector<LoadedSequence> load_directory(const std::filesystem::path& path,
                                           const CsvSchema& schema = {});

// Depth-3 tensor in channel order (x, y, t), every value divided by 100.
Tensor to_input_tensor(const GazeSequence& seq);

// Depth-3 tensor of consecutive differences (dx, dy, dt) / 100, height n-1.
Tensor to_delta_tensor(const GazeSequence& seq);

// Inverse of to_delta_tensor given the original first sample.
GazeSequence integrate_deltas(const Tensor& deltas, const GazeSample& start,
                              std::string subject_id = "");

// Jitter multiplies every x/y value by a factor uniform in [0.98, 1.02];
// shift adds one random offset per position channel (uniform over +-10% of
// that channel's value range). The time channel is never touched.
Tensor augment(Tensor tensor, Rng& rng, bool jitter_enabled, bool shift_enabled);

struct CropSpan {
    int start = 0;
    int length = 0;
};

// Contiguous span with length uniform in [ceil(min_fraction*h), h].
CropSpan draw_crop_span(int height, Rng& rng, double min_fraction);
Tensor crop(const Tensor& tensor, int start, int length);
Tensor crop_random(const Tensor& tensor, Rng& rng, double min_fraction = 0.5);

// Groups tensor indices into batches of uniform height (in one batch all
// lengths are equal); batch order is shuffled by the rng.
std::vector<std::vector<std::size_t>> make_batches(std::span<const Tensor> tensors, Rng& rng,
                                                   std::size_t batch_size);

struct FoldPlan {
    int k = 0;
    std::map<std::string, int> assignment; // subject_id -> fold index
};

// Partitions subjects into k folds as evenly as possible; the data of one
// subject can only be in one fold.
FoldPlan make_folds(std::span<const GazeSequence> sequences, int k, Rng& rng);

std::string fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const std::string& text);

} // namespace gazeconv
