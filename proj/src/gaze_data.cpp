#include "gazeconv/gaze_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gazeconv/errors.hpp"

namespace gazeconv {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(current);
            current.clear();
        } else if (ch != '\r') {
            current += ch;
        }
    }
    fields.push_back(current);
    for (auto& f : fields) {
        const auto begin = f.find_first_not_of(" \t");
        const auto end = f.find_last_not_of(" \t");
        f = begin == std::string::npos ? std::string() : f.substr(begin, end - begin + 1);
    }
    return fields;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) {
        return false;
    }
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size();
}

std::string default_subject_id(const std::filesystem::path& path) {
    const std::string stem = path.stem().string();
    const auto underscore = stem.find('_');
    return underscore == std::string::npos ? stem : stem.substr(0, underscore);
}

} // namespace

const char* label_name(int label) {
    switch (label) {
        case kFixation: return "fixation";
        case kSaccade: return "saccade";
        case kPursuit: return "pursuit";
        case kNoise: return "noise";
        case kPsm: return "psm";
        default: return "unlabeled";
    }
}

std::string SanitationReport::to_text() const {
    std::string out;
    for (const auto& e : entries) {
        out += std::to_string(e.row);
        out += '\t';
        out += e.reason;
        out += '\n';
    }
    return out;
}

LoadedSequence load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                        std::string subject_id) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }

    LoadedSequence result;
    result.sequence.subject_id =
        subject_id.empty() ? default_subject_id(path) : std::move(subject_id);

    const int required_cols = std::max({schema.t_col, schema.x_col, schema.y_col}) + 1;
    std::string line;
    std::size_t file_line = 0;
    bool header_checked = false;
    bool label_presence_known = false;
    bool has_labels = false;
    double prev_t = 0.0;
    bool have_prev_t = false;

    while (std::getline(in, line)) {
        ++file_line;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto fields = split_fields(line);

        if (!header_checked) {
            header_checked = true;
            double probe = 0.0;
            if (static_cast<int>(fields.size()) < required_cols ||
                !parse_double(fields[static_cast<std::size_t>(schema.t_col)], probe)) {
                continue; // header row
            }
        }

        if (static_cast<int>(fields.size()) < required_cols) {
            throw FormatError(path.string() + ": line " + std::to_string(file_line) +
                              " has " + std::to_string(fields.size()) + " columns, need " +
                              std::to_string(required_cols));
        }

        const std::size_t row = result.sequence.samples.size();
        GazeSample sample;
        struct Column {
            const char* name;
            int index;
            double* target;
        };
        const Column columns[] = {{"t", schema.t_col, &sample.t},
                                  {"x", schema.x_col, &sample.x},
                                  {"y", schema.y_col, &sample.y}};
        bool t_finite = true;
        for (const auto& col : columns) {
            double value = 0.0;
            if (!parse_double(fields[static_cast<std::size_t>(col.index)], value)) {
                throw FormatError(path.string() + ": line " + std::to_string(file_line) +
                                  ": column '" + col.name + "' is not a number: '" +
                                  fields[static_cast<std::size_t>(col.index)] + "'");
            }
            if (!std::isfinite(value)) {
                // Non-finite inputs corrupt every model downstream; zero them
                // and record the row so training can avoid it.
                result.sanitation.entries.push_back(
                    {row, std::string(col.name) + " non-finite, set to zero"});
                result.sanitation.flagged_rows.insert(row);
                value = 0.0;
                if (col.target == &sample.t) {
                    t_finite = false;
                }
            }
            *col.target = value;
        }

        // Timestamps must be non-decreasing; zeroed (flagged) rows are
        // placeholders and do not participate in the ordering check.
        if (t_finite) {
            if (have_prev_t && sample.t < prev_t) {
                throw FormatError(path.string() + ": line " + std::to_string(file_line) +
                                  ": timestamp " + format_double(sample.t) +
                                  " decreases below " + format_double(prev_t));
            }
            prev_t = sample.t;
            have_prev_t = true;
        }

        const bool row_has_label =
            schema.label_col >= 0 && static_cast<int>(fields.size()) > schema.label_col &&
            !fields[static_cast<std::size_t>(schema.label_col)].empty();
        if (!label_presence_known) {
            label_presence_known = true;
            has_labels = row_has_label;
        } else if (row_has_label != has_labels) {
            throw FormatError(path.string() + ": line " + std::to_string(file_line) +
                              ": mixed labeled and unlabeled rows");
        }
        if (row_has_label) {
            double raw = 0.0;
            if (!parse_double(fields[static_cast<std::size_t>(schema.label_col)], raw) ||
                raw != std::floor(raw) || raw < 0 || raw >= kNumClasses) {
                throw FormatError(path.string() + ": line " + std::to_string(file_line) +
                                  ": label must be an integer in 0.." +
                                  std::to_string(kNumClasses - 1) + ", got '" +
                                  fields[static_cast<std::size_t>(schema.label_col)] + "'");
            }
            sample.label = static_cast<int>(raw);
        }

        result.sequence.samples.push_back(sample);
    }

    if (result.sequence.samples.empty()) {
        throw FormatError(path.string() + ": no data rows");
    }
    return result;
}

void save_csv(const GazeSequence& seq, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    const bool labeled = seq.labeled();
    out << (labeled ? "t_ms,x_px,y_px,label\n" : "t_ms,x_px,y_px\n");
    for (const auto& s : seq.samples) {
        out << format_double(s.t) << ',' << format_double(s.x) << ',' << format_double(s.y);
        if (labeled) {
            out << ',' << s.label;
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::vector<LoadedSequence> load_directory(const std::filesystem::path& path,
                                           const CsvSchema& schema) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (std::filesystem::exists(path)) {
        files.push_back(path);
    } else {
        throw IoError("no such file or directory: " + path.string());
    }
    if (files.empty()) {
        throw DataError("no .csv files in " + path.string());
    }
    std::vector<LoadedSequence> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        out.push_back(load_csv(f, schema));
    }
    return out;
}

Tensor to_input_tensor(const GazeSequence& seq) {
    if (seq.samples.empty()) {
        throw LengthError("to_input_tensor: empty sequence");
    }
    const int n = static_cast<int>(seq.samples.size());
    Tensor t(3, n);
    for (int i = 0; i < n; ++i) {
        const auto& s = seq.samples[static_cast<std::size_t>(i)];
        t.at(0, i) = s.x / 100.0;
        t.at(1, i) = s.y / 100.0;
        t.at(2, i) = s.t / 100.0;
    }
    return t;
}

Tensor to_delta_tensor(const GazeSequence& seq) {
    if (seq.samples.size() < 2) {
        throw LengthError("to_delta_tensor: need at least 2 samples, got " +
                          std::to_string(seq.samples.size()));
    }
    const int n = static_cast<int>(seq.samples.size()) - 1;
    Tensor t(3, n);
    for (int i = 0; i < n; ++i) {
        const auto& a = seq.samples[static_cast<std::size_t>(i)];
        const auto& b = seq.samples[static_cast<std::size_t>(i) + 1];
        t.at(0, i) = (b.x - a.x) / 100.0;
        t.at(1, i) = (b.y - a.y) / 100.0;
        t.at(2, i) = (b.t - a.t) / 100.0;
    }
    return t;
}

GazeSequence integrate_deltas(const Tensor& deltas, const GazeSample& start,
                              std::string subject_id) {
    if (deltas.depth != 3) {
        throw ShapeError("integrate_deltas: delta tensor must have depth 3");
    }
    GazeSequence seq;
    seq.subject_id = std::move(subject_id);
    seq.samples.reserve(static_cast<std::size_t>(deltas.height) + 1);
    GazeSample current = start;
    current.label = kNoLabel;
    seq.samples.push_back(current);
    for (int i = 0; i < deltas.height; ++i) {
        current.x += deltas.at(0, i) * 100.0;
        current.y += deltas.at(1, i) * 100.0;
        current.t += deltas.at(2, i) * 100.0;
        seq.samples.push_back(current);
    }
    return seq;
}

Tensor augment(Tensor tensor, Rng& rng, bool jitter_enabled, bool shift_enabled) {
    if (tensor.depth != 3) {
        throw ShapeError("augment: expected depth-3 tensor, got depth " +
                         std::to_string(tensor.depth));
    }
    if (jitter_enabled) {
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < tensor.height; ++i) {
                tensor.at(c, i) *= rng.uniform(0.98, 1.02);
            }
        }
    }
    if (shift_enabled) {
        for (int c = 0; c < 2; ++c) {
            double lo = tensor.at(c, 0);
            double hi = lo;
            for (int i = 1; i < tensor.height; ++i) {
                lo = std::min(lo, tensor.at(c, i));
                hi = std::max(hi, tensor.at(c, i));
            }
            const double bound = 0.1 * (hi - lo);
            const double offset = rng.uniform(-bound, bound);
            for (int i = 0; i < tensor.height; ++i) {
                tensor.at(c, i) += offset;
            }
        }
    }
    return tensor;
}

CropSpan draw_crop_span(int height, Rng& rng, double min_fraction) {
    if (height < 2) {
        throw LengthError("draw_crop_span: height must be >= 2");
    }
    if (min_fraction <= 0.0 || min_fraction > 1.0) {
        throw ConfigError("draw_crop_span: min_fraction must lie in (0, 1]");
    }
    const int min_len = static_cast<int>(std::ceil(min_fraction * height));
    const int length = static_cast<int>(rng.uniform_int(min_len, height));
    const int start = static_cast<int>(rng.uniform_int(0, height - length));
    return {start, length};
}

Tensor crop(const Tensor& tensor, int start, int length) {
    if (start < 0 || length <= 0 || start + length > tensor.height) {
        throw LengthError("crop: span [" + std::to_string(start) + ", " +
                          std::to_string(start + length) + ") outside height " +
                          std::to_string(tensor.height));
    }
    Tensor out(tensor.depth, length);
    for (int c = 0; c < tensor.depth; ++c) {
        for (int i = 0; i < length; ++i) {
            out.at(c, i) = tensor.at(c, start + i);
        }
    }
    return out;
}

Tensor crop_random(const Tensor& tensor, Rng& rng, double min_fraction) {
    const CropSpan span = draw_crop_span(tensor.height, rng, min_fraction);
    return crop(tensor, span.start, span.length);
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const Tensor> tensors, Rng& rng,
                                                   std::size_t batch_size) {
    if (batch_size == 0) {
        throw ConfigError("make_batches: batch_size must be >= 1");
    }
    std::vector<std::size_t> order(tensors.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    rng.shuffle(order);

    std::map<int, std::vector<std::size_t>> buckets;
    for (std::size_t idx : order) {
        buckets[tensors[idx].height].push_back(idx);
    }

    std::vector<std::vector<std::size_t>> batches;
    for (auto& [height, members] : buckets) {
        for (std::size_t pos = 0; pos < members.size(); pos += batch_size) {
            const std::size_t end = std::min(pos + batch_size, members.size());
            batches.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(pos),
                                 members.begin() + static_cast<std::ptrdiff_t>(end));
        }
    }
    rng.shuffle(batches);
    return batches;
}

FoldPlan make_folds(std::span<const GazeSequence> sequences, int k, Rng& rng) {
    if (k < 1) {
        throw ConfigError("make_folds: k must be >= 1");
    }
    std::vector<std::string> subjects;
    for (const auto& seq : sequences) {
        if (std::find(subjects.begin(), subjects.end(), seq.subject_id) == subjects.end()) {
            subjects.push_back(seq.subject_id);
        }
    }
    if (static_cast<int>(subjects.size()) < k) {
        throw ConfigError("make_folds: " + std::to_string(subjects.size()) +
                          " distinct subjects but k=" + std::to_string(k));
    }
    rng.shuffle(subjects);
    FoldPlan plan;
    plan.k = k;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        plan.assignment[subjects[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return plan;
}

std::string fold_plan_to_json(const FoldPlan& plan) {
    nlohmann::json j;
    j["k"] = plan.k;
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto& [subject, fold] : plan.assignment) {
        assignment[subject] = fold;
    }
    j["assignment"] = assignment;
    return j.dump(2) + "\n";
}

FoldPlan fold_plan_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("fold plan: invalid JSON: ") + e.what());
    }
    FoldPlan plan;
    plan.k = j.at("k").get<int>();
    for (const auto& [subject, fold] : j.at("assignment").items()) {
        plan.assignment[subject] = fold.get<int>();
    }
    return plan;
}

} // namespace gazeconv
