#include "gazeconv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include <zlib.h>

namespace gazeconv {

ConfusionMatrix::ConfusionMatrix(int classes) : num_classes(classes) {
    if (classes <= 0) {
        throw ConfigError("ConfusionMatrix: class count must be positive");
    }
    counts.assign(static_cast<std::size_t>(classes) * classes, 0);
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || truth >= num_classes || predicted < 0 || predicted >= num_classes) {
        throw LabelError("ConfusionMatrix: label out of range (" + std::to_string(truth) +
                         ", " + std::to_string(predicted) + ") for " +
                         std::to_string(num_classes) + " classes");
    }
    ++counts[static_cast<std::size_t>(truth) * num_classes + predicted];
}

long long ConfusionMatrix::total() const {
    long long sum = 0;
    for (long long c : counts) {
        sum += c;
    }
    return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (num_classes != other.num_classes) {
        throw ShapeError("ConfusionMatrix: cannot add matrices of different class counts");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] += other.counts[i];
    }
    return *this;
}

std::vector<ClassMetrics> recall_precision(const ConfusionMatrix& cm) {
    std::vector<ClassMetrics> metrics(static_cast<std::size_t>(cm.num_classes));
    for (int c = 0; c < cm.num_classes; ++c) {
        long long row_sum = 0;
        long long col_sum = 0;
        for (int j = 0; j < cm.num_classes; ++j) {
            row_sum += cm.at(c, j);
            col_sum += cm.at(j, c);
        }
        const long long tp = cm.at(c, c);
        auto& m = metrics[static_cast<std::size_t>(c)];
        if (row_sum > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(row_sum);
        }
        if (col_sum > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(col_sum);
        }
    }
    return metrics;
}

namespace {

std::string csv_metric(const std::optional<double>& v) {
    if (!v.has_value()) {
        return "n/a";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return buf;
}

} // namespace

std::string metrics_to_csv(std::span<const ClassMetrics> metrics) {
    std::string out = "class,recall,precision\n";
    for (std::size_t c = 0; c < metrics.size(); ++c) {
        const char* name = metrics.size() == static_cast<std::size_t>(kNumClasses)
                               ? label_name(static_cast<int>(c))
                               : nullptr;
        out += name != nullptr ? name : std::to_string(c);
        out += ',';
        out += csv_metric(metrics[c].recall);
        out += ',';
        out += csv_metric(metrics[c].precision);
        out += '\n';
    }
    return out;
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
    std::string out = "true\\predicted";
    for (int c = 0; c < cm.num_classes; ++c) {
        out += ',';
        out += std::to_string(c);
    }
    out += '\n';
    for (int t = 0; t < cm.num_classes; ++t) {
        out += std::to_string(t);
        for (int p = 0; p < cm.num_classes; ++p) {
            out += ',';
            out += std::to_string(cm.at(t, p));
        }
        out += '\n';
    }
    return out;
}

ScanpathImage::ScanpathImage(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
        throw ConfigError("ScanpathImage: canvas must be positive");
    }
    pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

namespace {

void stamp_disc(ScanpathImage& image, int cx, int cy, int radius, int channel,
                std::uint8_t value) {
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > radius * radius) {
                continue;
            }
            const int x = cx + dx;
            const int y = cy + dy;
            if (x < 0 || x >= image.width || y < 0 || y >= image.height) {
                continue; // clipped
            }
            image.at(x, y, channel) = value;
        }
    }
}

// Integer line stepping (Bresenham); pixels outside the canvas are skipped.
void draw_line(ScanpathImage& image, int x0, int y0, int x1, int y1, int channel,
               std::uint8_t value) {
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0;
    int y = y0;
    while (true) {
        if (x >= 0 && x < image.width && y >= 0 && y < image.height) {
            image.at(x, y, channel) = value;
        }
        if (x == x1 && y == y1) {
            break;
        }
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

} // namespace

ScanpathImage rasterize_scanpath(const GazeSequence& seq, Canvas canvas, int dot_radius) {
    if (seq.samples.empty()) {
        throw LengthError("rasterize_scanpath: empty sequence");
    }
    ScanpathImage image(canvas.width, canvas.height);

    std::vector<int> px(seq.samples.size());
    std::vector<int> py(seq.samples.size());
    for (std::size_t i = 0; i < seq.samples.size(); ++i) {
        px[i] = static_cast<int>(std::lround(seq.samples[i].x));
        py[i] = static_cast<int>(std::lround(seq.samples[i].y));
    }

    // Green: the path as lines between consecutive gaze points.
    for (std::size_t i = 0; i + 1 < seq.samples.size(); ++i) {
        draw_line(image, px[i], py[i], px[i + 1], py[i + 1], 1, 255);
    }

    // Red: raw gaze data as dots; blue: time ramp stamped at the same spots.
    const double t0 = seq.samples.front().t;
    const double t1 = seq.samples.back().t;
    const double t_span = t1 - t0;
    for (std::size_t i = 0; i < seq.samples.size(); ++i) {
        const double phase = t_span > 0.0 ? (seq.samples[i].t - t0) / t_span : 0.0;
        const auto blue = static_cast<std::uint8_t>(std::lround(255.0 * phase));
        stamp_disc(image, px[i], py[i], dot_radius, 0, 255);
        stamp_disc(image, px[i], py[i], dot_radius, 2, blue);
    }
    return image;
}

namespace {

void push_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& payload) {
    push_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(0, out.data() + crc_start, static_cast<uInt>(4 + payload.size()));
    push_u32_be(out, static_cast<std::uint32_t>(crc));
}

} // namespace

void write_png_rgb8(const ScanpathImage& image, const std::filesystem::path& path) {
    // Raw scanlines, filter byte 0 per row.
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(image.height) * (image.width * 3 + 1));
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = image.pixels.data() +
                                  static_cast<std::size_t>(y) * image.width * 3;
        raw.insert(raw.end(), row, row + static_cast<std::size_t>(image.width) * 3);
    }

    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(compressed_size);
    if (compress2(compressed.data(), &compressed_size, raw.data(),
                  static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION) != Z_OK) {
        throw IoError("png: zlib compression failed");
    }
    compressed.resize(compressed_size);

    std::vector<std::uint8_t> png;
    const std::uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    png.insert(png.end(), signature, signature + 8);

    std::vector<std::uint8_t> ihdr;
    push_u32_be(ihdr, static_cast<std::uint32_t>(image.width));
    push_u32_be(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // color type: truecolor RGB
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter
    ihdr.push_back(0); // interlace
    push_chunk(png, "IHDR", ihdr);
    push_chunk(png, "IDAT", compressed);
    push_chunk(png, "IEND", {});

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(png.data()),
              static_cast<std::streamsize>(png.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::array<double, 6> scanpath_image_features(const ScanpathImage& image) {
    std::array<double, 6> features{};
    const std::size_t pixel_count = static_cast<std::size_t>(image.width) * image.height;
    for (int channel = 0; channel < 3; ++channel) {
        std::size_t nonzero = 0;
        double sum = 0.0;
        for (std::size_t p = 0; p < pixel_count; ++p) {
            const std::uint8_t v = image.pixels[3 * p + static_cast<std::size_t>(channel)];
            if (v != 0) {
                ++nonzero;
            }
            sum += v;
        }
        features[static_cast<std::size_t>(channel)] =
            static_cast<double>(nonzero) / static_cast<double>(pixel_count);
        features[static_cast<std::size_t>(channel) + 3] =
            sum / (255.0 * static_cast<double>(pixel_count));
    }
    return features;
}

int CentroidClassifier::classify(const std::array<double, 6>& features) const {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        double dist = 0.0;
        for (std::size_t k = 0; k < features.size(); ++k) {
            const double d = features[k] - centroids[c][k];
            dist += d * d;
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<int>(c);
        }
    }
    return best;
}

CentroidClassifier fit_centroid_classifier(std::span<const std::array<double, 6>> features,
                                           std::span<const int> labels, int num_classes) {
    if (features.size() != labels.size()) {
        throw ShapeError("fit_centroid_classifier: features/labels size mismatch");
    }
    CentroidClassifier classifier;
    classifier.centroids.assign(static_cast<std::size_t>(num_classes), {});
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        for (std::size_t k = 0; k < features[i].size(); ++k) {
            classifier.centroids[c][k] += features[i][k];
        }
        ++counts[c];
    }
    for (std::size_t c = 0; c < classifier.centroids.size(); ++c) {
        if (counts[c] == 0) {
            throw DataError("fit_centroid_classifier: class " + std::to_string(c) +
                            " has no examples");
        }
        for (double& v : classifier.centroids[c]) {
            v /= static_cast<double>(counts[c]);
        }
    }
    return classifier;
}

} // namespace gazeconv
