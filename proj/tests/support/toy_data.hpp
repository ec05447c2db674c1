#pragma once

// Synthetic gaze corpora for training smoke tests. Labels always come from
// the velocity-threshold oracle below, never from the generator's intent,
// so a trained model is compared against an independent labeling rule.

#include <cmath>
#include <string>
#include <vector>

#include "gazeconv/gaze_data.hpp"
#include "gazeconv/rng.hpp"

namespace testsupport {

constexpr double kToyDtMs = 4.0;
constexpr double kVelocityThresholdPxPerMs = 10.0;

// Velocity-threshold oracle: a sample is a saccade when the step leading
// into it is fast; the first sample inherits the label of the second.
inline void label_by_velocity(gazeconv::GazeSequence& seq,
                              double threshold = kVelocityThresholdPxPerMs) {
    for (std::size_t i = 1; i < seq.samples.size(); ++i) {
        const auto& prev = seq.samples[i - 1];
        auto& cur = seq.samples[i];
        const double dt = std::max(cur.t - prev.t, 1e-9);
        const double dist = std::hypot(cur.x - prev.x, cur.y - prev.y);
        cur.label = dist / dt > threshold ? gazeconv::kSaccade : gazeconv::kFixation;
    }
    if (seq.samples.size() > 1) {
        seq.samples.front().label = seq.samples[1].label;
    } else if (!seq.samples.empty()) {
        seq.samples.front().label = gazeconv::kFixation;
    }
}

// Alternating fixations (small tremor around a point) and saccades (large
// ballistic jumps over a few samples).
inline gazeconv::GazeSequence make_fixation_saccade_sequence(gazeconv::Rng& rng,
                                                             int num_samples,
                                                             const std::string& subject) {
    gazeconv::GazeSequence seq;
    seq.subject_id = subject;
    double x = rng.uniform(200.0, 1000.0);
    double y = rng.uniform(200.0, 800.0);
    double t = 0.0;
    while (static_cast<int>(seq.samples.size()) < num_samples) {
        const int fixation_len = static_cast<int>(rng.uniform_int(8, 24));
        for (int i = 0; i < fixation_len && static_cast<int>(seq.samples.size()) < num_samples;
             ++i) {
            seq.samples.push_back({t, x + rng.uniform(-1.5, 1.5), y + rng.uniform(-1.5, 1.5),
                                   gazeconv::kNoLabel});
            t += kToyDtMs;
        }
        const double target_x = rng.uniform(100.0, 1100.0);
        const double target_y = rng.uniform(100.0, 900.0);
        const int saccade_len = static_cast<int>(rng.uniform_int(2, 4));
        for (int i = 1; i <= saccade_len && static_cast<int>(seq.samples.size()) < num_samples;
             ++i) {
            const double phase = static_cast<double>(i) / saccade_len;
            seq.samples.push_back({t, x + (target_x - x) * phase, y + (target_y - y) * phase,
                                   gazeconv::kNoLabel});
            t += kToyDtMs;
        }
        x = target_x;
        y = target_y;
    }
    label_by_velocity(seq);
    return seq;
}

inline std::vector<gazeconv::GazeSequence> make_fixation_saccade_corpus(
    gazeconv::Rng& rng, int num_sequences, int samples_per_sequence,
    const std::string& subject_prefix = "subject") {
    std::vector<gazeconv::GazeSequence> corpus;
    corpus.reserve(static_cast<std::size_t>(num_sequences));
    for (int i = 0; i < num_sequences; ++i) {
        corpus.push_back(make_fixation_saccade_sequence(
            rng, samples_per_sequence, subject_prefix + std::to_string(i)));
    }
    return corpus;
}

// Smooth sine/cosine path, the reconstruction toy signal.
inline gazeconv::GazeSequence make_sine_sequence(gazeconv::Rng& rng, int num_samples,
                                                 const std::string& subject) {
    gazeconv::GazeSequence seq;
    seq.subject_id = subject;
    const double amp_x = rng.uniform(150.0, 350.0);
    const double amp_y = rng.uniform(100.0, 250.0);
    const double center_x = rng.uniform(400.0, 700.0);
    const double center_y = rng.uniform(300.0, 500.0);
    const double omega_x = rng.uniform(0.002, 0.006);
    const double omega_y = rng.uniform(0.002, 0.006);
    const double phase = rng.uniform(0.0, 6.28);
    double t = 0.0;
    for (int i = 0; i < num_samples; ++i) {
        seq.samples.push_back({t, center_x + amp_x * std::sin(omega_x * t + phase),
                               center_y + amp_y * std::cos(omega_y * t), gazeconv::kNoLabel});
        t += kToyDtMs;
    }
    return seq;
}

inline std::vector<gazeconv::GazeSequence> make_sine_corpus(gazeconv::Rng& rng,
                                                            int num_sequences,
                                                            int samples_per_sequence) {
    std::vector<gazeconv::GazeSequence> corpus;
    corpus.reserve(static_cast<std::size_t>(num_sequences));
    for (int i = 0; i < num_sequences; ++i) {
        corpus.push_back(
            make_sine_sequence(rng, samples_per_sequence, "sine" + std::to_string(i)));
    }
    return corpus;
}

// Spearman rank correlation for short series without ties in practice.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double rank = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (v[j] < v[i]) {
                    rank += 1.0;
                } else if (v[j] == v[i] && j < i) {
                    rank += 1.0;
                }
            }
            r[i] = rank;
        }
        return r;
    };
    const auto rx = ranks(xs);
    const auto ry = ranks(ys);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rx[i] - ry[i];
        d2 += d * d;
    }
    const double nn = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

// Jensen-Shannon divergence (natural log) between histograms of two samples
// over shared equal-width bins.
inline double js_divergence(const std::vector<double>& a, const std::vector<double>& b,
                            int bins = 20) {
    double lo = a.empty() ? 0.0 : a.front();
    double hi = lo;
    for (double v : a) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : b) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) {
        return 0.0;
    }
    auto histogram = [&](const std::vector<double>& v) {
        std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
        for (double x : v) {
            int bin = static_cast<int>((x - lo) / (hi - lo) * bins);
            bin = std::min(std::max(bin, 0), bins - 1);
            h[static_cast<std::size_t>(bin)] += 1.0;
        }
        for (double& c : h) {
            c /= static_cast<double>(v.size());
        }
        return h;
    };
    const auto pa = histogram(a);
    const auto pb = histogram(b);
    auto kl = [&](const std::vector<double>& p, const std::vector<double>& q) {
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] > 0.0 && q[i] > 0.0) {
                sum += p[i] * std::log(p[i] / q[i]);
            }
        }
        return sum;
    };
    std::vector<double> mid(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        mid[i] = 0.5 * (pa[i] + pb[i]);
    }
    return 0.5 * kl(pa, mid) + 0.5 * kl(pb, mid);
}

} // namespace testsupport
