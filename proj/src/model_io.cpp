#include "gazeconv/model_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "gazeconv/errors.hpp"

namespace gazeconv {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'M', 'F'};

class Writer {
public:
    void u32(std::uint32_t v) {
        unsigned char bytes[4];
        for (int i = 0; i < 4; ++i) {
            bytes[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        buffer_.insert(buffer_.end(), bytes, bytes + 4);
    }

    void f64(double v) {
        unsigned char bytes[8];
        std::memcpy(bytes, &v, 8);
        buffer_.insert(buffer_.end(), bytes, bytes + 8);
    }

    void raw(const char* data, std::size_t n) {
        buffer_.insert(buffer_.end(), data, data + n);
    }

    void layer(const ConvLayer& l) {
        u32(static_cast<std::uint32_t>(l.in_depth));
        u32(static_cast<std::uint32_t>(l.out_depth));
        u32(static_cast<std::uint32_t>(l.kernel_height));
        for (double w : l.weights) {
            f64(w);
        }
        for (double b : l.bias) {
            f64(b);
        }
    }

    void write_to(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        out.write(reinterpret_cast<const char*>(buffer_.data()),
                  static_cast<std::streamsize>(buffer_.size()));
        if (!out) {
            throw IoError("write failed for " + path.string());
        }
    }

private:
    std::vector<unsigned char> buffer_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw IoError("cannot open " + path_);
        }
        buffer_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(
                     static_cast<unsigned char>(buffer_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        double v = 0.0;
        std::memcpy(&v, buffer_.data() + pos_, 8);
        pos_ += 8;
        return v;
    }

    ConvLayer layer() {
        const auto in_depth = u32();
        const auto out_depth = u32();
        const auto kernel_height = u32();
        if (in_depth == 0 || out_depth == 0 || kernel_height == 0 || in_depth > 1 << 16 ||
            out_depth > 1 << 16 || kernel_height > 1 << 16) {
            throw FormatError(path_ + ": implausible layer shape");
        }
        ConvLayer l(static_cast<int>(in_depth), static_cast<int>(out_depth),
                    static_cast<int>(kernel_height));
        for (double& w : l.weights) {
            w = f64();
        }
        for (double& b : l.bias) {
            b = f64();
        }
        return l;
    }

    void check_header(ModelKind expected) {
        need(4);
        if (std::memcmp(buffer_.data(), kMagic, 4) != 0) {
            throw FormatError(path_ + ": not a model file (bad magic)");
        }
        pos_ = 4;
        const auto version = u32();
        if (version != kModelFormatVersion) {
            throw FormatError(path_ + ": unsupported model format version " +
                              std::to_string(version));
        }
        const auto kind = u32();
        if (kind != static_cast<std::uint32_t>(expected)) {
            throw ConfigError(path_ + ": model kind " + std::to_string(kind) +
                              " does not match the requested task");
        }
    }

    void expect_end() const {
        if (pos_ != buffer_.size()) {
            throw FormatError(path_ + ": trailing bytes after model payload");
        }
    }

    const std::string& path() const { return path_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buffer_.size()) {
            throw FormatError(path_ + ": truncated model file");
        }
    }

    std::string path_;
    std::vector<char> buffer_;
    std::size_t pos_ = 0;
};

void write_header(Writer& w, ModelKind kind) {
    w.raw(kMagic, 4);
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(kind));
}

} // namespace

ModelKind peek_model_kind(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    char header[12];
    if (!in.read(header, sizeof(header))) {
        throw FormatError(path.string() + ": truncated model file");
    }
    if (std::memcmp(header, kMagic, 4) != 0) {
        throw FormatError(path.string() + ": not a model file (bad magic)");
    }
    std::uint32_t kind = 0;
    std::memcpy(&kind, header + 8, 4);
    if (kind > 2) {
        throw FormatError(path.string() + ": unknown model kind " + std::to_string(kind));
    }
    return static_cast<ModelKind>(kind);
}

void save_model(const SegModel& model, const std::filesystem::path& path) {
    Writer w;
    write_header(w, ModelKind::segment);
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (double cw : model.class_weights) {
        w.f64(cw);
    }
    for (const auto& layer : model.layers) {
        w.layer(layer);
    }
    w.write_to(path);
}

void save_model(const ReconModel& model, const std::filesystem::path& path) {
    Writer w;
    write_header(w, ModelKind::reconstruct);
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const auto& layer : model.layers) {
        w.layer(layer);
    }
    w.write_to(path);
}

void save_model(const VaeModel& model, const std::filesystem::path& path) {
    Writer w;
    write_header(w, ModelKind::generate);
    w.u32(static_cast<std::uint32_t>(model.encoder_layers.size()));
    w.u32(static_cast<std::uint32_t>(model.decoder_layers.size()));
    w.u32(model.trained ? 1 : 0);
    for (const auto& layer : model.encoder_layers) {
        w.layer(layer);
    }
    for (const auto& layer : model.decoder_layers) {
        w.layer(layer);
    }
    w.write_to(path);
}

SegModel load_seg_model(const std::filesystem::path& path) {
    Reader r(path);
    r.check_header(ModelKind::segment);
    const auto layer_count = r.u32();
    SegModel model;
    model.class_weights.resize(kNumClasses);
    for (double& cw : model.class_weights) {
        cw = r.f64();
    }
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        model.layers.push_back(r.layer());
    }
    r.expect_end();
    return model;
}

ReconModel load_recon_model(const std::filesystem::path& path) {
    Reader r(path);
    r.check_header(ModelKind::reconstruct);
    const auto layer_count = r.u32();
    ReconModel model;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        model.layers.push_back(r.layer());
    }
    r.expect_end();
    return model;
}

VaeModel load_vae_model(const std::filesystem::path& path) {
    Reader r(path);
    r.check_header(ModelKind::generate);
    const auto encoder_count = r.u32();
    const auto decoder_count = r.u32();
    const auto trained = r.u32();
    VaeModel model;
    model.trained = trained != 0;
    for (std::uint32_t i = 0; i < encoder_count; ++i) {
        model.encoder_layers.push_back(r.layer());
    }
    for (std::uint32_t i = 0; i < decoder_count; ++i) {
        model.decoder_layers.push_back(r.layer());
    }
    r.expect_end();
    return model;
}

} // namespace gazeconv
