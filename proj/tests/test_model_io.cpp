#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gazeconv/errors.hpp"
#include "gazeconv/model_io.hpp"

using namespace gazeconv;
namespace fs = std::filesystem;

namespace {

fs::path temp(const char* name) {
    return fs::temp_directory_path() / name;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("segment model round-trips bit-exactly") {
    Rng rng(1);
    SegModel model = seg_model_init(rng);
    model.class_weights = {0.5, 1.5, 2.0, 0.25, 0.75};
    const auto path = temp("mio_seg.model");
    save_model(model, path);
    CHECK(peek_model_kind(path) == ModelKind::segment);

    const SegModel loaded = load_seg_model(path);
    REQUIRE(loaded.layers.size() == model.layers.size());
    CHECK(loaded.class_weights == model.class_weights);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        CHECK(loaded.layers[i].in_depth == model.layers[i].in_depth);
        CHECK(loaded.layers[i].out_depth == model.layers[i].out_depth);
        CHECK(loaded.layers[i].kernel_height == model.layers[i].kernel_height);
        CHECK(loaded.layers[i].weights == model.layers[i].weights);
        CHECK(loaded.layers[i].bias == model.layers[i].bias);
    }

    // save -> load -> save produces identical bytes
    const auto path2 = temp("mio_seg2.model");
    save_model(loaded, path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("reconstruction model round-trips bit-exactly") {
    Rng rng(2);
    const ReconModel model = recon_model_init(rng);
    const auto path = temp("mio_recon.model");
    save_model(model, path);
    CHECK(peek_model_kind(path) == ModelKind::reconstruct);
    const ReconModel loaded = load_recon_model(path);
    REQUIRE(loaded.layers.size() == model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        CHECK(loaded.layers[i].weights == model.layers[i].weights);
        CHECK(loaded.layers[i].bias == model.layers[i].bias);
    }
}

TEST_CASE("vae model round-trips with its trained flag") {
    Rng rng(3);
    VaeModel model = vae_model_init(rng);
    model.trained = true;
    const auto path = temp("mio_vae.model");
    save_model(model, path);
    CHECK(peek_model_kind(path) == ModelKind::generate);
    const VaeModel loaded = load_vae_model(path);
    CHECK(loaded.trained);
    REQUIRE(loaded.encoder_layers.size() == model.encoder_layers.size());
    REQUIRE(loaded.decoder_layers.size() == model.decoder_layers.size());
    for (std::size_t i = 0; i < model.encoder_layers.size(); ++i) {
        CHECK(loaded.encoder_layers[i].weights == model.encoder_layers[i].weights);
    }
    for (std::size_t i = 0; i < model.decoder_layers.size(); ++i) {
        CHECK(loaded.decoder_layers[i].weights == model.decoder_layers[i].weights);
    }
}

TEST_CASE("kind mismatch is a configuration error") {
    Rng rng(4);
    const SegModel model = seg_model_init(rng);
    const auto path = temp("mio_kind.model");
    save_model(model, path);
    CHECK_THROWS_AS(load_recon_model(path), ConfigError);
    CHECK_THROWS_AS(load_vae_model(path), ConfigError);
}

TEST_CASE("corrupt files are rejected") {
    const auto missing = temp("mio_missing.model");
    fs::remove(missing);
    CHECK_THROWS_AS(load_seg_model(missing), IoError);

    const auto garbage = temp("mio_garbage.model");
    {
        std::ofstream out(garbage, std::ios::binary);
        out << "definitely not a model";
    }
    CHECK_THROWS_AS(load_seg_model(garbage), FormatError);

    // truncate a valid file
    Rng rng(5);
    const SegModel model = seg_model_init(rng);
    const auto full = temp("mio_full.model");
    save_model(model, full);
    const std::string bytes = slurp(full);
    const auto cut = temp("mio_cut.model");
    {
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_seg_model(cut), FormatError);

    // trailing junk
    const auto padded = temp("mio_padded.model");
    {
        std::ofstream out(padded, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out << "junk";
    }
    CHECK_THROWS_AS(load_seg_model(padded), FormatError);
}
