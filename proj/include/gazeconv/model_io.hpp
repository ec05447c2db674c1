#pragma once

#include <cstdint>
#include <filesystem>

#include "gazeconv/genvae.hpp"
#include "gazeconv/reconnet.hpp"
#include "gazeconv/segnet.hpp"

namespace gazeconv {

// Versioned binary model container shared by all three networks.
// Little-endian layout:
//
//   bytes 0..3   magic "GCMF"
//   u32          format version (currently 1)
//   u32          kind (0 = segment, 1 = reconstruct, 2 = generate)
//   kind header:
//     segment      u32 layer_count; f64 class_weights[5]
//     reconstruct  u32 layer_count
//     generate     u32 encoder_count; u32 decoder_count; u32 trained_flag
//   per layer    u32 in_depth; u32 out_depth; u32 kernel_height;
//                f64 weights[out*in*k]; f64 bias[out]
//
// Optimizer state is transient and never serialized.
enum class ModelKind : std::uint32_t {
    segment = 0,
    reconstruct = 1,
    generate = 2,
};

constexpr std::uint32_t kModelFormatVersion = 1;

ModelKind peek_model_kind(const std::filesystem::path& path);

void save_model(const SegModel& model, const std::filesystem::path& path);
void save_model(const ReconModel& model, const std::filesystem::path& path);
void save_model(const VaeModel& model, const std::filesystem::path& path);

SegModel load_seg_model(const std::filesystem::path& path);
ReconModel load_recon_model(const std::filesystem::path& path);
VaeModel load_vae_model(const std::filesystem::path& path);

} // namespace gazeconv
