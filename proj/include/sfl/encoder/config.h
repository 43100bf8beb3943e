// include/sfl/encoder/config.h

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace sfl {

enum class Variant { kBaseline, kSoft, kHard };

std::string_view VariantName(Variant v);
Variant ParseVariant(std::string_view name);

// Architecture of one encoder. Defaults are the full-size model: 12
// Conformer blocks of width 512 with 8 heads, FFN 2048, depthwise kernel 31,
// deformable kernel 5 with 8 groups, 80-dim features at a 10 ms hop.
struct EncoderConfig {
  Variant variant = Variant::kBaseline;
  std::size_t d_model = 512;
  std::size_t layers = 12;
  std::size_t heads = 8;
  std::size_t ffn_dim = 2048;
  std::size_t conv_kernel = 31;
  std::size_t deform_kernel = 5;
  std::size_t deform_groups = 8;
  std::size_t feature_dim = 80;
  std::size_t frame_hop_ms = 10;
  std::size_t subsample_factor = 4;

  void Validate() const;

  static EncoderConfig FullSize(Variant v = Variant::kBaseline) {
    EncoderConfig c;
    c.variant = v;
    return c;
  }
  // d=16, 2 layers, 2 heads: small enough for exhaustive property tests.
  static EncoderConfig Toy(Variant v = Variant::kBaseline);
};

void to_json(nlohmann::json &j, const EncoderConfig &c);
void from_json(const nlohmann::json &j, EncoderConfig &c);

EncoderConfig LoadConfig(const std::filesystem::path &path);

// Chunk of chunk_ms milliseconds of audio; one of 160, 320, 640, 1280.
struct ChunkSpec {
  std::size_t chunk_ms = 1280;
  std::size_t raw_frames = 128;        // feature frames before subsampling
  std::size_t frames_per_chunk = 32;   // encoder frames after subsampling

  static ChunkSpec FromMs(std::size_t chunk_ms, const EncoderConfig &config);
};

}  // namespace sfl
