// src/encoder/config.cc

#include "sfl/encoder/config.h"

#include <fstream>

#include "sfl/numerics/errors.h"

namespace sfl {

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kBaseline:
      return "baseline";
    case Variant::kSoft:
      return "soft";
    case Variant::kHard:
      return "hard";
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "soft") return Variant::kSoft;
  if (name == "hard") return Variant::kHard;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected baseline, soft or hard)");
}

void EncoderConfig::Validate() const {
  auto positive = [](std::size_t v, const char *name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(d_model, "d_model");
  positive(layers, "layers");
  positive(heads, "heads");
  positive(ffn_dim, "ffn_dim");
  positive(feature_dim, "feature_dim");
  positive(frame_hop_ms, "frame_hop_ms");
  if (conv_kernel % 2 == 0) {
    throw ConfigError("conv_kernel must be odd, got " +
                      std::to_string(conv_kernel));
  }
  if (deform_kernel % 2 == 0) {
    throw ConfigError("deform_kernel must be odd, got " +
                      std::to_string(deform_kernel));
  }
  if (subsample_factor != 4) {
    throw ConfigError("subsample_factor must be 4 (two stride-2 layers), got " +
                      std::to_string(subsample_factor));
  }
  if (variant == Variant::kBaseline && d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " not divisible by heads " + std::to_string(heads));
  }
  if (variant == Variant::kSoft &&
      (deform_groups == 0 || d_model % deform_groups != 0)) {
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " not divisible by deform_groups " +
                      std::to_string(deform_groups));
  }
}

EncoderConfig EncoderConfig::Toy(Variant v) {
  EncoderConfig c;
  c.variant = v;
  c.d_model = 16;
  c.layers = 2;
  c.heads = 2;
  c.ffn_dim = 64;
  c.feature_dim = 8;
  return c;
}

void to_json(nlohmann::json &j, const EncoderConfig &c) {
  j = nlohmann::json{{"variant", std::string(VariantName(c.variant))},
                     {"d_model", c.d_model},
                     {"layers", c.layers},
                     {"heads", c.heads},
                     {"ffn_dim", c.ffn_dim},
                     {"conv_kernel", c.conv_kernel},
                     {"deform_kernel", c.deform_kernel},
                     {"deform_groups", c.deform_groups},
                     {"feature_dim", c.feature_dim},
                     {"frame_hop_ms", c.frame_hop_ms},
                     {"subsample_factor", c.subsample_factor}};
}

void from_json(const nlohmann::json &j, EncoderConfig &c) {
  if (!j.is_object()) throw ConfigError("encoder config must be a JSON object");
  for (const auto &[key, value] : j.items()) {
    auto read = [&](std::size_t &field) {
      if (!value.is_number_unsigned()) {
        throw ConfigError("config field '" + key +
                          "' must be a non-negative integer");
      }
      field = value.get<std::size_t>();
    };
    if (key == "variant") {
      if (!value.is_string()) throw ConfigError("config field 'variant' must be a string");
      c.variant = ParseVariant(value.get<std::string>());
    } else if (key == "d_model") {
      read(c.d_model);
    } else if (key == "layers") {
      read(c.layers);
    } else if (key == "heads") {
      read(c.heads);
    } else if (key == "ffn_dim") {
      read(c.ffn_dim);
    } else if (key == "conv_kernel") {
      read(c.conv_kernel);
    } else if (key == "deform_kernel") {
      read(c.deform_kernel);
    } else if (key == "deform_groups") {
      read(c.deform_groups);
    } else if (key == "feature_dim") {
      read(c.feature_dim);
    } else if (key == "frame_hop_ms") {
      read(c.frame_hop_ms);
    } else if (key == "subsample_factor") {
      read(c.subsample_factor);
    } else {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
}

EncoderConfig LoadConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  EncoderConfig c = j.get<EncoderConfig>();
  c.Validate();
  return c;
}

ChunkSpec ChunkSpec::FromMs(std::size_t chunk_ms, const EncoderConfig &config) {
  if (chunk_ms != 160 && chunk_ms != 320 && chunk_ms != 640 &&
      chunk_ms != 1280) {
    throw ConfigError("chunk size must be 160, 320, 640 or 1280 ms, got " +
                      std::to_string(chunk_ms));
  }
  const std::size_t frame_ms = config.frame_hop_ms * config.subsample_factor;
  if (chunk_ms % frame_ms != 0) {
    throw ConfigError("chunk of " + std::to_string(chunk_ms) +
                      " ms is not a whole number of " +
                      std::to_string(frame_ms) + " ms encoder frames");
  }
  ChunkSpec spec;
  spec.chunk_ms = chunk_ms;
  spec.raw_frames = chunk_ms / config.frame_hop_ms;
  spec.frames_per_chunk = chunk_ms / frame_ms;
  return spec;
}

}  // namespace sfl
