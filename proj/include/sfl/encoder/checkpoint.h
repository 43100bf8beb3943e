// include/sfl/encoder/checkpoint.h
//
// Flat weight file:
//
//   "SFL1"
//   repeated until EOF:
//     u32 LE   name length in bytes
//     bytes    UTF-8 name
//     u8       rank
//     u64 LE   dims[rank]
//     f32 LE   data[prod(dims)]

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "sfl/encoder/model.h"

namespace sfl {

using NamedTensors = std::map<std::string, Tensor<float>>;

void WriteTensorFile(const std::filesystem::path &path,
                     const std::vector<std::pair<std::string, Tensor<float>>>
                         &tensors);
NamedTensors ReadTensorFile(const std::filesystem::path &path);

template <typename Real>
void SaveCheckpoint(const EncoderModel<Real> &model,
                    const std::filesystem::path &path);

// Overwrites every tensor of `model` (whose structure comes from its
// config) from the file; names and shapes must match exactly.
template <typename Real>
void LoadCheckpoint(EncoderModel<Real> &model, const std::filesystem::path &path);

}  // namespace sfl
