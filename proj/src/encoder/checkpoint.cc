// src/encoder/checkpoint.cc

#include "sfl/encoder/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

namespace sfl {
namespace {

constexpr char kMagic[4] = {'S', 'F', 'L', '1'};

template <typename T>
void PutLe(std::ofstream &out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
bool GetLe(std::ifstream &in, T &value) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T))) return false;
  value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(bytes[i]) << (8 * i);
  return true;
}

}  // namespace

void WriteTensorFile(
    const std::filesystem::path &path,
    const std::vector<std::pair<std::string, Tensor<float>>> &tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  for (const auto &[name, t] : tensors) {
    if (t.rank() > 255) throw FormatError("tensor rank above 255: " + name);
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutLe<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) PutLe<std::uint64_t>(out, d);
    for (float v : t.values()) PutLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw Error("write failed for " + path.string());
}

NamedTensors ReadTensorFile(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": missing SFL1 magic");
  }
  NamedTensors tensors;
  while (in.peek() != std::char_traits<char>::eof()) {
    std::uint32_t len = 0;
    if (!GetLe(in, len)) throw FormatError("truncated tensor name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("truncated tensor name");
    std::uint8_t rank = 0;
    if (!GetLe(in, rank)) throw FormatError("truncated rank for " + name);
    Shape shape(rank);
    for (auto &d : shape) {
      std::uint64_t v = 0;
      if (!GetLe(in, v)) throw FormatError("truncated dims for " + name);
      d = static_cast<std::size_t>(v);
    }
    Tensor<float> t(shape);
    for (auto &v : t.values()) {
      std::uint32_t bits = 0;
      if (!GetLe(in, bits)) throw FormatError("truncated data for " + name);
      v = std::bit_cast<float>(bits);
    }
    if (!tensors.emplace(name, std::move(t)).second) {
      throw FormatError("duplicate tensor " + name);
    }
  }
  return tensors;
}

template <typename Real>
void SaveCheckpoint(const EncoderModel<Real> &model,
                    const std::filesystem::path &path) {
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  model.ForEachTensor([&](const std::string &name, const Tensor<Real> &t) {
    tensors.emplace_back(name, t.template cast<float>());
  });
  WriteTensorFile(path, tensors);
}

template <typename Real>
void LoadCheckpoint(EncoderModel<Real> &model,
                    const std::filesystem::path &path) {
  NamedTensors tensors = ReadTensorFile(path);
  std::size_t used = 0;
  model.ForEachTensor([&](const std::string &name, Tensor<Real> &t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint lacks " + name);
    if (it->second.shape() != t.shape()) {
      throw FormatError("checkpoint tensor " + name + " has shape " +
                        ShapeToString(it->second.shape()) + ", model expects " +
                        ShapeToString(t.shape()));
    }
    t = it->second.template cast<Real>();
    ++used;
  });
  if (used != tensors.size()) {
    throw FormatError("checkpoint has " +
                      std::to_string(tensors.size() - used) +
                      " tensors the model does not use");
  }
}

template void SaveCheckpoint(const EncoderModel<float> &,
                             const std::filesystem::path &);
template void SaveCheckpoint(const EncoderModel<double> &,
                             const std::filesystem::path &);
template void LoadCheckpoint(EncoderModel<float> &,
                             const std::filesystem::path &);
template void LoadCheckpoint(EncoderModel<double> &,
                             const std::filesystem::path &);

}  // namespace sfl
