/**
 * Copyright 2026 The paada Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Binary network checkpoints. Layout, all integers little-endian:
//
//   "PAADA-CKPT" (10 bytes)  u32 version (1)
//   u8 activation (0 tanh, 1 relu)  u8 head (0 softmax, 1 identity)
//   u32 layer count L, then L pairs of u32 (out, in)
//   for each layer: out*in f64 weights (row-major) then out f64 biases
//
// Doubles are stored as their IEEE-754 bit patterns, so a round trip is exact.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "paada/error.hpp"
#include "paada/mlp.hpp"

namespace paada {

inline constexpr char kCheckpointMagic[] = "PAADA-CKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>)
    bits = std::bit_cast<std::uint64_t>(v);
  else
    bits = static_cast<std::uint64_t>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw IoError("checkpoint truncated");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>)
      return std::bit_cast<double>(bits);
    else
      return static_cast<T>(bits);
  }

  bool take(std::string_view s) {
    if (pos_ + s.size() > bytes_.size()) return false;
    if (std::memcmp(bytes_.data() + pos_, s.data(), s.size()) != 0) return false;
    pos_ += s.size();
    return true;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> serialize(const MlpParams& p) {
  p.validate();
  std::vector<unsigned char> out(kCheckpointMagic, kCheckpointMagic + sizeof kCheckpointMagic - 1);
  detail::put_le(out, kCheckpointVersion);
  detail::put_le(out, static_cast<std::uint8_t>(p.activation() == Activation::tanh ? 0 : 1));
  detail::put_le(out, static_cast<std::uint8_t>(p.head() == Head::softmax ? 0 : 1));
  detail::put_le(out, static_cast<std::uint32_t>(p.num_layers()));
  for (std::size_t k = 0; k < p.num_layers(); ++k) {
    detail::put_le(out, static_cast<std::uint32_t>(p.out_dim(k)));
    detail::put_le(out, static_cast<std::uint32_t>(p.in_dim(k)));
  }
  for (double v : p.flat()) detail::put_le(out, v);
  return out;
}

inline MlpParams deserialize(const std::vector<unsigned char>& bytes) {
  detail::Reader in(bytes);
  if (!in.take(std::string_view(kCheckpointMagic, sizeof kCheckpointMagic - 1)))
    throw IoError("not a checkpoint (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto act = in.get<std::uint8_t>(), head = in.get<std::uint8_t>();
  if (act > 1 || head > 1) throw IoError("checkpoint has an unknown activation or head");
  const auto layers = in.get<std::uint32_t>();
  if (layers == 0 || layers > 1024) throw IoError("checkpoint has an implausible layer count");
  std::vector<std::size_t> dims;
  for (std::uint32_t k = 0; k < layers; ++k) {
    const auto out = in.get<std::uint32_t>(), inn = in.get<std::uint32_t>();
    if (k == 0)
      dims.push_back(inn);
    else if (inn != dims.back())
      throw IoError("checkpoint layer widths do not chain");
    dims.push_back(out);
  }
  MlpParams p;
  try {
    p = MlpParams(dims, act == 0 ? Activation::tanh : Activation::relu, head == 0 ? Head::softmax : Head::identity);
  } catch (const ShapeError& e) {
    throw IoError(std::string("checkpoint shape: ") + e.what());
  }
  for (double& v : p.flat()) v = in.get<double>();
  if (!in.at_end()) throw IoError("trailing bytes after checkpoint payload");
  if (!p.all_finite()) throw NumericError("checkpoint contains non-finite parameters");
  return p;
}

inline void save_checkpoint(const MlpParams& p, const std::string& path) {
  const auto bytes = serialize(p);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const IoError& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

}  // namespace paada
