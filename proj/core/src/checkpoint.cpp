// Copyright (c) 2026 The coast Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "coast/errors.hpp"
#include "coast/segnet.hpp"

namespace coast {
namespace {

constexpr char kMagic[5] = {'C', 'O', 'A', 'S', 'T'};

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

template <class T>
T get_le(std::istream& is) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == EOF) throw FormatError("truncated checkpoint");
    v |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get_le<std::uint32_t>(is);
  if (n > (1u << 16)) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw FormatError("truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const auto params = bundle.parameters();
  put_le<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    put_string(out, p.owner);
    put_string(out, p.name);
    const auto& shape = p.tensor.shape();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put_le<std::uint64_t>(out, d);
    for (Scalar v : p.tensor.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
  }
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

void load_checkpoint(ModelBundle& bundle, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError(path.string() + " is not a coast checkpoint");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }

  std::map<std::pair<std::string, std::string>, Tensor> targets;
  for (auto& p : bundle.parameters()) targets.emplace(std::make_pair(p.owner, p.name), p.tensor);

  const auto count = get_le<std::uint64_t>(in);
  if (count != targets.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " parameters, model has " +
                      std::to_string(targets.size()));
  }
  // Parse everything before touching the bundle so a bad file leaves it intact.
  std::vector<std::pair<Tensor, std::vector<Scalar>>> staged;
  for (std::uint64_t e = 0; e < count; ++e) {
    std::string owner = get_string(in);
    std::string name = get_string(in);
    auto it = targets.find({owner, name});
    if (it == targets.end()) throw FormatError("checkpoint parameter " + owner + "/" + name + " unknown to model");
    const auto rank = get_le<std::uint32_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = get_le<std::uint64_t>(in);
    if (shape != it->second.shape()) {
      throw FormatError("checkpoint parameter " + owner + "/" + name + " has shape " + to_string(shape) +
                        ", model expects " + to_string(it->second.shape()));
    }
    std::vector<Scalar> values(numel(shape));
    for (auto& v : values) v = static_cast<Scalar>(std::bit_cast<double>(get_le<std::uint64_t>(in)));
    staged.emplace_back(it->second, std::move(values));
  }
  for (auto& [tensor, values] : staged) {
    auto dst = tensor.mutable_values();
    std::copy(values.begin(), values.end(), dst.begin());
  }
}

}  // namespace coast
