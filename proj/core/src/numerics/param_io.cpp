/*
 * Copyright (c) 2026, The MITP Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mitp/numerics/param_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "mitp/numerics/error.hpp"

namespace mitp {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'I', 'T', 'P', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw IoError(fmt::format("{}: truncated parameter file", path.string()));
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_param_file(const std::filesystem::path& path, const ParamMap& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, entries.size());
  for (const auto& [name, arr] : entries) {
    if (numel(arr.shape) != arr.values.size()) {
      throw ShapeError(fmt::format("parameter '{}' has shape {} but {} values", name, shape_str(arr.shape),
                                   arr.values.size()));
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arr.shape.size()));
    for (auto d : arr.shape) put<std::uint64_t>(out, d);
    for (double v : arr.values) put<double>(out, v);
  }
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

ParamMap read_param_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(fmt::format("{}: not a parameter file (bad magic)", path.string()));
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) throw IoError(fmt::format("{}: unsupported version {}", path.string(), version));
  const auto count = get<std::uint64_t>(in, path);
  ParamMap entries;
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw IoError(fmt::format("{}: truncated name", path.string()));
    const auto rank = get<std::uint32_t>(in, path);
    NamedArray arr;
    for (std::uint32_t r = 0; r < rank; ++r) arr.shape.push_back(get<std::uint64_t>(in, path));
    const std::size_t n = numel(arr.shape);
    arr.values.resize(n);
    for (auto& v : arr.values) v = get<double>(in, path);
    entries.emplace(std::move(name), std::move(arr));
  }
  return entries;
}

}  // namespace mitp
