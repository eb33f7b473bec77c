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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mitp/numerics/tensor.hpp"

namespace mitp {

// Binary parameter file shared by encoder weight files and checkpoints.
//
//   magic      8 bytes  "MITPPARM"
//   version    u32      1
//   count      u64      number of entries
//   per entry:
//     name_len u32, name bytes (UTF-8)
//     rank     u32, dims u64 x rank
//     payload  f64 x product(dims)
//
// All integers and floats are little-endian.
struct NamedArray {
  Shape shape;
  std::vector<double> values;
};

using ParamMap = std::map<std::string, NamedArray>;

void write_param_file(const std::filesystem::path& path, const ParamMap& entries);
ParamMap read_param_file(const std::filesystem::path& path);

}  // namespace mitp
