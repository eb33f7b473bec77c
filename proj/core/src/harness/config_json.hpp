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

#include <string>

#include <nlohmann/json.hpp>

#include "mitp/harness/config.hpp"

// JSON form of RunConfig shared by the config parser and result export.
namespace mitp::harness::detail {

nlohmann::json config_to_json(const RunConfig& config);
// `path` prefixes error messages ("" for the document root).
RunConfig config_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace mitp::harness::detail
