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

#include "mitp/numerics/memory.hpp"

#include <algorithm>

namespace mitp::memory {

Counters& counters() noexcept {
  thread_local Counters c;
  return c;
}

void note_alloc(std::size_t bytes) noexcept {
  auto& c = counters();
  c.live += static_cast<std::int64_t>(bytes);
  c.peak = std::max(c.peak, c.live);
}

void note_free(std::size_t bytes) noexcept {
  counters().live -= static_cast<std::int64_t>(bytes);
}

void begin_region() noexcept {
  auto& c = counters();
  c.baseline = c.live;
  c.peak = c.live;
}

std::size_t peak_memory_report() noexcept {
  const auto& c = counters();
  return c.peak > c.baseline ? static_cast<std::size_t>(c.peak - c.baseline) : 0;
}

std::size_t live_bytes() noexcept {
  const auto live = counters().live;
  return live > 0 ? static_cast<std::size_t>(live) : 0;
}

}  // namespace mitp::memory
