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

#include <cstddef>
#include <cstdint>
#include <new>

namespace mitp::memory {

// Per-thread accounting of tensor storage. Every value and gradient buffer
// allocated by the numerics layer goes through TrackingAllocator, so a
// training run confined to one thread sees only its own bytes.
struct Counters {
  std::int64_t live = 0;
  std::int64_t peak = 0;
  std::int64_t baseline = 0;
};

Counters& counters() noexcept;

void note_alloc(std::size_t bytes) noexcept;
void note_free(std::size_t bytes) noexcept;

// Starts a measured region: the high-water mark is reset to the bytes that
// are live right now.
void begin_region() noexcept;

// High-water mark of live tensor bytes allocated since begin_region(),
// net of what was already live when the region began. 0 if nothing was
// allocated.
std::size_t peak_memory_report() noexcept;

std::size_t live_bytes() noexcept;

class Region {
 public:
  Region() noexcept { begin_region(); }
  std::size_t peak_bytes() const noexcept { return peak_memory_report(); }
};

template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    auto* p = static_cast<T*>(::operator new(n * sizeof(T)));
    note_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    note_free(n * sizeof(T));
    ::operator delete(p);
  }

  template <class U>
  bool operator==(const TrackingAllocator<U>&) const noexcept { return true; }
};

}  // namespace mitp::memory
