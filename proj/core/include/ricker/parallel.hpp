// Copyright 2026 The ricker-approx Authors
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

#pragma once

#include <cstddef>
#include <functional>

namespace ricker {

/// Worker count from RICKER_WORKERS, else std::thread::hardware_concurrency().
std::size_t default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads (0 means
/// default_workers()). Work is handed out dynamically, so callers write
/// results into index-addressed slots. If bodies throw, the exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace ricker
