// Copyright 2026 The kws-dtw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KWS_PARALLEL_H_
#define KWS_PARALLEL_H_

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kws {

// Worker count from KWS_NUM_WORKERS, defaulting to 1.
inline int DefaultWorkers() {
  if (const char* env = std::getenv("KWS_NUM_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Items are dealt out
// in contiguous blocks; callers write results into per-index slots so output
// never depends on scheduling. The first exception thrown is rethrown.
inline void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t nthreads = std::min<size_t>(static_cast<size_t>(workers), n);
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  for (size_t w = 0; w < nthreads; ++w) {
    const size_t begin = n * w / nthreads;
    const size_t end = n * (w + 1) / nthreads;
    threads.emplace_back([&, begin, end] {
      try {
        for (size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kws

#endif  // KWS_PARALLEL_H_
