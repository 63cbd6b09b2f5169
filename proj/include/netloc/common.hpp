// Copyright 2026 The netloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

namespace netloc {

inline constexpr const char* kVersion = "0.1.0";

/// Raised when an input violates a documented precondition or invariant.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised for file and parse failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double kExact = 1e-12;
inline constexpr double kNormalization = 1e-10;
inline constexpr double kImaginary = 1e-10;
}  // namespace tol

/// Locale-independent shortest-safe rendering with 17 significant digits.
inline std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    if (res.ec != std::errc{}) throw std::runtime_error("format_double: buffer overflow");
    return std::string(buf, res.ptr);
}

/// Default worker count: NETLOC_THREADS if set, else hardware concurrency.
inline std::size_t default_threads() {
    if (const char* env = std::getenv("NETLOC_THREADS")) {
        std::size_t n = 0;
        std::string_view sv(env);
        auto res = std::from_chars(sv.data(), sv.data() + sv.size(), n);
        if (res.ec == std::errc{} && n > 0) return n;
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker, so
/// callers that write only to slot i get results independent of thread count.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = default_threads();
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += threads) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace netloc
