#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace steklovlab {

/// Violated operation precondition (bad input, mismatched grids, ...).
/// The CLI maps this to exit code 2.
struct precondition_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure at runtime (non-convergence, near-singular solve, ...).
/// The CLI maps this to exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thread cap: hardware concurrency, clamped by STEKLOV_LAB_THREADS if set.
inline unsigned thread_cap() {
  static const unsigned cap = [] {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("STEKLOV_LAB_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v < 1) v = 1;
      if (static_cast<unsigned>(v) < hw) hw = static_cast<unsigned>(v);
    }
    return hw;
  }();
  return cap;
}

/// Parallel map over [0, n). Each index is computed independently; results must
/// be written to preassigned slots so the outcome does not depend on the number
/// of threads.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned cap = thread_cap();
  if (cap <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(cap, n));
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::mutex err_mx;
  std::exception_ptr first_error = nullptr;
  for (unsigned t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mx);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// FNV-1a 64-bit checksum, used by the CLI manifest.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

/// Deterministic double formatting for text artifacts.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace steklovlab
