#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace kpzlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

// Deterministic stream keyed by (master seed, module tag, replica). Two streams with
// different keys are statistically independent for all practical purposes.
class Stream {
 public:
  Stream(std::uint64_t seed, std::string_view tag, std::uint64_t replica = 0)
      : engine_(splitmix64(splitmix64(seed ^ fnv1a(tag)) + replica)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::generate_canonical<double, 53>(engine_); }
  std::uint64_t bits() { return engine_(); }

  // Child stream for a sub-task; keyed by this stream's next output.
  Stream fork(std::string_view tag, std::uint64_t index = 0) { return Stream(bits(), tag, index); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Worker count: explicit request, else KPZ_LAB_THREADS, else hardware concurrency. The variable
// also caps explicit requests.
inline unsigned worker_count(unsigned requested = 0) {
  long cap = 0;
  if (const char* env = std::getenv("KPZ_LAB_THREADS")) cap = std::strtol(env, nullptr, 10);
  if (requested > 0) return cap > 0 ? std::min(requested, static_cast<unsigned>(cap)) : requested;
  if (cap > 0) return static_cast<unsigned>(cap);
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, count). Results must be written by index so output is
// independent of the worker count.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = static_cast<unsigned>(std::min<std::size_t>(worker_count(threads), count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace kpzlab
