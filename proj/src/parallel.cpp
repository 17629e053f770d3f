#include "anisoflow/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

namespace anisoflow {

namespace {

std::atomic<std::size_t> g_max_threads{0};

// Below this many elements the thread start-up cost dominates.
constexpr std::size_t kMinParallelWork = std::size_t{1} << 15;

}  // namespace

void set_max_threads(std::size_t n) { g_max_threads.store(n); }

std::size_t max_threads() {
  const std::size_t n = g_max_threads.load();
  if (n != 0) return n;
  // hardware_concurrency reads sysfs on every call, so look it up once.
  static const std::size_t hardware = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return hardware;
}

void configure_threads_from_env() {
  const char* raw = std::getenv("ANISOFLOW_THREADS");
  if (raw == nullptr) return;
  std::size_t n = 0;
  const char* end = raw + std::strlen(raw);
  auto [ptr, ec] = std::from_chars(raw, end, n);
  if (ec == std::errc() && ptr == end) set_max_threads(n);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n < kMinParallelWork) {
    body(0, n);
    return;
  }
  const std::size_t threads = std::min(max_threads(), n / (kMinParallelWork / 4) + 1);
  if (threads <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads - 1);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 1; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(0, std::min(n, chunk));
  for (auto& w : workers) w.join();
}

}  // namespace anisoflow
