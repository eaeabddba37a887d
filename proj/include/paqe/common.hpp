#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace paqe {

// Contract violations: a caller handed us data that breaks a documented
// precondition or invariant.
class contract_error : public std::runtime_error {
public:
  explicit contract_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external data (files, headers, records).
class format_error : public std::runtime_error {
public:
  explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline int& job_count() {
  static int jobs = static_cast<int>(std::thread::hardware_concurrency());
  return jobs;
}

inline void set_job_count(int jobs) { job_count() = jobs < 1 ? 1 : jobs; }

// Splits [0, n) into contiguous chunks, one per worker. Work items must write
// to disjoint locations; results are then independent of the job count.
inline void parallel_for(std::int64_t n,
                         const std::function<void(std::int64_t, std::int64_t)>& body) {
  const int jobs = job_count();
  if (n <= 0) return;
  if (jobs <= 1 || n < 2) {
    body(0, n);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(jobs, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace paqe
