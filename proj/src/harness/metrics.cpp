// SPDX-License-Identifier: Apache-2.0
#include "rr/harness/metrics.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include "rr/error.hpp"

namespace rr::harness {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void Metrics::add(std::size_t epoch, std::string split, std::string metric, double value) {
  add(std::to_string(epoch), std::move(split), std::move(metric), value);
}

void Metrics::add(std::string epoch, std::string split, std::string metric, double value) {
  rows_.push_back({std::move(epoch), std::move(split), std::move(metric), value});
}

void Metrics::append(const Metrics& other) { rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end()); }

std::string Metrics::csv() const {
  std::string out = "epoch,split,metric,value\n";
  for (const auto& r : rows_) out += r.epoch + ',' + r.split + ',' + r.metric + ',' + format_value(r.value) + '\n';
  return out;
}

void Metrics::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path);
  f << csv();
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RATIONALREC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cap = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = worker_count(n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace rr::harness
