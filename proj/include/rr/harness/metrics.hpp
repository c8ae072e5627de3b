// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace rr::harness {

/// Fixed-precision rendering used in every CSV, so equal runs give equal bytes.
std::string format_value(double v);

struct MetricRow {
  std::string epoch;
  std::string split;
  std::string metric;
  double value = 0.0;
};

/// Rows of `epoch,split,metric,value`.
class Metrics {
 public:
  void add(std::size_t epoch, std::string split, std::string metric, double value);
  void add(std::string epoch, std::string split, std::string metric, double value);
  void append(const Metrics& other);

  const std::vector<MetricRow>& rows() const { return rows_; }
  std::string csv() const;
  void write_csv(const std::string& path) const;

 private:
  std::vector<MetricRow> rows_;
};

/// Worker count for `jobs` independent runs: capped by RATIONALREC_THREADS
/// (when set to a positive integer) and the hardware concurrency.
std::size_t worker_count(std::size_t jobs);

/// Runs fn(0..n-1) on worker_count(n) threads. Results must be written to
/// per-index slots. The lowest-index exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rr::harness
