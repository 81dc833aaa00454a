#pragma once

#include <string>
#include <vector>

#include "qproj/learn.hpp"

namespace qproj {

struct BenchRow {
  std::string method;
  int k = 0;
  double mean_loss = 0.0;
  double mean_gap = 0.0;       // mean (loss - OPT)
  double mean_solve_ms = 0.0;  // wall time per projected solve
  std::vector<double> per_instance_loss;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<std::uint64_t> seeds;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Compares random, learned, and input-aware projections on held-out
/// instances, per projection dimension in `ks`. OPT comes from the P = I
/// solve of the (gamma-perturbed) instance. Throws on an empty split.
BenchReport run_bench(const std::vector<QpInstance>& train_set,
                      const std::vector<QpInstance>& test_set, const std::vector<int>& ks,
                      const TrainConfig& cfg);

}  // namespace qproj
