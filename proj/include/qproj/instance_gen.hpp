#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qproj/qp_core.hpp"

namespace qproj {

enum class Family { random_pd, random_psd, lowrank_plus_box, lower_bound_family };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct GenSpec {
  Family family = Family::random_pd;
  int n = 4;
  int m = 8;
  int k = 2;
  double box_bound = 1.0;
  std::uint64_t seed = 0;
  int count = 1;
};

/// Generates instances satisfying the regularity assumptions.
/// Random families carry box rows [I; -I] with offset box_bound, so the
/// feasible region is bounded and R = box_bound * sqrt(n). The
/// lower-bound family emits exactly (n - 2k) * k instances (count is
/// ignored) with meta recording the (r, s) pair, 1-based.
std::vector<QpInstance> generate(const GenSpec& spec);

/// The stacked projection [T; I_k; -I_k] for T in {0, -1}^{(n-2k) x k}.
ProjectionMatrix lower_bound_projection(const Matrix& T);

/// Single-instance JSON round trip. load_instance throws
/// std::runtime_error naming the offending key on schema violations.
void save_instance(const std::filesystem::path& path, const QpInstance& inst);
QpInstance load_instance(const std::filesystem::path& path);

/// Writes one file per instance plus manifest.json recording the paths
/// and the generating spec.
void save_instances(const std::filesystem::path& dir,
                    const std::vector<QpInstance>& instances, const GenSpec* provenance);

/// Reads every instance listed by a manifest.json under `dir`.
std::vector<QpInstance> load_instances(const std::filesystem::path& dir);

}  // namespace qproj
