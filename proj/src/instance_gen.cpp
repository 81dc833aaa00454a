#include "qproj/instance_gen.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace qproj {

using nlohmann::json;

std::string family_name(Family f) {
  switch (f) {
    case Family::random_pd: return "random_pd";
    case Family::random_psd: return "random_psd";
    case Family::lowrank_plus_box: return "lowrank_plus_box";
    case Family::lower_bound_family: return "lower_bound_family";
  }
  return "unknown";
}

Family family_from_name(const std::string& name) {
  if (name == "random_pd") return Family::random_pd;
  if (name == "random_psd") return Family::random_psd;
  if (name == "lowrank_plus_box" || name == "lowrank") return Family::lowrank_plus_box;
  if (name == "lower_bound_family" || name == "lower_bound") return Family::lower_bound_family;
  throw std::runtime_error("unknown family: " + name);
}

namespace {

void set_regularity_bounds(QpInstance& inst, double box_bound) {
  const auto n = inst.n();
  inst.R = box_bound * std::sqrt(static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q, Eigen::EigenvaluesOnly);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  inst.H = 0.5 * inst.R * inst.R * lmax + inst.c.norm() * inst.R;
}

// Constraint block shared by the random families: box rows [I; -I] with
// offset box_bound, then (m - 2n) random unit rows with strictly
// positive offsets so the origin stays strictly feasible.
void fill_constraints(QpInstance& inst, int m, double box_bound, std::mt19937_64& rng) {
  const auto n = inst.n();
  if (m < 2 * n) throw std::invalid_argument("generate: random families need m >= 2n for the box rows");
  inst.A = Matrix::Zero(m, n);
  inst.b = Vector::Zero(m);
  inst.A.topRows(n) = Matrix::Identity(n, n);
  inst.A.middleRows(n, n) = -Matrix::Identity(n, n);
  inst.b.head(2 * n).setConstant(box_bound);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> offset(0.1, 1.0);
  for (int i = 2 * static_cast<int>(n); i < m; ++i) {
    Vector row(n);
    for (Eigen::Index j = 0; j < n; ++j) row(j) = gauss(rng);
    inst.A.row(i) = row.normalized();
    inst.b(i) = offset(rng);
  }
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = gauss(rng);
  return g;
}

void normalize_curvature(Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmax > 0.0) Q /= lmax;
}

QpInstance make_random(const GenSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = spec.n;
  QpInstance inst;
  switch (spec.family) {
    case Family::random_pd: {
      Matrix g = gaussian_matrix(n, n, rng);
      inst.Q = g.transpose() * g + 1e-3 * Matrix::Identity(n, n);
      break;
    }
    case Family::random_psd: {
      const Eigen::Index r = std::max<Eigen::Index>(1, n / 2);
      Matrix g = gaussian_matrix(r, n, rng);
      inst.Q = g.transpose() * g;
      break;
    }
    case Family::lowrank_plus_box: {
      Matrix g = gaussian_matrix(1, n, rng);
      inst.Q = g.transpose() * g + 1e-3 * Matrix::Identity(n, n);
      break;
    }
    default:
      throw std::logic_error("make_random: not a random family");
  }
  normalize_curvature(inst.Q);
  inst.Q = 0.5 * (inst.Q + inst.Q.transpose()).eval();
  inst.c = gaussian_matrix(n, 1, rng).col(0).normalized();
  fill_constraints(inst, spec.m, spec.box_bound, rng);
  set_regularity_bounds(inst, spec.box_bound);
  inst.meta = family_name(spec.family);
  return inst;
}

}  // namespace

std::vector<QpInstance> generate(const GenSpec& spec) {
  if (spec.n <= 0 || spec.m <= 0 || spec.k <= 0) {
    throw std::invalid_argument("generate: dimensions must be positive");
  }
  std::vector<QpInstance> out;

  if (spec.family == Family::lower_bound_family) {
    const int n = spec.n;
    const int k = spec.k;
    if (n <= 2 * k) throw std::invalid_argument("generate: lower_bound_family needs n > 2k");
    if (spec.m != 2 * k) throw std::invalid_argument("generate: lower_bound_family needs m = 2k");
    const int d = n - 2 * k;
    for (int r = 1; r <= d; ++r) {
      for (int s = 1; s <= k; ++s) {
        QpInstance inst;
        inst.Q = Matrix::Zero(n, n);
        inst.c = Vector::Zero(n);
        inst.c(r - 1) = 1.0;
        inst.A = Matrix::Zero(2 * k, n);
        inst.A.rightCols(2 * k) = Matrix::Identity(2 * k, 2 * k);
        inst.b = Vector::Zero(2 * k);
        inst.b(s - 1) = 1.0;
        // R bounds the projected feasible image under the [T; I; -I]
        // projections: ||Py||^2 <= (n - 2k) + 2 for y in [0, 1]^k with
        // one nonzero coordinate.
        inst.R = std::sqrt(static_cast<double>(d + 2));
        inst.H = 1.0;
        inst.meta = "lower_bound r=" + std::to_string(r) + " s=" + std::to_string(s);
        out.push_back(std::move(inst));
      }
    }
    return out;
  }

  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    out.push_back(make_random(spec, spec.seed + static_cast<std::uint64_t>(i)));
  }
  return out;
}

ProjectionMatrix lower_bound_projection(const Matrix& T) {
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    for (Eigen::Index j = 0; j < T.cols(); ++j) {
      if (T(i, j) != 0.0 && T(i, j) != -1.0) {
        throw std::invalid_argument("lower_bound_projection: T entries must be 0 or -1");
      }
    }
  }
  const Eigen::Index k = T.cols();
  Matrix P(T.rows() + 2 * k, k);
  P.topRows(T.rows()) = T;
  P.middleRows(T.rows(), k) = Matrix::Identity(k, k);
  P.bottomRows(k) = -Matrix::Identity(k, k);
  return ProjectionMatrix{P};
}

namespace {

std::vector<double> to_rowmajor(const Matrix& mat) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(mat.size()));
  for (Eigen::Index i = 0; i < mat.rows(); ++i)
    for (Eigen::Index j = 0; j < mat.cols(); ++j) out.push_back(mat(i, j));
  return out;
}

json instance_to_json(const QpInstance& inst) {
  json j;
  j["n"] = inst.n();
  j["m"] = inst.m();
  j["Q"] = to_rowmajor(inst.Q);
  j["c"] = std::vector<double>(inst.c.data(), inst.c.data() + inst.c.size());
  j["A"] = to_rowmajor(inst.A);
  j["b"] = std::vector<double>(inst.b.data(), inst.b.data() + inst.b.size());
  j["R"] = inst.R;
  j["H"] = inst.H;
  if (!inst.meta.empty()) j["meta"] = inst.meta;
  return j;
}

const json& require_key(const json& j, const char* key, const std::filesystem::path& path) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::runtime_error(path.string() + ": missing key \"" + key + "\"");
  }
  return *it;
}

Matrix matrix_from_json(const json& arr, Eigen::Index rows, Eigen::Index cols,
                        const char* key, const std::filesystem::path& path) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols) {
    throw std::runtime_error(path.string() + ": key \"" + key + "\" must be a flat array of " +
                             std::to_string(rows * cols) + " numbers");
  }
  Matrix mat(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = arr[static_cast<std::size_t>(idx++)].get<double>();
  return mat;
}

QpInstance instance_from_json(const json& j, const std::filesystem::path& path) {
  const Eigen::Index n = require_key(j, "n", path).get<Eigen::Index>();
  const Eigen::Index m = require_key(j, "m", path).get<Eigen::Index>();
  if (n <= 0 || m <= 0) throw std::runtime_error(path.string() + ": n and m must be positive");
  QpInstance inst;
  inst.Q = matrix_from_json(require_key(j, "Q", path), n, n, "Q", path);
  inst.c = matrix_from_json(require_key(j, "c", path), n, 1, "c", path).col(0);
  inst.A = matrix_from_json(require_key(j, "A", path), m, n, "A", path);
  inst.b = matrix_from_json(require_key(j, "b", path), m, 1, "b", path).col(0);
  if (j.contains("R")) {
    inst.R = j["R"].get<double>();
  } else {
    // Conservative fallback for hand-written files without metadata.
    inst.R = std::sqrt(static_cast<double>(n));
  }
  if (j.contains("H")) {
    inst.H = j["H"].get<double>();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(inst.Q, Eigen::EigenvaluesOnly);
    inst.H = 0.5 * inst.R * inst.R * std::max(es.eigenvalues().maxCoeff(), 0.0) +
             inst.c.norm() * inst.R;
  }
  if (j.contains("meta") && j["meta"].is_string()) inst.meta = j["meta"].get<std::string>();
  return inst;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void save_instance(const std::filesystem::path& path, const QpInstance& inst) {
  write_text_atomic(path, instance_to_json(inst).dump(2) + "\n");
}

QpInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return instance_from_json(j, path);
}

void save_instances(const std::filesystem::path& dir,
                    const std::vector<QpInstance>& instances, const GenSpec* provenance) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["instances"] = json::array();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "instance_%04zu.json", i);
    save_instance(dir / name, instances[i]);
    manifest["instances"].push_back(name);
  }
  if (provenance != nullptr) {
    manifest["spec"] = {{"family", family_name(provenance->family)},
                        {"n", provenance->n},
                        {"m", provenance->m},
                        {"k", provenance->k},
                        {"box_bound", provenance->box_bound},
                        {"seed", provenance->seed},
                        {"count", provenance->count}};
  }
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<QpInstance> load_instances(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open: " + manifest_path.string());
  json manifest;
  in >> manifest;
  const json& list = require_key(manifest, "instances", manifest_path);
  std::vector<QpInstance> out;
  for (const auto& entry : list) {
    out.push_back(load_instance(dir / entry.get<std::string>()));
  }
  return out;
}

}  // namespace qproj
