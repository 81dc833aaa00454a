#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qproj/bench.hpp"
#include "qproj/input_aware.hpp"
#include "qproj/instance_gen.hpp"
#include "qproj/learn.hpp"
#include "qproj/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qproj;

namespace {

// Exit-code taxonomy: 0 ok, 1 usage, 2 data/schema, 3 solver failure.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::vector<QpInstance> load_sample(const std::string& path) {
  try {
    if (fs::is_directory(path)) return load_instances(path);
    return {load_instance(path)};
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

ProjectionMatrix resolve_projection(const std::string& spec, Eigen::Index n, int k,
                                    std::uint64_t seed) {
  if (spec == "identity") return identity_projection(n);
  if (spec == "random") {
    if (k <= 0) throw DataError("--P random requires --k");
    return random_projection(n, k, seed);
  }
  if (spec.rfind("file:", 0) == 0) {
    const fs::path path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("P")) {
      throw DataError(path.string() + ": projection file needs \"rows\", \"cols\", \"P\"");
    }
    const Eigen::Index rows = j["rows"].get<Eigen::Index>();
    const Eigen::Index cols = j["cols"].get<Eigen::Index>();
    if (static_cast<Eigen::Index>(j["P"].size()) != rows * cols) {
      throw DataError(path.string() + ": \"P\" must hold rows*cols numbers");
    }
    Matrix p(rows, cols);
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index c = 0; c < cols; ++c) p(i, c) = j["P"][static_cast<std::size_t>(pos++)].get<double>();
    return ProjectionMatrix{p};
  }
  throw DataError("unrecognized --P spec: " + spec + " (identity|random|file:<path>)");
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

json solve_to_json(const QpInstance& inst, const ProjectionMatrix& P, double gamma) {
  ProjectedQp pqp;
  try {
    pqp = project(gamma > 0.0 ? perturb(inst, {gamma}) : inst, P);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  SolveResult res = solve_enumerate(pqp);
  if (res.status != SolveStatus::optimal) {
    throw SolverError(res.status == SolveStatus::budget_exceeded
                          ? "enumeration budget exceeded"
                          : "no certified candidate (infeasible_numerics)");
  }
  json j;
  j["value"] = res.value;
  j["y"] = std::vector<double>(res.y.data(), res.y.data() + res.y.size());
  std::vector<int> active1;
  for (int i : res.active) active1.push_back(i + 1);  // 1-based for display
  j["active"] = active1;
  j["lambda"] = std::vector<double>(res.lambda_full.data(),
                                    res.lambda_full.data() + res.lambda_full.size());
  const Vector primal = pqp.At * res.y - pqp.b;
  j["residuals"] = {
      {"stationarity", (pqp.Qt * res.y + pqp.ct + pqp.At.transpose() * res.lambda_full).norm()},
      {"max_primal_violation", std::max(primal.maxCoeff(), 0.0)},
      {"min_lambda", res.lambda_full.size() > 0 ? res.lambda_full.minCoeff() : 0.0}};
  if (gamma > 0.0) {
    // Tikhonov bias interval: the unperturbed value lies within it.
    j["gamma"] = gamma;
    j["value_interval"] = {res.value - gamma * inst.R * inst.R / 2.0, res.value};
  }
  return j;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_atomic(out_path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven projection for convex quadratic programs"};
  app.require_subcommand(1);

  if (const char* threads = std::getenv("QPROJECT_THREADS")) {
    Eigen::setNbThreads(std::max(0, std::atoi(threads)));
  }

  std::string family = "random_pd", out_path, instance_path, instances_path;
  std::string p_spec = "identity", loss = "objective", widths = "64,64";
  std::string train_dir, test_dir, ks_list = "2";
  int n = 4, m = 8, k = 2, count = 1, iters = 100;
  std::uint64_t seed = 0;
  double gamma = 1e-6, step_size = 1e-3, box_bound = 1.0;

  auto* gen = app.add_subcommand("gen", "Generate a QP instance family");
  gen->add_option("--family", family, "random_pd|random_psd|lowrank_plus_box|lower_bound");
  gen->add_option("--n", n);
  gen->add_option("--m", m);
  gen->add_option("--k", k);
  gen->add_option("--count", count);
  gen->add_option("--seed", seed);
  gen->add_option("--box-bound", box_bound);
  gen->add_option("--out", out_path)->required();

  auto* solve_cmd = app.add_subcommand("solve", "Solve a projected QP exactly");
  solve_cmd->add_option("--instance", instance_path)->required();
  solve_cmd->add_option("--P", p_spec, "identity|random|file:<path>");
  solve_cmd->add_option("--k", k);
  solve_cmd->add_option("--seed", seed);
  solve_cmd->add_option("--gamma", gamma);
  solve_cmd->add_option("--out", out_path);

  auto* train_cmd = app.add_subcommand("train", "Learn a projection matrix by ERM");
  train_cmd->add_option("--instances", instances_path)->required();
  train_cmd->add_option("--k", k);
  train_cmd->add_option("--iters", iters);
  train_cmd->add_option("--step-size", step_size);
  train_cmd->add_option("--gamma", gamma);
  train_cmd->add_option("--loss", loss, "objective|matching");
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--out", out_path);

  auto* train_net = app.add_subcommand("train-net", "Train the input-aware network");
  train_net->add_option("--instances", instances_path)->required();
  train_net->add_option("--k", k);
  train_net->add_option("--iters", iters);
  train_net->add_option("--step-size", step_size);
  train_net->add_option("--gamma", gamma);
  train_net->add_option("--widths", widths, "comma-separated hidden widths");
  train_net->add_option("--seed", seed);
  train_net->add_option("--out", out_path, "report path; checkpoint goes to <out>.net.json");

  auto* bench_cmd = app.add_subcommand("bench", "Compare projection methods");
  bench_cmd->add_option("--train", train_dir)->required();
  bench_cmd->add_option("--test", test_dir)->required();
  bench_cmd->add_option("--ks", ks_list, "comma-separated projection dims");
  bench_cmd->add_option("--iters", iters);
  bench_cmd->add_option("--step-size", step_size);
  bench_cmd->add_option("--gamma", gamma);
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_option("--out", out_path, "prefix for .csv and .json")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a projection on instances");
  eval_cmd->add_option("--instances", instances_path)->required();
  eval_cmd->add_option("--P", p_spec, "identity|random|file:<path>");
  eval_cmd->add_option("--k", k);
  eval_cmd->add_option("--seed", seed);
  eval_cmd->add_option("--gamma", gamma);
  eval_cmd->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      GenSpec spec;
      spec.family = family_from_name(family);
      spec.n = n;
      spec.m = spec.family == Family::lower_bound_family ? 2 * k : m;
      spec.k = k;
      spec.seed = seed;
      spec.count = count;
      spec.box_bound = box_bound;
      auto instances = generate(spec);
      save_instances(out_path, instances, &spec);
      std::cout << "wrote " << instances.size() << " instances to " << out_path << "\n";
    } else if (solve_cmd->parsed()) {
      const QpInstance inst = [&] {
        try {
          return load_instance(instance_path);
        } catch (const std::exception& e) {
          throw DataError(e.what());
        }
      }();
      const auto violations = validate_instance(inst);
      if (!violations.empty()) throw DataError("invalid instance: " + violations.front());
      const ProjectionMatrix P = resolve_projection(p_spec, inst.n(), k, seed);
      emit(solve_to_json(inst, P, gamma).dump(2) + "\n", out_path);
    } else if (train_cmd->parsed() || train_net->parsed()) {
      auto sample = load_sample(instances_path);
      TrainConfig cfg;
      cfg.k = k;
      cfg.iters = iters;
      cfg.step_size = step_size;
      cfg.gamma = gamma;
      cfg.seed = seed;
      cfg.loss_kind = loss == "matching" ? LossKind::matching : LossKind::objective;
      if (train_cmd->parsed()) {
        TrainReport report;
        try {
          report = train(sample, cfg);
        } catch (const std::invalid_argument& e) {
          throw DataError(e.what());
        } catch (const std::exception& e) {
          throw SolverError(e.what());
        }
        emit(report.to_json() + "\n", out_path);
      } else {
        std::vector<Eigen::Index> hidden;
        for (int w : parse_int_list(widths)) hidden.push_back(w);
        try {
          auto [net, report] = train_input_aware(sample, hidden, cfg);
          json j;
          j["trace"] = json::array();
          for (const auto& [it2, l] : report.loss_trace) j["trace"].push_back({it2, l});
          j["per_instance"] = report.per_instance_final;
          j["rank_repairs"] = report.rank_repairs;
          if (!out_path.empty()) save_net(out_path + ".net.json", net);
          emit(j.dump(2) + "\n", out_path);
        } catch (const std::invalid_argument& e) {
          throw DataError(e.what());
        } catch (const std::exception& e) {
          throw SolverError(e.what());
        }
      }
    } else if (bench_cmd->parsed()) {
      auto train_set = load_sample(train_dir);
      auto test_set = load_sample(test_dir);
      TrainConfig cfg;
      cfg.iters = iters;
      cfg.step_size = step_size;
      cfg.gamma = gamma;
      cfg.seed = seed;
      BenchReport report;
      try {
        report = run_bench(train_set, test_set, parse_int_list(ks_list), cfg);
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      } catch (const std::exception& e) {
        throw SolverError(e.what());
      }
      write_atomic(out_path + ".csv", report.to_csv());
      write_atomic(out_path + ".json", report.to_json() + "\n");
      std::cout << report.to_csv();
    } else if (eval_cmd->parsed()) {
      auto sample = load_sample(instances_path);
      json j;
      j["losses"] = json::array();
      for (const auto& inst : sample) {
        const ProjectionMatrix P = resolve_projection(p_spec, inst.n(), k, seed);
        try {
          j["losses"].push_back(objective_loss(inst, P, gamma));
        } catch (const std::invalid_argument& e) {
          throw DataError(e.what());
        } catch (const std::exception& e) {
          throw SolverError(e.what());
        }
      }
      emit(j.dump(2) + "\n", out_path);
    }
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
