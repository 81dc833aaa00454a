#include "qproj/bench.hpp"

#include <chrono>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qproj/input_aware.hpp"

namespace qproj {

namespace {

using Clock = std::chrono::steady_clock;

// Evaluates one projection choice over the test set; `projector` maps an
// instance to its projection matrix (constant for fixed-P methods).
template <typename Projector>
BenchRow evaluate(const std::string& method, int k, const std::vector<QpInstance>& test_set,
                  const std::vector<double>& opt, double gamma, Projector&& projector) {
  BenchRow row;
  row.method = method;
  row.k = k;
  double total_ms = 0.0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const ProjectionMatrix P = projector(test_set[i]);
    const auto start = Clock::now();
    double loss;
    try {
      loss = objective_loss(test_set[i], P, gamma);
    } catch (const std::exception& e) {
      throw std::runtime_error("bench: method " + method + ", test instance " +
                               std::to_string(i) + ": " + e.what());
    }
    total_ms += std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    row.per_instance_loss.push_back(loss);
    row.mean_loss += loss;
    row.mean_gap += loss - opt[i];
  }
  const double inv = 1.0 / static_cast<double>(test_set.size());
  row.mean_loss *= inv;
  row.mean_gap *= inv;
  row.mean_solve_ms = total_ms * inv;
  return row;
}

}  // namespace

BenchReport run_bench(const std::vector<QpInstance>& train_set,
                      const std::vector<QpInstance>& test_set, const std::vector<int>& ks,
                      const TrainConfig& cfg) {
  if (train_set.empty() || test_set.empty()) throw std::invalid_argument("bench: empty split");
  if (ks.empty()) throw std::invalid_argument("bench: no projection dimensions given");

  const Eigen::Index n = test_set.front().n();
  std::vector<double> opt;
  opt.reserve(test_set.size());
  const ProjectionMatrix identity = identity_projection(n);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    try {
      opt.push_back(objective_loss(test_set[i], identity, cfg.gamma));
    } catch (const std::exception& e) {
      throw std::runtime_error("bench: OPT solve, test instance " + std::to_string(i) + ": " +
                               e.what());
    }
  }

  BenchReport report;
  report.train_size = train_set.size();
  report.test_size = test_set.size();
  report.seeds = {cfg.seed};

  for (int k : ks) {
    TrainConfig kcfg = cfg;
    kcfg.k = k;

    const ProjectionMatrix random_p = random_projection(n, k, cfg.seed);
    report.rows.push_back(evaluate("random", k, test_set, opt, cfg.gamma,
                                   [&](const QpInstance&) { return random_p; }));

    const TrainReport trained = train(train_set, kcfg);
    report.rows.push_back(evaluate("learned", k, test_set, opt, cfg.gamma,
                                   [&](const QpInstance&) { return trained.final_P; }));

    auto [net, net_report] = train_input_aware(train_set, {64, 64}, kcfg);
    report.rows.push_back(evaluate("input_aware", k, test_set, opt, cfg.gamma,
                                   [&](const QpInstance& inst) { return forward(net, inst, k); }));
  }
  return report;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "method,k,mean_loss,mean_gap,mean_solve_ms\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << row.method << ',' << row.k << ',' << row.mean_loss << ',' << row.mean_gap << ','
        << row.mean_solve_ms << '\n';
  }
  return out.str();
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["split"] = {{"train", train_size}, {"test", test_size}};
  j["seeds"] = seeds;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    j["rows"].push_back({{"method", row.method},
                         {"k", row.k},
                         {"mean_loss", row.mean_loss},
                         {"mean_gap", row.mean_gap},
                         {"mean_solve_ms", row.mean_solve_ms},
                         {"per_instance_loss", row.per_instance_loss}});
  }
  return j.dump(2);
}

}  // namespace qproj
