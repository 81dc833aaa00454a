#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qproj/input_aware.hpp"
#include "qproj/learn.hpp"
#include "support.hpp"

using namespace qproj;
namespace qt = qproj::testing;
namespace fs = std::filesystem;

namespace {

// Net whose output is the constant vector `out` for every input.
InputAwareNet constant_net(Eigen::Index input_width, const Vector& out) {
  InputAwareNet net;
  net.layer_widths = {input_width, out.size()};
  net.weights.push_back(Matrix::Zero(out.size(), input_width));
  net.biases.push_back(out);
  return net;
}

Vector vec_rowmajor(const Matrix& mat) {
  Vector out(mat.size());
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < mat.rows(); ++i)
    for (Eigen::Index j = 0; j < mat.cols(); ++j) out(pos++) = mat(i, j);
  return out;
}

}  // namespace

TEST_CASE("flatten concatenates Q, c, A, b in order") {
  const QpInstance inst = qt::one_dim_box();
  // A has two rows here, so adapt the smallest-case layout.
  QpInstance tiny;
  tiny.Q = Matrix::Constant(1, 1, 2.0);
  tiny.c = Vector::Constant(1, -2.0);
  tiny.A = Matrix::Constant(1, 1, 1.0);
  tiny.b = Vector::Constant(1, 1.0);
  const Vector flat = flatten(tiny);
  REQUIRE(flat.size() == 4);
  CHECK(flat(0) == 2.0);
  CHECK(flat(1) == -2.0);
  CHECK(flat(2) == 1.0);
  CHECK(flat(3) == 1.0);

  CHECK(flatten(inst).size() == 1 + 1 + 2 + 2);
}

TEST_CASE("flatten length is n^2 + n + nm + m") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const int n = 2 + static_cast<int>(seed % 3);
    const int m = 2 * n + static_cast<int>(seed);
    const QpInstance inst = qt::random_pd_instance(n, m, 6000 + seed);
    CHECK(flatten(inst).size() == n * n + n + n * m + m);
  }
}

TEST_CASE("flatten of the zero instance is the zero vector") {
  QpInstance zero;
  zero.Q = Matrix::Zero(2, 2);
  zero.c = Vector::Zero(2);
  zero.A = Matrix::Zero(3, 2);
  zero.b = Vector::Zero(3);
  CHECK(flatten(zero).norm() == 0.0);
}

TEST_CASE("make_net shapes are consistent and theta_count adds up") {
  const InputAwareNet net = make_net({10, 8, 6}, 1);
  CHECK(net.consistent());
  CHECK(net.theta_count() == 10 * 8 + 8 + 8 * 6 + 6);
  const InputAwareNet same = make_net({10, 8, 6}, 1);
  CHECK((net.weights[0] - same.weights[0]).norm() == 0.0);
}

TEST_CASE("constant net returns the same projection for every instance") {
  const QpInstance a = qt::random_pd_instance(3, 6, 6100);
  const QpInstance b = qt::random_pd_instance(3, 6, 6101);
  const Matrix pad = Matrix::Identity(3, 3).leftCols(2);
  const InputAwareNet net = constant_net(flatten(a).size(), vec_rowmajor(pad));

  bool repaired = false;
  const ProjectionMatrix pa = forward(net, a, 2, &repaired);
  CHECK(!repaired);
  const ProjectionMatrix pb = forward(net, b, 2);
  CHECK((pa.P - pad).norm() == 0.0);
  CHECK((pa.P - pb.P).norm() == 0.0);
}

TEST_CASE("forward output is n-by-k and full rank after repair") {
  const QpInstance inst = qt::random_pd_instance(4, 8, 6200);
  const InputAwareNet net = make_net({flatten(inst).size(), 8, 4 * 2}, 2);
  const ProjectionMatrix P = forward(net, inst, 2);
  CHECK(P.n() == 4);
  CHECK(P.k() == 2);
  CHECK(P.full_column_rank());

  // All-zero output forces the repair path.
  const InputAwareNet zero_net = constant_net(flatten(inst).size(), Vector::Zero(8));
  bool repaired = false;
  const ProjectionMatrix repaired_p = forward(zero_net, inst, 2, &repaired);
  CHECK(repaired);
  CHECK(repaired_p.full_column_rank());
}

TEST_CASE("instances differing in c produce different outputs") {
  QpInstance a = qt::random_pd_instance(3, 6, 6300);
  QpInstance b = a;
  b.c(0) += 0.5;

  // Width-1 hidden net with a weight on c's slot (index n^2 = 9).
  InputAwareNet net;
  net.layer_widths = {flatten(a).size(), 1, 3};
  Matrix w0 = Matrix::Zero(1, flatten(a).size());
  w0(0, 9) = 1.0;
  net.weights.push_back(w0);
  net.biases.push_back(Vector::Constant(1, 10.0));  // keep ReLU active
  net.weights.push_back(Matrix::Ones(3, 1));
  net.biases.push_back(Vector::Zero(3));

  const ProjectionMatrix pa = forward(net, a, 1);
  const ProjectionMatrix pb = forward(net, b, 1);
  CHECK((pa.P - pb.P).norm() > 0.1);
}

TEST_CASE("forward rejects mismatched widths") {
  const QpInstance inst = qt::random_pd_instance(3, 6, 6400);
  const InputAwareNet wrong_in = make_net({5, 3 * 2}, 3);
  CHECK_THROWS_AS(forward(wrong_in, inst, 2), std::invalid_argument);
  const InputAwareNet wrong_out = make_net({flatten(inst).size(), 5}, 3);
  CHECK_THROWS_AS(forward(wrong_out, inst, 2), std::invalid_argument);
}

TEST_CASE("doubling the first layer doubles its pre-activations") {
  const QpInstance inst = qt::random_pd_instance(3, 6, 6500);
  InputAwareNet net = make_net({flatten(inst).size(), 4, 3}, 4);
  net.biases[0] = Vector::Constant(4, 5.0);  // all hidden units active
  net.biases[1].setZero();

  const ProjectionMatrix base = forward(net, inst, 1);
  InputAwareNet doubled = net;
  doubled.weights[0] *= 2.0;
  doubled.biases[0] *= 2.0;
  const ProjectionMatrix twice = forward(doubled, inst, 1);
  CHECK((twice.P - 2.0 * base.P).norm() <= 1e-10 * std::max(1.0, base.P.norm()));
}

TEST_CASE("backprop gradient matches finite differences in theta") {
  const QpInstance inst = qt::random_pd_instance(3, 6, 6600);
  const Eigen::Index k = 1;
  const double gamma = 1e-4;
  InputAwareNet net = make_net({flatten(inst).size(), 6, 3}, 5);

  bool repaired = false;
  forward(net, inst, k, &repaired);
  REQUIRE(!repaired);

  const NetGrad grad = loss_grad_theta(net, inst, k, gamma);
  const double h = 1e-6;
  auto loss_at = [&](const InputAwareNet& candidate) {
    return objective_loss(inst, forward(candidate, inst, k), gamma);
  };

  int checked = 0;
  for (const auto& [layer, row, col] : std::vector<std::tuple<int, int, int>>{
           {0, 0, 3}, {0, 2, 9}, {1, 0, 1}, {1, 2, 4}}) {
    InputAwareNet plus = net, minus = net;
    plus.weights[layer](row, col) += h;
    minus.weights[layer](row, col) -= h;
    const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    const double an = grad.weights[layer](row, col);
    if (std::abs(fd) < 1e-10) continue;  // flat direction; relative check meaningless
    CHECK(std::abs(an - fd) <= 1e-3 * std::max(1.0, std::abs(fd)));
    ++checked;
  }
  CHECK(checked >= 2);
}

TEST_CASE("train_input_aware with 0 iters reports the initial mean loss") {
  std::vector<QpInstance> sample = {qt::random_pd_instance(3, 6, 6700),
                                    qt::random_pd_instance(3, 6, 6701)};
  TrainConfig cfg;
  cfg.k = 1;
  cfg.iters = 0;
  cfg.gamma = 1e-6;
  cfg.seed = 6;
  auto [net, report] = train_input_aware(sample, {4}, cfg);
  REQUIRE(report.loss_trace.size() == 1);

  double mean = 0.0;
  for (const auto& inst : sample) mean += objective_loss(inst, forward(net, inst, 1), cfg.gamma);
  mean /= 2.0;
  CHECK(report.loss_trace.front().second == doctest::Approx(mean).epsilon(1e-10));
  CHECK(report.per_instance_final.size() == 2);
}

TEST_CASE("input-aware training descends") {
  std::vector<QpInstance> sample = {qt::random_pd_instance(3, 6, 6800),
                                    qt::random_pd_instance(3, 6, 6801)};
  TrainConfig cfg;
  cfg.k = 1;
  cfg.iters = 10;
  cfg.step_size = 1e-3;
  cfg.gamma = 1e-6;
  cfg.seed = 7;
  auto [net, report] = train_input_aware(sample, {8}, cfg);
  CHECK(report.loss_trace.back().second <= report.loss_trace.front().second + 1e-9);
}

TEST_CASE("checkpoint round trip preserves the network") {
  const InputAwareNet net = make_net({7, 5, 4}, 8);
  const fs::path path = fs::temp_directory_path() / "qproj_net_test.json";
  save_net(path, net);
  const InputAwareNet back = load_net(path);
  REQUIRE(back.consistent());
  CHECK(back.layer_widths == net.layer_widths);
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    CHECK((back.weights[i] - net.weights[i]).norm() == 0.0);
    CHECK((back.biases[i] - net.biases[i]).norm() == 0.0);
  }
  fs::remove(path);
}

TEST_CASE("loading a malformed checkpoint fails with a diagnostic") {
  const fs::path path = fs::temp_directory_path() / "qproj_net_bad.json";
  std::ofstream(path) << R"({"widths":[3,2],"layers":[{"W":[1,2,3],"b":[0,0]}]})";
  CHECK_THROWS_AS(load_net(path), std::runtime_error);
  fs::remove(path);
}
