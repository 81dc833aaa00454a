#include "qproj/input_aware.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>
#include <json.hpp>

namespace qproj {

using nlohmann::json;

Eigen::Index InputAwareNet::theta_count() const {
  Eigen::Index total = 0;
  for (const auto& w : weights) total += w.size();
  for (const auto& b : biases) total += b.size();
  return total;
}

bool InputAwareNet::consistent() const {
  const std::size_t layers = weights.size();
  if (layer_widths.size() != layers + 1 || biases.size() != layers) return false;
  for (std::size_t i = 0; i < layers; ++i) {
    if (weights[i].rows() != layer_widths[i + 1] || weights[i].cols() != layer_widths[i]) {
      return false;
    }
    if (biases[i].size() != layer_widths[i + 1]) return false;
  }
  return true;
}

Vector flatten(const QpInstance& inst) {
  const Eigen::Index n = inst.n();
  const Eigen::Index m = inst.m();
  Vector out(n * n + n + n * m + m);
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(pos++) = inst.Q(i, j);
  out.segment(pos, n) = inst.c;
  pos += n;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(pos++) = inst.A(i, j);
  out.segment(pos, m) = inst.b;
  return out;
}

InputAwareNet make_net(const std::vector<Eigen::Index>& layer_widths, std::uint64_t seed) {
  if (layer_widths.size() < 2) throw std::invalid_argument("make_net: need at least two layers");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  InputAwareNet net;
  net.layer_widths = layer_widths;
  for (std::size_t i = 0; i + 1 < layer_widths.size(); ++i) {
    const double scale = std::sqrt(2.0 / static_cast<double>(layer_widths[i]));
    Matrix w(layer_widths[i + 1], layer_widths[i]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * gauss(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(layer_widths[i + 1]));
  }
  return net;
}

namespace {

struct ForwardTrace {
  std::vector<Vector> pre;   // pre-activations per layer
  std::vector<Vector> post;  // post-activations (post[0] = input)
};

ForwardTrace run_forward(const InputAwareNet& net, const Vector& input) {
  ForwardTrace t;
  t.post.push_back(input);
  const std::size_t layers = net.weights.size();
  for (std::size_t i = 0; i < layers; ++i) {
    Vector z = net.weights[i] * t.post.back() + net.biases[i];
    t.pre.push_back(z);
    if (i + 1 < layers) {
      t.post.push_back(z.cwiseMax(0.0));  // ReLU on hidden layers
    } else {
      t.post.push_back(z);  // linear output
    }
  }
  return t;
}

ProjectionMatrix reshape_and_repair(const Vector& out, Eigen::Index n, Eigen::Index k,
                                    bool* repaired) {
  Matrix P(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) P(i, j) = out(i * k + j);

  if (repaired != nullptr) *repaired = false;
  Eigen::JacobiSVD<Matrix> svd(P);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(sv.size() - 1) < kRankTol * sv(0)) {
    const double eps = std::max(1e-6 * P.norm(), 1e-6);
    P += eps * Matrix::Identity(n, n).leftCols(k);
    if (repaired != nullptr) *repaired = true;
  }
  return ProjectionMatrix{P};
}

}  // namespace

ProjectionMatrix forward(const InputAwareNet& net, const QpInstance& inst, Eigen::Index k,
                         bool* repaired) {
  const Vector input = flatten(inst);
  if (input.size() != net.layer_widths.front()) {
    throw std::invalid_argument("forward: flattened instance does not match input width");
  }
  const Eigen::Index n = inst.n();
  if (net.layer_widths.back() != n * k) {
    throw std::invalid_argument("forward: output width does not match n*k");
  }
  const ForwardTrace t = run_forward(net, input);
  return reshape_and_repair(t.post.back(), n, k, repaired);
}

NetGrad loss_grad_theta(const InputAwareNet& net, const QpInstance& inst, Eigen::Index k,
                        double gamma) {
  const Vector input = flatten(inst);
  const Eigen::Index n = inst.n();
  const ForwardTrace t = run_forward(net, input);
  ProjectionMatrix P = reshape_and_repair(t.post.back(), n, k, nullptr);

  // Upstream gradient: the envelope-theorem derivative of the perturbed
  // optimal value w.r.t. the projection matrix, flattened row-major to
  // match the output layer. The rank repair is an additive constant at
  // the current theta and does not enter the chain.
  const Matrix dp = envelope_grad(inst, P, gamma);
  Vector delta(n * k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) delta(i * k + j) = dp(i, j);

  const std::size_t layers = net.weights.size();
  NetGrad grad;
  grad.weights.resize(layers);
  grad.biases.resize(layers);
  for (std::size_t li = layers; li-- > 0;) {
    grad.weights[li] = delta * t.post[li].transpose();
    grad.biases[li] = delta;
    if (li > 0) {
      Vector back = net.weights[li].transpose() * delta;
      // ReLU mask of the upstream hidden layer
      for (Eigen::Index i = 0; i < back.size(); ++i) {
        if (t.pre[li - 1](i) <= 0.0) back(i) = 0.0;
      }
      delta = std::move(back);
    }
  }
  return grad;
}

std::pair<InputAwareNet, InputAwareReport> train_input_aware(
    const std::vector<QpInstance>& sample, const std::vector<Eigen::Index>& hidden_widths,
    const TrainConfig& cfg) {
  if (sample.empty()) throw std::invalid_argument("train_input_aware: empty sample");
  const Eigen::Index n = sample.front().n();
  const Eigen::Index m = sample.front().m();
  for (const auto& inst : sample) {
    if (inst.n() != n || inst.m() != m) {
      throw std::invalid_argument("train_input_aware: instances disagree on (n, m)");
    }
  }

  std::vector<Eigen::Index> widths;
  widths.push_back(n * n + n + n * m + m);
  widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
  widths.push_back(n * cfg.k);
  InputAwareNet net = make_net(widths, cfg.seed);

  InputAwareReport report;
  auto mean_loss = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      bool repaired = false;
      ProjectionMatrix P = forward(net, sample[i], cfg.k, &repaired);
      if (repaired) ++report.rank_repairs;
      try {
        total += objective_loss(sample[i], P, cfg.gamma);
      } catch (const std::exception& e) {
        throw std::runtime_error("train_input_aware: instance " + std::to_string(i) + ": " +
                                 e.what());
      }
    }
    return total / static_cast<double>(sample.size());
  };

  report.loss_trace.emplace_back(0, mean_loss());
  for (int it = 1; it <= cfg.iters; ++it) {
    NetGrad total;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      NetGrad g = loss_grad_theta(net, sample[i], cfg.k, cfg.gamma);
      if (total.weights.empty()) {
        total = std::move(g);
      } else {
        for (std::size_t li = 0; li < total.weights.size(); ++li) {
          total.weights[li] += g.weights[li];
          total.biases[li] += g.biases[li];
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(sample.size());
    for (std::size_t li = 0; li < net.weights.size(); ++li) {
      net.weights[li] -= cfg.step_size * inv * total.weights[li];
      net.biases[li] -= cfg.step_size * inv * total.biases[li];
    }
    report.loss_trace.emplace_back(it, mean_loss());
  }

  report.per_instance_final.reserve(sample.size());
  for (const auto& inst : sample) {
    report.per_instance_final.push_back(
        objective_loss(inst, forward(net, inst, cfg.k), cfg.gamma));
  }
  return {std::move(net), std::move(report)};
}

void save_net(const std::filesystem::path& path, const InputAwareNet& net) {
  json j;
  j["widths"] = net.layer_widths;
  j["layers"] = json::array();
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(net.weights[i].size()));
    for (Eigen::Index r = 0; r < net.weights[i].rows(); ++r)
      for (Eigen::Index c = 0; c < net.weights[i].cols(); ++c) w.push_back(net.weights[i](r, c));
    j["layers"].push_back(
        {{"W", w},
         {"b", std::vector<double>(net.biases[i].data(), net.biases[i].data() + net.biases[i].size())}});
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

InputAwareNet load_net(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json j;
  in >> j;
  InputAwareNet net;
  if (!j.contains("widths") || !j.contains("layers")) {
    throw std::runtime_error(path.string() + ": missing \"widths\" or \"layers\"");
  }
  for (const auto& w : j["widths"]) net.layer_widths.push_back(w.get<Eigen::Index>());
  const auto& layers = j["layers"];
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Eigen::Index rows = net.layer_widths[i + 1];
    const Eigen::Index cols = net.layer_widths[i];
    const auto& wj = layers[i]["W"];
    if (static_cast<Eigen::Index>(wj.size()) != rows * cols) {
      throw std::runtime_error(path.string() + ": layer " + std::to_string(i) +
                               " weight size mismatch");
    }
    Matrix w(rows, cols);
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = wj[static_cast<std::size_t>(pos++)].get<double>();
    const auto& bj = layers[i]["b"];
    Vector b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) b(r) = bj[static_cast<std::size_t>(r)].get<double>();
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  if (!net.consistent()) throw std::runtime_error(path.string() + ": inconsistent checkpoint");
  return net;
}

}  // namespace qproj
