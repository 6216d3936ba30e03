#include "tce/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/QR>

#include "tce/csv.hpp"
#include "tce/errors.hpp"

namespace tce {
namespace {

void activate(Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::tanh) {
    z = z.array().tanh().matrix();
  } else {
    z = z.cwiseMax(0.0);
  }
}

// Derivative of the activation expressed through its output.
Eigen::ArrayXXd activation_grad(const Eigen::MatrixXd& out, Activation act) {
  if (act == Activation::tanh) return 1.0 - out.array().square();
  return (out.array() > 0.0).cast<double>();
}

Eigen::MatrixXd orthogonal_matrix(int rows, int cols, Rng& rng) {
  const int n = std::max(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q.topLeftCorner(rows, cols);
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ArgumentError("unknown activation '" + name + "'");
}

std::string to_string(Activation act) { return act == Activation::tanh ? "tanh" : "relu"; }

Mlp::Mlp(std::vector<int> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw ArgumentError("Mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw ArgumentError("Mlp: layer sizes must be positive");
  }
  layout();
  params_ = Eigen::VectorXd::Zero(params_.size());
}

void Mlp::layout() {
  offsets_.clear();
  Eigen::Index total = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  }
  params_.resize(total);
}

Mlp Mlp::orthogonal(std::vector<int> layer_sizes, Activation activation, Rng& rng, double hidden_gain,
                    double output_gain) {
  Mlp net(std::move(layer_sizes), activation);
  for (int l = 0; l < net.num_layers(); ++l) {
    const int out = net.sizes_[l + 1];
    const int in = net.sizes_[l];
    const double gain = l + 1 == net.num_layers() ? output_gain : hidden_gain;
    const Eigen::MatrixXd w = gain * orthogonal_matrix(out, in, rng);
    Eigen::Map<RowMajorMatrix>(net.params_.data() + net.offsets_[l], out, in) = w;
  }
  return net;
}

void Mlp::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != params_.size()) {
    throw ArgumentError("Mlp::set_parameters: expected " + std::to_string(params_.size()) + " values, got " +
                        std::to_string(params.size()));
  }
  params_ = params;
  ++version_;
}

Eigen::VectorXd& Mlp::mutable_parameters() {
  ++version_;
  return params_;
}

Mlp::WeightMap Mlp::weight(int layer) const {
  return WeightMap(params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]);
}

Eigen::Index Mlp::bias_offset(int layer) const {
  return offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer];
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return Eigen::Map<const Eigen::VectorXd>(params_.data() + bias_offset(layer), sizes_[layer + 1]);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  const Eigen::MatrixXd out = forward(Eigen::MatrixXd(input));
  return out.col(0);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  GradientTape tape;
  return forward(inputs, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, GradientTape& tape) const {
  if (inputs.rows() != input_size()) {
    throw ArgumentError("Mlp::forward: input has " + std::to_string(inputs.rows()) + " rows, expected " +
                        std::to_string(input_size()));
  }
  tape.owner = this;
  tape.version = version_;
  tape.inputs.clear();
  tape.outputs.clear();
  Eigen::MatrixXd h = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    tape.inputs.push_back(h);
    Eigen::MatrixXd z = weight(l) * h;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) activate(z, activation_);
    tape.outputs.push_back(z);
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd Mlp::backward(const GradientTape& tape, const Eigen::MatrixXd& output_grad) const {
  return backward(tape, output_grad, nullptr);
}

Eigen::VectorXd Mlp::backward(const GradientTape& tape, const Eigen::MatrixXd& output_grad,
                              Eigen::MatrixXd* input_grad) const {
  if (tape.owner != this || tape.version != version_ || static_cast<int>(tape.inputs.size()) != num_layers()) {
    throw ArgumentError("Mlp::backward: stale or foreign gradient tape");
  }
  const Eigen::MatrixXd& last = tape.outputs.back();
  if (output_grad.rows() != last.rows() || output_grad.cols() != last.cols()) {
    throw ArgumentError("Mlp::backward: output gradient shape mismatch");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd g = output_grad;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int out = sizes_[l + 1];
    const int in = sizes_[l];
    Eigen::Map<RowMajorMatrix>(grad.data() + offsets_[l], out, in) = g * tape.inputs[l].transpose();
    grad.segment(bias_offset(l), out) = g.rowwise().sum();
    if (l > 0) {
      g = ((weight(l).transpose() * g).array() * activation_grad(tape.outputs[l - 1], activation_)).matrix();
    } else if (input_grad != nullptr) {
      *input_grad = weight(0).transpose() * g;
    }
  }
  return grad;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size()) throw ArgumentError("adam_step: gradient/parameter size mismatch");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  params.array() -= config.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
}

void clip_grad_norm(Eigen::VectorXd& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = grads.norm();
  if (norm > max_norm) grads *= max_norm / norm;
}

void write_mlp(std::ostream& out, const Mlp& net) {
  out << "mlp " << to_string(net.activation()) << ' ' << net.layer_sizes().size();
  for (int s : net.layer_sizes()) out << ' ' << s;
  out << '\n';
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    out << "W " << w.rows() << ' ' << w.cols();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << ' ' << format_double(w(i, j));
    }
    out << '\n';
    const auto b = net.bias(l);
    out << "b " << b.size();
    for (Eigen::Index i = 0; i < b.size(); ++i) out << ' ' << format_double(b[i]);
    out << '\n';
  }
}

Mlp read_mlp(std::istream& in) {
  std::string tag, act;
  std::size_t count = 0;
  if (!(in >> tag >> act >> count) || tag != "mlp") throw ArgumentError("read_mlp: missing 'mlp' header");
  std::vector<int> sizes(count);
  for (auto& s : sizes) {
    if (!(in >> s)) throw ArgumentError("read_mlp: truncated layer sizes");
  }
  Mlp net(sizes, parse_activation(act));
  Eigen::VectorXd params(net.num_params());
  auto read_value = [&in]() {
    std::string token;
    if (!(in >> token)) throw ArgumentError("read_mlp: truncated parameter block");
    return parse_double(token);
  };
  for (int l = 0; l < net.num_layers(); ++l) {
    int rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != "W" || rows != sizes[l + 1] || cols != sizes[l]) {
      throw ArgumentError("read_mlp: bad weight block for layer " + std::to_string(l));
    }
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(rows) * cols; ++i) {
      params[net.weight_offset(l) + i] = read_value();
    }
    int n = 0;
    if (!(in >> tag >> n) || tag != "b" || n != sizes[l + 1]) {
      throw ArgumentError("read_mlp: bad bias block for layer " + std::to_string(l));
    }
    for (int i = 0; i < n; ++i) params[net.bias_offset(l) + i] = read_value();
  }
  net.set_parameters(params);
  return net;
}

}  // namespace tce
