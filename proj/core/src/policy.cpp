#include "tce/policy.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "tce/csv.hpp"
#include "tce/errors.hpp"

namespace tce {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int tril_index(int i, int j) { return i * (i + 1) / 2 + j; }

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void write_vector(std::ostream& out, const char* tag, const Eigen::VectorXd& v) {
  out << tag << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  out << '\n';
}

Eigen::VectorXd read_vector(std::istream& in, const char* tag) {
  std::string t;
  Eigen::Index n = 0;
  if (!(in >> t >> n) || t != tag) throw ArgumentError(std::string("policy snapshot: expected '") + tag + "' block");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string token;
    if (!(in >> token)) throw ArgumentError("policy snapshot: truncated vector");
    v[i] = parse_double(token);
  }
  return v;
}

void write_hidden(std::ostream& out, const std::vector<int>& hidden) {
  out << hidden.size();
  for (int h : hidden) out << ' ' << h;
}

std::vector<int> read_hidden(std::istream& in) {
  std::size_t n = 0;
  in >> n;
  std::vector<int> hidden(n);
  for (auto& h : hidden) in >> h;
  return hidden;
}

}  // namespace

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw ArgumentError("inverse_softplus: argument must be positive");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

EpisodicPolicy::EpisodicPolicy(const EpisodicPolicyConfig& config, Rng& rng) : config_(config) {
  if (config.state_dim < 1 || config.num_params < 1) throw ArgumentError("EpisodicPolicy: empty state or parameter space");
  if (!(config.initial_std > 0.0) || !(config.weight_scale > 0.0)) {
    throw ArgumentError("EpisodicPolicy: initial_std and weight_scale must be positive");
  }
  diag_offset_ = inverse_softplus(config.initial_std);
  net_ = Mlp::orthogonal(layer_sizes(config.state_dim, config.hidden, head_rows()), config.activation, rng);
  if (!config.state_dependent_cov) free_tril_ = Eigen::VectorXd::Zero(num_tril());
}

EpisodicPolicy EpisodicPolicy::zeros(const EpisodicPolicyConfig& config) {
  Rng rng(0);
  EpisodicPolicy p(config, rng);
  p.set_parameters(Eigen::VectorXd::Zero(p.num_trainable()));
  return p;
}

int EpisodicPolicy::head_rows() const {
  return config_.num_params + (config_.state_dependent_cov ? num_tril() : 0);
}

Eigen::MatrixXd EpisodicPolicy::build_chol(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
  const int m = config_.num_params;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    if (config_.full_cov) {
      for (int j = 0; j < i; ++j) l(i, j) = raw[tril_index(i, j)];
    }
    l(i, i) = softplus(raw[tril_index(i, i)] + diag_offset_);
  }
  return l;
}

ParamGaussian EpisodicPolicy::predict(const Eigen::VectorXd& state) const {
  Batch b = predict_batch(Eigen::MatrixXd(state));
  return std::move(b.gaussians.front());
}

EpisodicPolicy::Batch EpisodicPolicy::predict_batch(const Eigen::MatrixXd& states) const {
  if (states.rows() != config_.state_dim) {
    throw ArgumentError("EpisodicPolicy: state has " + std::to_string(states.rows()) + " entries, expected " +
                        std::to_string(config_.state_dim));
  }
  const int m = config_.num_params;
  Batch b;
  const Eigen::MatrixXd out = net_.forward(states, b.tape);
  if (config_.state_dependent_cov) {
    b.raw_tril = out.bottomRows(num_tril());
  } else {
    b.raw_tril = free_tril_.replicate(1, states.cols());
  }
  b.gaussians.reserve(static_cast<std::size_t>(states.cols()));
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    b.gaussians.push_back({config_.weight_scale * out.col(i).head(m), build_chol(b.raw_tril.col(i))});
  }
  return b;
}

Eigen::VectorXd EpisodicPolicy::backward(const Batch& batch, const Eigen::MatrixXd& d_mean,
                                         const std::vector<Eigen::MatrixXd>& d_chol) const {
  const int m = config_.num_params;
  const Eigen::Index n = batch.raw_tril.cols();
  if (d_mean.rows() != m || d_mean.cols() != n || static_cast<Eigen::Index>(d_chol.size()) != n) {
    throw ArgumentError("EpisodicPolicy::backward: gradient shape mismatch");
  }
  Eigen::MatrixXd d_raw = Eigen::MatrixXd::Zero(num_tril(), n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (int i = 0; i < m; ++i) {
      if (config_.full_cov) {
        for (int j = 0; j < i; ++j) d_raw(tril_index(i, j), b) = d_chol[b](i, j);
      }
      const int k = tril_index(i, i);
      d_raw(k, b) = d_chol[b](i, i) * sigmoid(batch.raw_tril(k, b) + diag_offset_);
    }
  }
  Eigen::MatrixXd d_out(head_rows(), n);
  d_out.topRows(m) = config_.weight_scale * d_mean;
  if (config_.state_dependent_cov) d_out.bottomRows(num_tril()) = d_raw;
  Eigen::VectorXd grad(num_trainable());
  grad.head(net_.num_params()) = net_.backward(batch.tape, d_out);
  if (!config_.state_dependent_cov) grad.tail(num_tril()) = d_raw.rowwise().sum();
  return grad;
}

Eigen::Index EpisodicPolicy::num_trainable() const {
  return net_.num_params() + (config_.state_dependent_cov ? 0 : num_tril());
}

Eigen::VectorXd EpisodicPolicy::parameters() const {
  Eigen::VectorXd p(num_trainable());
  p.head(net_.num_params()) = net_.parameters();
  if (!config_.state_dependent_cov) p.tail(num_tril()) = free_tril_;
  return p;
}

void EpisodicPolicy::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != num_trainable()) throw ArgumentError("EpisodicPolicy::set_parameters: size mismatch");
  net_.set_parameters(params.head(net_.num_params()));
  if (!config_.state_dependent_cov) free_tril_ = params.tail(num_tril());
}

void EpisodicPolicy::write(std::ostream& out) const {
  out << "episodic_policy " << config_.state_dim << ' ' << config_.num_params << ' '
      << format_double(config_.initial_std) << ' ' << format_double(config_.weight_scale) << ' '
      << config_.full_cov << ' ' << config_.state_dependent_cov << ' ' << to_string(config_.activation) << ' ';
  write_hidden(out, config_.hidden);
  out << '\n';
  write_mlp(out, net_);
  write_vector(out, "free_tril", free_tril_);
}

EpisodicPolicy EpisodicPolicy::read(std::istream& in) {
  std::string tag, act, init_std, scale;
  EpisodicPolicyConfig c;
  if (!(in >> tag) || tag != "episodic_policy") throw ArgumentError("policy snapshot: expected 'episodic_policy'");
  in >> c.state_dim >> c.num_params >> init_std >> scale >> c.full_cov >> c.state_dependent_cov >> act;
  c.initial_std = parse_double(init_std);
  c.weight_scale = parse_double(scale);
  c.activation = parse_activation(act);
  c.hidden = read_hidden(in);
  if (!in) throw ArgumentError("policy snapshot: malformed header");
  Rng rng(0);
  EpisodicPolicy p(c, rng);
  p.net_ = read_mlp(in);
  p.free_tril_ = read_vector(in, "free_tril");
  if (p.net_.input_size() != c.state_dim || p.net_.output_size() != p.head_rows()) {
    throw ArgumentError("policy snapshot: network shape does not match its header");
  }
  return p;
}

double diag_gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                              const Eigen::VectorXd& x) {
  if (mean.size() != x.size() || log_std.size() != x.size()) throw ArgumentError("diag_gaussian_log_prob: shape mismatch");
  const Eigen::ArrayXd z = (x - mean).array() / log_std.array().exp();
  return -0.5 * z.square().sum() - log_std.sum() - 0.5 * static_cast<double>(x.size()) * kLog2Pi;
}

StepPolicy::StepPolicy(const StepPolicyConfig& config, Rng& rng) : config_(config) {
  if (config.state_dim < 1 || config.action_dim < 1) throw ArgumentError("StepPolicy: empty state or action space");
  if (!(config.initial_std > 0.0)) throw ArgumentError("StepPolicy: initial_std must be positive");
  net_ = Mlp::orthogonal(layer_sizes(config.state_dim, config.hidden, config.action_dim), config.activation, rng);
  log_std_ = Eigen::VectorXd::Constant(config.action_dim, std::log(config.initial_std));
}

Eigen::VectorXd StepPolicy::mean(const Eigen::VectorXd& state) const {
  if (state.size() != config_.state_dim) throw ArgumentError("StepPolicy: state shape mismatch");
  return net_.forward(state);
}

Eigen::VectorXd StepPolicy::sample(const Eigen::VectorXd& state, Rng& rng) const {
  return mean(state) + (log_std_.array().exp() * standard_normal(rng, config_.action_dim).array()).matrix();
}

double StepPolicy::step_log_prob(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  if (action.size() != config_.action_dim) throw ArgumentError("StepPolicy: action shape mismatch");
  return diag_gaussian_log_prob(mean(state), log_std_, action);
}

Eigen::VectorXd StepPolicy::log_prob_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                           const Eigen::VectorXd* weights, Eigen::VectorXd* grad) const {
  if (states.rows() != config_.state_dim || actions.rows() != config_.action_dim || states.cols() != actions.cols()) {
    throw ArgumentError("StepPolicy::log_prob_batch: shape mismatch");
  }
  GradientTape tape;
  const Eigen::MatrixXd means = net_.forward(states, tape);
  const Eigen::ArrayXd inv_var = (-2.0 * log_std_.array()).exp();
  const Eigen::Index n = states.cols();
  Eigen::VectorXd logp(n);
  const double norm = log_std_.sum() + 0.5 * static_cast<double>(config_.action_dim) * kLog2Pi;
  Eigen::MatrixXd d_mean(config_.action_dim, n);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(config_.action_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::ArrayXd r = (actions.col(i) - means.col(i)).array();
    logp[i] = -0.5 * (r.square() * inv_var).sum() - norm;
    if (grad != nullptr) {
      const double w = weights != nullptr ? (*weights)[i] : 1.0;
      d_mean.col(i) = (w * r * inv_var).matrix();
      d_log_std += (w * (r.square() * inv_var - 1.0)).matrix();
    }
  }
  if (grad != nullptr) {
    grad->resize(net_.num_params() + config_.action_dim);
    grad->head(net_.num_params()) = net_.backward(tape, d_mean);
    grad->tail(config_.action_dim) = d_log_std;
  }
  return logp;
}

Eigen::VectorXd StepPolicy::parameters() const {
  Eigen::VectorXd p(net_.num_params() + log_std_.size());
  p << net_.parameters(), log_std_;
  return p;
}

void StepPolicy::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != net_.num_params() + log_std_.size()) throw ArgumentError("StepPolicy::set_parameters: size mismatch");
  net_.set_parameters(params.head(net_.num_params()));
  log_std_ = params.tail(log_std_.size());
}

void StepPolicy::write(std::ostream& out) const {
  out << "step_policy " << config_.state_dim << ' ' << config_.action_dim << ' ' << format_double(config_.initial_std)
      << ' ' << to_string(config_.activation) << ' ';
  write_hidden(out, config_.hidden);
  out << '\n';
  write_mlp(out, net_);
  write_vector(out, "log_std", log_std_);
}

StepPolicy StepPolicy::read(std::istream& in) {
  std::string tag, init_std, act;
  StepPolicyConfig c;
  if (!(in >> tag) || tag != "step_policy") throw ArgumentError("policy snapshot: expected 'step_policy'");
  in >> c.state_dim >> c.action_dim >> init_std >> act;
  c.initial_std = parse_double(init_std);
  c.activation = parse_activation(act);
  c.hidden = read_hidden(in);
  if (!in) throw ArgumentError("policy snapshot: malformed header");
  Rng rng(0);
  StepPolicy p(c, rng);
  p.net_ = read_mlp(in);
  p.log_std_ = read_vector(in, "log_std");
  return p;
}

}  // namespace tce
