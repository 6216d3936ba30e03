#pragma once

// Small fully-connected networks with hand-written reverse-mode gradients.
//
// Parameters live in one flat vector so optimizers and serialization see a
// single contiguous block.  Layer l stores W_l (out x in, row-major) followed
// by b_l.  Batches are column-major: one sample per column.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tce/random.hpp"

namespace tce {

enum class Activation { tanh, relu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation act);

class Mlp;

/// Forward activations of one batch, sufficient for an exact backward pass.
struct GradientTape {
  const Mlp* owner = nullptr;
  std::uint64_t version = 0;
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> outputs;  // post-activation output of each layer
};

class Mlp {
 public:
  using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using WeightMap = Eigen::Map<const RowMajorMatrix>;

  Mlp() = default;
  /// All parameters zero.  layer_sizes = {in, hidden..., out}, at least two entries.
  Mlp(std::vector<int> layer_sizes, Activation activation);

  /// Orthogonal weights (gain `hidden_gain` for hidden layers, `output_gain` for the last), zero biases.
  static Mlp orthogonal(std::vector<int> layer_sizes, Activation activation, Rng& rng, double hidden_gain = 1.0,
                        double output_gain = 0.01);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  Eigen::Index num_params() const { return params_.size(); }
  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::VectorXd& params);
  /// Bumps the version, invalidating outstanding tapes.
  Eigen::VectorXd& mutable_parameters();
  std::uint64_t version() const { return version_; }

  WeightMap weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  Eigen::Index bias_offset(int layer) const;

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, GradientTape& tape) const;

  /// Gradient of sum(output_grad .* output) w.r.t. the flat parameters.
  /// Throws ArgumentError for a tape recorded on another network or an older parameter version.
  Eigen::VectorXd backward(const GradientTape& tape, const Eigen::MatrixXd& output_grad) const;

  /// Same as backward, also returning the gradient w.r.t. the inputs.
  Eigen::VectorXd backward(const GradientTape& tape, const Eigen::MatrixXd& output_grad,
                           Eigen::MatrixXd* input_grad) const;

 private:
  void layout();

  std::vector<int> sizes_;
  Activation activation_ = Activation::tanh;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
  std::uint64_t version_ = 0;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

/// One bias-corrected Adam step, descending along grads.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, const AdamConfig& config);

/// Rescales grads in place so that their norm is at most max_norm (no-op when max_norm <= 0).
void clip_grad_norm(Eigen::VectorXd& grads, double max_norm);

/// Text format: "mlp <activation> <num_sizes> <sizes...>" then one line per
/// layer "W <out> <in> <row-major values>" and "b <out> <values>".
void write_mlp(std::ostream& out, const Mlp& net);
Mlp read_mlp(std::istream& in);

}  // namespace tce
