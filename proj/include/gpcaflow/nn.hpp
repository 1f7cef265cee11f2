#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gpcaflow/common.hpp"

namespace gpcaflow::nn {

enum class Activation { Tanh, Gelu };

Activation activation_from_string(std::string_view name);
std::string to_string(Activation a);

struct MlpConfig {
  int latent_dim = 2;
  std::vector<int> hidden = {256, 256, 256};
  Activation activation = Activation::Tanh;
  int time_frequencies = 16;  // sin/cos pairs, geometric spacing
  double time_freq_min = 1.0;
  double time_freq_max = 1000.0;
};

/// Weight matrices (fan_in x fan_out) and bias vectors, one per layer.
/// Also the shape of a parameter gradient.
struct Tensors {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

/// Feed-forward network (z, t) -> R^d for the flow-matching velocity.
/// Batches are rows; t enters through sinusoidal features concatenated
/// to z.
class Mlp {
 public:
  Mlp(MlpConfig config, std::uint64_t seed);

  const MlpConfig& config() const { return config_; }
  int latent_dim() const { return config_.latent_dim; }
  int input_dim() const {
    return config_.latent_dim + 2 * config_.time_frequencies;
  }

  Eigen::MatrixXd time_features(const Eigen::VectorXd& t) const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& z,
                          const Eigen::VectorXd& t) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& z, double t) const;

  /// Layer inputs retained for backpropagation. `pre[l]` is the
  /// pre-activation of hidden layer l; `post[l]` its activation, with
  /// post[-1] conceptually the network input (stored in `input`).
  struct Cache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> post;
  };

  Eigen::MatrixXd forward_cached(const Eigen::MatrixXd& z,
                                 const Eigen::VectorXd& t,
                                 Cache& cache) const;

  /// Parameter gradients for upstream dL/d(output), summed over the
  /// batch rows.
  Tensors backward(const Cache& cache, const Eigen::MatrixXd& upstream) const;

  Tensors& params() { return params_; }
  const Tensors& params() const { return params_; }
  Tensors zero_like() const;

  void save(const std::filesystem::path& path) const;
  static Mlp load(const std::filesystem::path& path);

 private:
  MlpConfig config_;
  Tensors params_;
  std::vector<double> freqs_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam for a single parameter tensor.
class Adam {
 public:
  Adam(Eigen::Index rows, Eigen::Index cols, AdamConfig config);

  void step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad);

  /// Update only the given rows (used for mini-batched coefficient
  /// optimization). Bias correction uses the shared step counter.
  void step_rows(Eigen::Ref<Eigen::MatrixXd> param,
                 const Eigen::MatrixXd& grad_rows,
                 const std::vector<Eigen::Index>& rows);

  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  void update_block(Eigen::Ref<Eigen::MatrixXd> param,
                    const Eigen::MatrixXd& grad, Eigen::Index row);

  AdamConfig config_;
  Eigen::MatrixXd m_, v_;
  long t_ = 0;
};

/// One Adam per tensor of an Mlp, sharing hyperparameters.
class MlpAdam {
 public:
  MlpAdam(const Mlp& net, AdamConfig config);
  void step(Mlp& net, const Tensors& grads);

 private:
  std::vector<Adam> w_states_;
  std::vector<Adam> b_states_;
};

}  // namespace gpcaflow::nn
