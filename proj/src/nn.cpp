#include "gpcaflow/nn.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "gpcaflow/rng.hpp"

namespace gpcaflow::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& x) {
  if (act == Activation::Tanh) return x.array().tanh();
  return x.unaryExpr([](double v) { return gelu(v); });
}

Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& pre,
                                const Eigen::MatrixXd& post) {
  if (act == Activation::Tanh) return 1.0 - post.array().square();
  return pre.unaryExpr([](double v) { return gelu_grad(v); });
}

}  // namespace

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "gelu") return Activation::Gelu;
  throw DataError("unknown activation: \"" + std::string(name) + "\"");
}

std::string to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "gelu";
}

Mlp::Mlp(MlpConfig config, std::uint64_t seed) : config_(std::move(config)) {
  if (config_.latent_dim < 1) throw DataError("Mlp: latent_dim must be >= 1");
  if (config_.time_frequencies < 1) {
    throw DataError("Mlp: time_frequencies must be >= 1");
  }
  const int f = config_.time_frequencies;
  freqs_.resize(static_cast<std::size_t>(f));
  for (int k = 0; k < f; ++k) {
    const double expo = f > 1 ? static_cast<double>(k) / (f - 1) : 0.0;
    freqs_[static_cast<std::size_t>(k)] =
        config_.time_freq_min *
        std::pow(config_.time_freq_max / config_.time_freq_min, expo);
  }

  std::vector<int> widths;
  widths.push_back(input_dim());
  for (int h : config_.hidden) {
    if (h < 1) throw DataError("Mlp: hidden widths must be >= 1");
    widths.push_back(h);
  }
  widths.push_back(config_.latent_dim);

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    params_.w.push_back(rng.normal_matrix(widths[l], widths[l + 1]) * scale);
    params_.b.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }
}

Eigen::MatrixXd Mlp::time_features(const Eigen::VectorXd& t) const {
  const auto f = static_cast<Eigen::Index>(freqs_.size());
  Eigen::MatrixXd feats(t.size(), 2 * f);
  for (Eigen::Index k = 0; k < f; ++k) {
    feats.col(2 * k) = (freqs_[static_cast<std::size_t>(k)] * t.array()).sin();
    feats.col(2 * k + 1) =
        (freqs_[static_cast<std::size_t>(k)] * t.array()).cos();
  }
  return feats;
}

Eigen::MatrixXd Mlp::forward_cached(const Eigen::MatrixXd& z,
                                    const Eigen::VectorXd& t,
                                    Cache& cache) const {
  if (z.cols() != config_.latent_dim) {
    throw DataError("Mlp::forward: input has wrong latent dimension");
  }
  if (t.size() != z.rows()) {
    throw DataError("Mlp::forward: t must have one entry per batch row");
  }
  cache.input.resize(z.rows(), input_dim());
  cache.input << z, time_features(t);

  const std::size_t layers = params_.w.size();
  cache.pre.assign(layers - 1, {});
  cache.post.assign(layers - 1, {});

  const Eigen::MatrixXd* h = &cache.input;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    cache.pre[l] = ((*h) * params_.w[l]).rowwise() + params_.b[l].transpose();
    cache.post[l] = apply_activation(config_.activation, cache.pre[l]);
    h = &cache.post[l];
  }
  return ((*h) * params_.w.back()).rowwise() + params_.b.back().transpose();
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& z,
                             const Eigen::VectorXd& t) const {
  Cache cache;
  return forward_cached(z, t, cache);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& z, double t) const {
  Eigen::MatrixXd batch = z.transpose();
  Eigen::VectorXd tv = Eigen::VectorXd::Constant(1, t);
  return forward(batch, tv).row(0).transpose();
}

Tensors Mlp::backward(const Cache& cache,
                      const Eigen::MatrixXd& upstream) const {
  const std::size_t layers = params_.w.size();
  Tensors grads = zero_like();

  Eigen::MatrixXd delta = upstream;  // dL/d(pre-activation of layer l)
  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.post[l - 1];
    grads.w[l].noalias() = below.transpose() * delta;
    grads.b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd dpost = delta * params_.w[l].transpose();
      delta = dpost.cwiseProduct(
          activation_grad(config_.activation, cache.pre[l - 1],
                          cache.post[l - 1]));
    }
  }
  return grads;
}

Tensors Mlp::zero_like() const {
  Tensors t;
  for (const auto& w : params_.w) {
    t.w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params_.b) {
    t.b.push_back(Eigen::VectorXd::Zero(b.size()));
  }
  return t;
}

void Mlp::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("Mlp::save: cannot open " + path.string());
  io::write_magic(out, "MLP1");
  const auto layers = static_cast<std::uint32_t>(params_.w.size());
  io::write_u32(out, layers + 1);
  io::write_u32(out, static_cast<std::uint32_t>(input_dim()));
  for (const auto& w : params_.w) {
    io::write_u32(out, static_cast<std::uint32_t>(w.cols()));
  }
  io::write_u32(out, config_.activation == Activation::Tanh ? 0u : 1u);
  io::write_u32(out, static_cast<std::uint32_t>(config_.time_frequencies));
  io::write_f64(out, config_.time_freq_min);
  io::write_f64(out, config_.time_freq_max);
  for (std::size_t l = 0; l < params_.w.size(); ++l) {
    const auto& w = params_.w[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        io::write_f64(out, w(i, j));
      }
    }
    for (Eigen::Index j = 0; j < params_.b[l].size(); ++j) {
      io::write_f64(out, params_.b[l][j]);
    }
  }
  if (!out) throw DataError("Mlp::save: write failed");
}

Mlp Mlp::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("Mlp::load: cannot open " + path.string());
  io::expect_magic(in, "MLP1", "Mlp::load");
  const std::uint32_t ndims = io::read_u32(in, "Mlp::load");
  if (ndims < 2) throw DataError("Mlp::load: needs at least two layer dims");
  std::vector<std::uint32_t> dims(ndims);
  for (auto& d : dims) d = io::read_u32(in, "Mlp::load");
  const std::uint32_t act = io::read_u32(in, "Mlp::load");
  const std::uint32_t freqs = io::read_u32(in, "Mlp::load");
  const double fmin = io::read_f64(in, "Mlp::load");
  const double fmax = io::read_f64(in, "Mlp::load");

  MlpConfig config;
  config.latent_dim = static_cast<int>(dims.back());
  config.hidden.assign(dims.begin() + 1, dims.end() - 1);
  config.activation = act == 0 ? Activation::Tanh : Activation::Gelu;
  config.time_frequencies = static_cast<int>(freqs);
  config.time_freq_min = fmin;
  config.time_freq_max = fmax;

  Mlp net(config, 0);
  if (net.input_dim() != static_cast<int>(dims.front())) {
    throw DataError("Mlp::load: stored input dim inconsistent with config");
  }
  for (std::size_t l = 0; l < net.params_.w.size(); ++l) {
    auto& w = net.params_.w[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = io::read_f64(in, "Mlp::load");
      }
    }
    for (Eigen::Index j = 0; j < net.params_.b[l].size(); ++j) {
      net.params_.b[l][j] = io::read_f64(in, "Mlp::load");
    }
  }
  return net;
}

Adam::Adam(Eigen::Index rows, Eigen::Index cols, AdamConfig config)
    : config_(config),
      m_(Eigen::MatrixXd::Zero(rows, cols)),
      v_(Eigen::MatrixXd::Zero(rows, cols)) {}

void Adam::update_block(Eigen::Ref<Eigen::MatrixXd> param,
                        const Eigen::MatrixXd& grad, Eigen::Index row) {
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto m = m_.middleRows(row, grad.rows());
  auto v = v_.middleRows(row, grad.rows());
  m = config_.beta1 * m + (1.0 - config_.beta1) * grad;
  v = config_.beta2 * v + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  const Eigen::ArrayXXd mhat = m.array() / bc1;
  const Eigen::ArrayXXd vhat = v.array() / bc2;
  param.middleRows(row, grad.rows()).array() -=
      config_.lr * mhat / (vhat.sqrt() + config_.eps);
}

void Adam::step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad) {
  if (grad.rows() != m_.rows() || grad.cols() != m_.cols()) {
    throw DataError("Adam::step: gradient shape mismatch");
  }
  ++t_;
  update_block(param, grad, 0);
}

void Adam::step_rows(Eigen::Ref<Eigen::MatrixXd> param,
                     const Eigen::MatrixXd& grad_rows,
                     const std::vector<Eigen::Index>& rows) {
  if (grad_rows.rows() != static_cast<Eigen::Index>(rows.size()) ||
      grad_rows.cols() != m_.cols()) {
    throw DataError("Adam::step_rows: gradient shape mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const Eigen::Index cols = m_.cols();
  Eigen::ArrayXd m(cols), v(cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Eigen::Index row = rows[k];
    const auto g = grad_rows.row(static_cast<Eigen::Index>(k)).array();
    m = config_.beta1 * m_.row(row).array() + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v_.row(row).array() + (1.0 - config_.beta2) * g * g;
    m_.row(row) = m;
    v_.row(row) = v;
    param.row(row).array() -=
        config_.lr * (m / bc1) / ((v / bc2).sqrt() + config_.eps);
  }
}

MlpAdam::MlpAdam(const Mlp& net, AdamConfig config) {
  for (const auto& w : net.params().w) {
    w_states_.emplace_back(w.rows(), w.cols(), config);
  }
  for (const auto& b : net.params().b) {
    b_states_.emplace_back(b.size(), 1, config);
  }
}

void MlpAdam::step(Mlp& net, const Tensors& grads) {
  for (std::size_t l = 0; l < w_states_.size(); ++l) {
    w_states_[l].step(net.params().w[l], grads.w[l]);
    b_states_[l].step(net.params().b[l], grads.b[l]);
  }
}

}  // namespace gpcaflow::nn
