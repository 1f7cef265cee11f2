#include <doctest.h>

#include <cmath>

#include "gpcaflow/nn.hpp"
#include "test_support.hpp"

using namespace gpcaflow;
using namespace gpcaflow::nn;
using gpcaflow::testing::TempDir;
using gpcaflow::testing::uniform_matrix;

namespace {

MlpConfig small_config(Activation act = Activation::Tanh) {
  MlpConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden = {16};
  cfg.activation = act;
  cfg.time_frequencies = 4;
  return cfg;
}

// Squared-error training loss against fixed targets, the objective the
// backward pass is specified for.
double batch_loss(const Mlp& net, const Eigen::MatrixXd& z,
                  const Eigen::VectorXd& t, const Eigen::MatrixXd& target) {
  return (net.forward(z, t) - target).squaredNorm();
}

Tensors analytic_grads(const Mlp& net, const Eigen::MatrixXd& z,
                       const Eigen::VectorXd& t,
                       const Eigen::MatrixXd& target) {
  Mlp::Cache cache;
  const Eigen::MatrixXd out = net.forward_cached(z, t, cache);
  return net.backward(cache, 2.0 * (out - target));
}

// Central finite differences over every parameter entry.
void check_grads_against_fd(Mlp& net, const Eigen::MatrixXd& z,
                            const Eigen::VectorXd& t,
                            const Eigen::MatrixXd& target) {
  const double step = 1e-5;
  const Tensors grads = analytic_grads(net, z, t, target);
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double hi = batch_loss(net, z, t, target);
    param = saved - step;
    const double lo = batch_loss(net, z, t, target);
    param = saved;
    const double fd = (hi - lo) / (2.0 * step);
    const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic) / scale);
  };
  for (std::size_t l = 0; l < net.params().w.size(); ++l) {
    auto& w = net.params().w[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        probe(w(i, j), grads.w[l](i, j));
      }
    }
    auto& b = net.params().b[l];
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      probe(b[j], grads.b[l][j]);
    }
  }
  CHECK(worst < 1e-4);
}

}  // namespace

TEST_CASE("forward: zero weights give zero output, correct shape") {
  Mlp net(small_config(), 1);
  for (auto& w : net.params().w) w.setZero();
  for (auto& b : net.params().b) b.setZero();
  Rng rng(2);
  const Eigen::MatrixXd z = uniform_matrix(rng, 5, 2, -1.0, 1.0);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  const Eigen::MatrixXd out = net.forward(z, t);
  CHECK(out.rows() == 5);
  CHECK(out.cols() == 2);
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: single-sample overload matches the batch path") {
  Mlp net(small_config(), 3);
  Rng rng(4);
  const Eigen::VectorXd z = rng.normal_vector(2);
  const double t = 0.37;
  const Eigen::VectorXd single = net.forward(z, t);
  const Eigen::MatrixXd batch =
      net.forward(z.transpose(), Eigen::VectorXd::Constant(1, t));
  CHECK((single - batch.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: Lipschitz probe under tiny input perturbations") {
  Mlp net(small_config(), 5);
  Rng rng(6);
  double weight_bound = 1.0;  // Frobenius norms bound the spectral norms
  for (const auto& w : net.params().w) weight_bound *= w.norm();
  for (int it = 0; it < 20; ++it) {
    const Eigen::VectorXd z = rng.normal_vector(2);
    const double t = rng.uniform();
    Eigen::VectorXd dz = rng.normal_vector(2);
    dz *= 1e-8 / dz.norm();
    const double change = (net.forward(z + dz, t) - net.forward(z, t)).norm();
    CHECK(change <= 1e-4 * weight_bound);
  }
}

TEST_CASE("backward matches central finite differences (tanh, 2-16-2)") {
  Mlp net(small_config(Activation::Tanh), 7);
  Rng rng(8);
  const Eigen::MatrixXd z = uniform_matrix(rng, 3, 2, -1.0, 1.0);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(3, 0.1, 0.9);
  const Eigen::MatrixXd target = uniform_matrix(rng, 3, 2, -1.0, 1.0);
  check_grads_against_fd(net, z, t, target);
}

TEST_CASE("backward matches central finite differences (gelu)") {
  Mlp net(small_config(Activation::Gelu), 9);
  Rng rng(10);
  const Eigen::MatrixXd z = uniform_matrix(rng, 3, 2, -1.0, 1.0);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(3, 0.1, 0.9);
  const Eigen::MatrixXd target = uniform_matrix(rng, 3, 2, -1.0, 1.0);
  check_grads_against_fd(net, z, t, target);
}

TEST_CASE("backward: gradient vanishes at a perfect fit") {
  Mlp net(small_config(), 11);
  Rng rng(12);
  const Eigen::MatrixXd z = uniform_matrix(rng, 4, 2, -1.0, 1.0);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(4, 0.5);
  const Eigen::MatrixXd target = net.forward(z, t);
  const Tensors grads = analytic_grads(net, z, t, target);
  for (const auto& w : grads.w) CHECK(w.cwiseAbs().maxCoeff() < 1e-10);
  for (const auto& b : grads.b) CHECK(b.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("backward: duplicating the batch doubles the summed gradient") {
  Mlp net(small_config(), 13);
  Rng rng(14);
  const Eigen::MatrixXd z = uniform_matrix(rng, 3, 2, -1.0, 1.0);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
  const Eigen::MatrixXd target = uniform_matrix(rng, 3, 2, -1.0, 1.0);

  Eigen::MatrixXd z2(6, 2), target2(6, 2);
  z2 << z, z;
  target2 << target, target;
  Eigen::VectorXd t2(6);
  t2 << t, t;

  const Tensors single = analytic_grads(net, z, t, target);
  const Tensors doubled = analytic_grads(net, z2, t2, target2);
  for (std::size_t l = 0; l < single.w.size(); ++l) {
    CHECK((doubled.w[l] - 2.0 * single.w[l]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((doubled.b[l] - 2.0 * single.b[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  AdamConfig cfg;
  Adam adam(2, 2, cfg);
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(2, 2, 3.0);
  const Eigen::MatrixXd before = p;
  adam.step(p, Eigen::MatrixXd::Zero(2, 2));
  CHECK((p - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: first step moves by -lr * sign(grad)") {
  AdamConfig cfg;
  cfg.lr = 0.05;
  Adam adam(1, 3, cfg);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd g(1, 3);
  g << 4.0, -0.3, 1e-3;
  adam.step(p, g);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double expected = -cfg.lr * (g(0, j) > 0 ? 1.0 : -1.0);
    CHECK(p(0, j) == doctest::Approx(expected).epsilon(1e-4));
  }
}

TEST_CASE("adam: quadratic bowl converges below 1e-6 within 2000 steps") {
  AdamConfig cfg;
  cfg.lr = 1e-2;
  Adam adam(2, 1, cfg);
  Eigen::MatrixXd p(2, 1);
  p << 1.5, -2.0;
  const Eigen::MatrixXd target = Eigen::MatrixXd::Zero(2, 1);
  double loss = 0.0;
  for (int step = 0; step < 2000; ++step) {
    const Eigen::MatrixXd diff = p - target;
    loss = diff.squaredNorm();
    adam.step(p, 2.0 * diff);
  }
  CHECK(loss < 1e-6);
}

TEST_CASE("checkpoint round trip preserves outputs exactly") {
  TempDir tmp("mlp");
  MlpConfig cfg = small_config(Activation::Gelu);
  cfg.hidden = {8, 8};
  Mlp net(cfg, 15);
  net.save(tmp.path("net.mlp"));
  const Mlp back = Mlp::load(tmp.path("net.mlp"));
  CHECK(back.config().hidden == cfg.hidden);
  CHECK(back.config().activation == Activation::Gelu);
  Rng rng(16);
  const Eigen::MatrixXd z = uniform_matrix(rng, 4, 2, -1.0, 1.0);
  const Eigen::VectorXd t = Eigen::VectorXd::Constant(4, 0.25);
  CHECK((net.forward(z, t) - back.forward(z, t)).cwiseAbs().maxCoeff() == 0.0);
}
