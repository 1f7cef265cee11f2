#include <doctest.h>

#include <cmath>

#include "gpcaflow/sampler.hpp"
#include "test_support.hpp"

using namespace gpcaflow;
using namespace gpcaflow::sampler;
using gpcaflow::testing::uniform_matrix;

namespace {

flowmatch::FlowModel tiny_model(Rng& rng, Eigen::Index n, Eigen::Index c,
                                Eigen::Index d, Eigen::Index big_n,
                                std::uint64_t net_seed) {
  gpca::LatentModel latent;
  latent.n = n;
  latent.c = c;
  latent.d = d;
  latent.V = uniform_matrix(rng, n * (c - 1), d, -1.0, 1.0);
  latent.Z = uniform_matrix(rng, big_n, d, -1.0, 1.0);
  gpca::orthonormalize_basis(latent.V, latent.Z);
  latent.finalized = true;
  nn::MlpConfig cfg;
  cfg.hidden = {16};
  cfg.time_frequencies = 4;
  cfg.time_freq_max = 100.0;  // keeps the field resolvable at 100 steps
  return flowmatch::make_flow_model(std::move(latent), cfg, net_seed);
}

}  // namespace

TEST_CASE("integrate: constant field lands exactly at z0 + v") {
  Eigen::VectorXd v(3);
  v << 0.5, -1.25, 2.0;
  const Field field = [&](const Eigen::MatrixXd& z, double) {
    return Eigen::MatrixXd(v.transpose().replicate(z.rows(), 1));
  };
  Eigen::MatrixXd z0(2, 3);
  z0 << 0, 0, 0, 1, 1, 1;
  for (const Method m : {Method::Euler, Method::Rk4}) {
    // Power-of-two step count keeps the time grid exact in binary.
    const Eigen::MatrixXd end = integrate_ode(field, z0, 16, m);
    const Eigen::MatrixXd expected = z0.rowwise() + v.transpose();
    CHECK((end - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("integrate: linear field matches the exponential solution") {
  const Field field = [](const Eigen::MatrixXd& z, double) { return z; };
  Eigen::MatrixXd z0(1, 2);
  z0 << 1.0, -0.5;
  const Eigen::MatrixXd end = integrate_ode(field, z0, 100, Method::Rk4);
  const Eigen::MatrixXd expected = std::numbers::e * z0;
  CHECK((end - expected).cwiseAbs().maxCoeff() <
        1e-6 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("integrate: Euler error halves with the step size") {
  const Field field = [](const Eigen::MatrixXd& z, double) { return z; };
  Eigen::MatrixXd z0(1, 1);
  z0 << 1.0;
  const double exact = std::numbers::e;
  const double err100 =
      std::abs(integrate_ode(field, z0, 100, Method::Euler)(0, 0) - exact);
  const double err200 =
      std::abs(integrate_ode(field, z0, 200, Method::Euler)(0, 0) - exact);
  const double ratio = err100 / err200;
  CHECK(ratio > 1.7);
  CHECK(ratio < 2.3);
}

TEST_CASE("integrate: trajectory bookkeeping and error reporting") {
  const Field field = [](const Eigen::MatrixXd& z, double) { return z; };
  Eigen::MatrixXd z0(1, 2);
  z0 << 1.0, 1.0;
  std::vector<Eigen::MatrixXd> traj;
  integrate_ode(field, z0, 7, Method::Euler, &traj);
  CHECK(traj.size() == 8);
  CHECK((traj.front() - z0).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(integrate_ode(field, z0, 0, Method::Euler), DataError);

  const Field blowup = [](const Eigen::MatrixXd& z, double) {
    return Eigen::MatrixXd(z.array().square().matrix() * 1e200);
  };
  try {
    integrate_ode(blowup, z0, 10, Method::Euler);
    FAIL("expected a NumericError");
  } catch (const NumericError& err) {
    CHECK(std::string(err.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("integrate: single-trajectory wrapper matches the batch path") {
  Rng rng(1);
  const auto model = tiny_model(rng, 2, 3, 2, 4, 2);
  const Eigen::VectorXd z0 = rng.normal_vector(2);
  const auto states = integrate(model, z0, 20, Method::Rk4);
  CHECK(states.size() == 21);
  const Eigen::MatrixXd end =
      integrate_batch(model, z0.transpose(), 20, Method::Rk4);
  CHECK((states.back() - end.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generate: empty request keeps metadata") {
  Rng rng(3);
  const auto model = tiny_model(rng, 3, 4, 2, 4, 4);
  const auto result = generate(model, 0, 10, 99);
  CHECK(result.data.N == 0);
  CHECK(result.data.n == 3);
  CHECK(result.data.c == 4);
  CHECK(result.data.indices.empty());
}

TEST_CASE("generate: identical seeds give identical outputs") {
  Rng rng(5);
  const auto model = tiny_model(rng, 2, 5, 2, 4, 6);
  const auto a = generate(model, 25, 16, 1234);
  const auto b = generate(model, 25, 16, 1234);
  CHECK(a.data.indices == b.data.indices);
  CHECK((a.z_final - b.z_final).cwiseAbs().maxCoeff() == 0.0);
  const auto c = generate(model, 25, 16, 1235);
  CHECK(a.data.indices != c.data.indices);
}

TEST_CASE("generate: all decoded points are strictly interior") {
  Rng rng(7);
  const auto model = tiny_model(rng, 2, 4, 2, 4, 8);
  const auto result = generate(model, 10, 8, 11);
  for (Eigen::Index i = 0; i < result.data.N; ++i) {
    const auto rec =
        gpca::reconstruct(model.latent, result.z_final.row(i).transpose());
    CHECK((rec.point.probs().array() > 0.0).all());
  }
}

TEST_CASE("generate: degenerate one-target model hits the target sequence") {
  Rng rng(9);
  gpca::LatentModel latent;
  latent.n = 2;
  latent.c = 3;
  latent.d = 2;
  latent.V = uniform_matrix(rng, 4, 2, -1.0, 1.0);
  latent.Z = uniform_matrix(rng, 1, 2, 0.5, 1.5);
  gpca::orthonormalize_basis(latent.V, latent.Z);
  latent.finalized = true;
  const Eigen::VectorXd target_z = latent.Z.row(0).transpose();
  const auto target_labels = gpca::reconstruct(latent, target_z).labels;

  nn::MlpConfig cfg;
  cfg.hidden = {32, 32};
  auto model = flowmatch::make_flow_model(latent, cfg, 10);
  flowmatch::CouplingSampler sampler(model.latent.Z, 11);
  flowmatch::FmConfig fm;
  fm.steps = 6000;
  fm.batch = 64;
  const auto trace = flowmatch::train(model, sampler, fm);
  REQUIRE(!trace.empty());

  const auto result = generate(model, 1000, 50, 12);
  long hits = 0;
  for (Eigen::Index i = 0; i < result.data.N; ++i) {
    bool match = true;
    for (Eigen::Index j = 0; j < result.data.n; ++j) {
      match &= result.data(i, j) == target_labels[static_cast<std::size_t>(j)];
    }
    hits += match;
  }
  CHECK(hits >= 990);
}

TEST_CASE("generate: rk4 endpoints are step-size robust on a trained model") {
  Rng rng(13);
  auto model = tiny_model(rng, 2, 4, 2, 32, 14);
  flowmatch::CouplingSampler sampler(model.latent.Z, 15);
  flowmatch::FmConfig fm;
  fm.steps = 8000;
  fm.batch = 64;
  flowmatch::train(model, sampler, fm);

  Rng zrng(16);
  const Eigen::MatrixXd z0 = zrng.normal_matrix(20, 2);
  const Eigen::MatrixXd end100 = integrate_batch(model, z0, 100, Method::Rk4);
  const Eigen::MatrixXd end200 = integrate_batch(model, z0, 200, Method::Rk4);
  CHECK((end100 - end200).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("method_from_string round trip") {
  CHECK(method_from_string("euler") == Method::Euler);
  CHECK(method_from_string("rk4") == Method::Rk4);
  CHECK(to_string(Method::Rk4) == "rk4");
  CHECK_THROWS_AS(method_from_string("leapfrog"), DataError);
}
