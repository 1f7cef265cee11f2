#include "gpcaflow/flowmatch.hpp"

#include <cmath>

namespace gpcaflow::flowmatch {

CouplingSampler::CouplingSampler(Eigen::MatrixXd targets, std::uint64_t seed,
                                 SourceKind source)
    : targets_(std::move(targets)), rng_(seed), source_(source) {
  if (targets_.rows() < 1) {
    throw DataError("CouplingSampler: target coefficient matrix is empty");
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> CouplingSampler::sample_pair() {
  Eigen::VectorXd z0;
  if (source_ == SourceKind::StandardNormal) {
    z0 = rng_.normal_vector(dim());
  } else {
    z0 = Eigen::VectorXd::Zero(dim());
  }
  const auto row = static_cast<Eigen::Index>(
      rng_.below(static_cast<std::uint64_t>(targets_.rows())));
  return {std::move(z0), targets_.row(row).transpose()};
}

void CouplingSampler::sample_batch(Eigen::Index batch, Eigen::MatrixXd& z0,
                                   Eigen::MatrixXd& z1, Eigen::VectorXd& t) {
  z0.resize(batch, dim());
  z1.resize(batch, dim());
  t.resize(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    auto [a, c] = sample_pair();
    z0.row(b) = a.transpose();
    z1.row(b) = c.transpose();
    t[b] = rng_.uniform();
  }
}

Interpolant interpolant(const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
                        double t) {
  if (z0.size() != z1.size()) {
    throw DataError("interpolant: endpoint dimension mismatch");
  }
  return Interpolant{(1.0 - t) * z0 + t * z1, z1 - z0};
}

FlowModel make_flow_model(gpca::LatentModel latent, nn::MlpConfig net_config,
                          std::uint64_t seed) {
  if (!latent.finalized) {
    throw DataError("make_flow_model: GPCA model must be finalized "
                    "(orthonormal basis)");
  }
  net_config.latent_dim = static_cast<int>(latent.d);
  return FlowModel{std::move(latent), nn::Mlp(net_config, seed)};
}

double cfm_loss(const nn::Mlp& net, const Eigen::MatrixXd& z0,
                const Eigen::MatrixXd& z1, const Eigen::VectorXd& t) {
  if (z0.rows() != z1.rows() || z0.cols() != z1.cols() ||
      t.size() != z0.rows()) {
    throw DataError("cfm_loss: batch shape mismatch");
  }
  const Eigen::MatrixXd z_t =
      z0.array().colwise() * (1.0 - t.array()) +
      z1.array().colwise() * t.array();
  const Eigen::MatrixXd out = net.forward(z_t, t);
  return (out - (z1 - z0)).squaredNorm() / static_cast<double>(z0.rows());
}

namespace {

// Debug cross-check: the decoded latent interpolant must coincide with
// the simplex e-geodesic of the decoded endpoints.
void check_commuting_square(const gpca::LatentModel& latent,
                            const Eigen::MatrixXd& z0,
                            const Eigen::MatrixXd& z1,
                            const Eigen::VectorXd& t) {
  using geometry::NaturalParams;
  using geometry::unvectorize_rows;
  for (Eigen::Index b = 0; b < z0.rows(); ++b) {
    const Eigen::VectorXd zt =
        (1.0 - t[b]) * z0.row(b).transpose() + t[b] * z1.row(b).transpose();
    const auto via_latent = geometry::decode(NaturalParams(unvectorize_rows(
        latent.V * zt, latent.n, latent.c - 1)));
    const auto s0 = geometry::decode(NaturalParams(unvectorize_rows(
        latent.V * z0.row(b).transpose(), latent.n, latent.c - 1)));
    const auto s1 = geometry::decode(NaturalParams(unvectorize_rows(
        latent.V * z1.row(b).transpose(), latent.n, latent.c - 1)));
    const auto via_simplex = geometry::e_geodesic(s0, s1, t[b]);
    const double dev =
        (via_latent.probs() - via_simplex.probs()).cwiseAbs().maxCoeff();
    if (dev > 1e-10) {
      throw NumericError(
          "commuting-square check failed: latent interpolation deviates "
          "from the simplex geodesic by " +
          std::to_string(dev));
    }
  }
}

}  // namespace

std::vector<FmTraceRow> train(FlowModel& model, CouplingSampler& sampler,
                              const FmConfig& config) {
  if (!model.latent.finalized) {
    throw DataError("flowmatch::train: GPCA model must be finalized");
  }
  if (sampler.dim() != model.latent.d) {
    throw DataError("flowmatch::train: sampler dimension mismatch");
  }

  nn::MlpAdam adam(model.net, config.adam);
  std::vector<FmTraceRow> trace;
  Eigen::MatrixXd z0, z1;
  Eigen::VectorXd t;
  nn::Mlp::Cache cache;

  for (long step = 0; step < config.steps; ++step) {
    sampler.sample_batch(config.batch, z0, z1, t);
    if (config.check_commuting_square) {
      check_commuting_square(model.latent, z0, z1, t);
    }
    const Eigen::MatrixXd z_t = z0.array().colwise() * (1.0 - t.array()) +
                                z1.array().colwise() * t.array();
    const Eigen::MatrixXd out = model.net.forward_cached(z_t, t, cache);
    const Eigen::MatrixXd residual = out - (z1 - z0);
    const double loss =
        residual.squaredNorm() / static_cast<double>(config.batch);
    if (!std::isfinite(loss)) {
      throw NumericError("flowmatch::train: loss became non-finite at step " +
                         std::to_string(step));
    }
    if (step % std::max(1L, config.trace_every) == 0) {
      trace.push_back({step, loss});
    }
    const Eigen::MatrixXd upstream =
        (2.0 / static_cast<double>(config.batch)) * residual;
    const nn::Tensors grads = model.net.backward(cache, upstream);
    adam.step(model.net, grads);
  }
  return trace;
}

BudgetReport subspace_error_budget(const Eigen::MatrixXd& full_thetas,
                                   const Eigen::MatrixXd& approx_thetas,
                                   double epsilon) {
  if (full_thetas.rows() != approx_thetas.rows() ||
      full_thetas.cols() != approx_thetas.cols()) {
    throw DataError("subspace_error_budget: shape mismatch");
  }
  BudgetReport report;
  report.per_sample_sq_error =
      (full_thetas - approx_thetas).rowwise().squaredNorm();
  report.max_sq_error = full_thetas.rows() > 0
                            ? report.per_sample_sq_error.maxCoeff()
                            : 0.0;
  report.epsilon = epsilon < 0.0 ? report.max_sq_error : epsilon;
  const double root = std::sqrt(report.epsilon);
  report.multiplier = 1.0 + root;
  report.additive = 4.0 * report.epsilon + 4.0 * root;
  return report;
}

}  // namespace gpcaflow::flowmatch
