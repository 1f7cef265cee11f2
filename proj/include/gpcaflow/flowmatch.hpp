#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "gpcaflow/gpca.hpp"
#include "gpcaflow/nn.hpp"
#include "gpcaflow/rng.hpp"

namespace gpcaflow::flowmatch {

enum class SourceKind { StandardNormal, Zero };

/// Draws training pairs (z0, z1): z1 uniformly with replacement from
/// the rows of the target coefficient matrix, z0 from the reference
/// measure (standard normal by default; Zero is a degenerate source for
/// tests).
class CouplingSampler {
 public:
  CouplingSampler(Eigen::MatrixXd targets, std::uint64_t seed,
                  SourceKind source = SourceKind::StandardNormal);

  std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair();

  /// Draws a batch of pairs plus one t ~ U[0,1) per pair.
  void sample_batch(Eigen::Index batch, Eigen::MatrixXd& z0,
                    Eigen::MatrixXd& z1, Eigen::VectorXd& t);

  Eigen::Index dim() const { return targets_.cols(); }

 private:
  Eigen::MatrixXd targets_;
  Rng rng_;
  SourceKind source_;
};

struct Interpolant {
  Eigen::VectorXd z_t;
  Eigen::VectorXd velocity;
};

/// Straight-line interpolant z_t = (1-t) z0 + t z1 with constant
/// velocity z1 - z0. In latent coordinates of an orthonormal basis this
/// is exactly the e-geodesic of the decoded endpoints.
Interpolant interpolant(const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
                        double t);

/// The latent vector field net together with the finalized GPCA model
/// whose subspace it lives on.
struct FlowModel {
  gpca::LatentModel latent;
  nn::Mlp net;
};

/// Validates that the basis is finalized (orthonormal columns) and that
/// the net's latent dimension matches.
FlowModel make_flow_model(gpca::LatentModel latent, nn::MlpConfig net_config,
                          std::uint64_t seed);

/// Mean over the batch of ||net(z_t, t) - (z1 - z0)||^2.
double cfm_loss(const nn::Mlp& net, const Eigen::MatrixXd& z0,
                const Eigen::MatrixXd& z1, const Eigen::VectorXd& t);

struct FmConfig {
  long steps = 20000;
  Eigen::Index batch = 256;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
  long trace_every = 100;
  /// Re-derives each batch's interpolants through the simplex geodesic
  /// and cross-checks them against the latent straight lines; expensive,
  /// intended for debugging runs.
  bool check_commuting_square = false;
};

struct FmTraceRow {
  long step;
  double loss;
};

/// Conditional flow matching: per step draw a batch of pairs and times,
/// regress the net onto the straight-line velocities, one Adam step.
std::vector<FmTraceRow> train(FlowModel& model, CouplingSampler& sampler,
                              const FmConfig& config);

/// Per-sample squared natural-parameter errors of a subspace
/// approximation and the loss budget implied by them: training on the
/// approximations bounds the full loss by multiplier * L + additive.
struct BudgetReport {
  Eigen::VectorXd per_sample_sq_error;
  double max_sq_error = 0.0;
  double epsilon = 0.0;
  double multiplier = 0.0;  // 1 + sqrt(epsilon)
  double additive = 0.0;    // 4 epsilon + 4 sqrt(epsilon)

  double budget(double subspace_loss) const {
    return multiplier * subspace_loss + additive;
  }
};

/// epsilon < 0 (the default) derives the bound from the measured
/// maximum squared error.
BudgetReport subspace_error_budget(const Eigen::MatrixXd& full_thetas,
                                   const Eigen::MatrixXd& approx_thetas,
                                   double epsilon = -1.0);

}  // namespace gpcaflow::flowmatch
