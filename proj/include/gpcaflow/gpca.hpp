#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "gpcaflow/datasets.hpp"
#include "gpcaflow/geometry.hpp"

namespace gpcaflow::gpca {

struct GpcaConfig {
  long max_steps = 30000;
  /// Early-stop gate: training stops once the Hamming reconstruction
  /// error is zero AND the largest e-distance to the smoothed targets
  /// is <= epsilon. The default (infinity) disables the distance gate,
  /// so training stops at perfect reconstruction or at max_steps.
  double epsilon = std::numeric_limits<double>::infinity();
  double alpha = 0.02;  // label smoothing for targets and the epsilon gate
  double lr_v = 1e-3;
  double lr_z = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int z_steps_per_round = 10;
  int v_steps_per_round = 10;
  Eigen::Index full_batch_threshold = 4096;  // mini-batch Z above this N
  Eigen::Index batch_size = 1024;
  std::uint64_t seed = 0;
  long check_every_rounds = 5;  // stop-criterion evaluation cadence
};

struct TraceRow {
  long step;
  double loss;
  long hamming;
};

struct FitReport {
  long steps_run = 0;
  long final_hamming = 0;
  double final_max_e_distance = 0.0;
  std::vector<TraceRow> trace;
};

/// Basis V (n(c-1) x d, row-vectorized natural parameters) and the
/// per-sample latent coefficients Z (N x d). After finalization the
/// columns of V are orthonormal.
struct LatentModel {
  Eigen::MatrixXd V;
  Eigen::MatrixXd Z;
  Eigen::Index n = 0;
  Eigen::Index c = 0;
  Eigen::Index d = 0;
  double alpha = 0.02;
  bool finalized = false;

  Eigen::Index ambient_dim() const { return n * (c - 1); }
};

/// Natural parameters of the smoothed one-hot targets: the hit category
/// gets 1 - alpha + alpha/c, every other alpha/c. One row per sample
/// (N x n(c-1), row-vectorized).
struct SmoothedTargets {
  Eigen::MatrixXd theta;
};

SmoothedTargets smooth_dataset(const OneHotDataset& data, double alpha);

/// Categorical cross-entropy of the decoded subspace points against the
/// one-hot data, summed over samples and factors.
double loss(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Z,
            const OneHotDataset& data);

/// Loss and its analytic gradients with respect to V and Z.
double loss_and_grads(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Z,
                      const OneHotDataset& data, Eigen::MatrixXd* grad_v,
                      Eigen::MatrixXd* grad_z);

/// Thin-QR reparameterization: V gains orthonormal columns (positive
/// diagonal of R) and Z is remapped so every product V z_i is
/// preserved.
void orthonormalize_basis(Eigen::MatrixXd& v, Eigen::MatrixXd& z);

/// Alternating Adam on V and Z. Stops early per GpcaConfig::epsilon,
/// else after max_steps; finalizes with a thin QR so V has orthonormal
/// columns while every V z_i is preserved.
std::pair<LatentModel, FitReport> fit(const OneHotDataset& data,
                                      Eigen::Index d,
                                      const GpcaConfig& config);

/// Optimizes coefficients for new data under a frozen, finalized basis.
/// `z_init` warm-starts the coefficients (must be N' x d); defaults to
/// zeros.
std::pair<Eigen::MatrixXd, FitReport> encode_with_fixed_basis(
    const LatentModel& model, const OneHotDataset& data,
    const GpcaConfig& config, const Eigen::MatrixXd* z_init = nullptr);

/// Per-factor argmax of the augmented logits (theta, 0); ties resolve
/// to the lowest category index. Input is n x (c-1), output n labels in
/// [1, c].
std::vector<std::int32_t> round_labels(const Eigen::MatrixXd& theta);

struct Reconstruction {
  geometry::ProductSimplexPoint point;
  std::vector<std::int32_t> labels;
};

/// Decoded simplex point and rounded labels for one latent coordinate.
Reconstruction reconstruct(const LatentModel& model, const Eigen::VectorXd& z);

/// Total Hamming reconstruction error of the model's stored
/// coefficients against the dataset.
long reconstruction_error(const LatentModel& model, const OneHotDataset& data);

/// Per-sample Hamming errors (for min/max summaries).
std::vector<long> per_sample_errors(const LatentModel& model,
                                    const OneHotDataset& data);

/// Archive format "GPCA1": magic, little-endian u32 n, c, d, N, f64
/// alpha, then V and Z as row-major f64.
void save_model(const LatentModel& model, const std::filesystem::path& path);
LatentModel load_model(const std::filesystem::path& path);

void write_report_csv(const FitReport& report,
                      const std::filesystem::path& path);

}  // namespace gpcaflow::gpca
