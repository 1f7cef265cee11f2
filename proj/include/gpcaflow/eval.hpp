#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <vector>

#include "gpcaflow/datasets.hpp"
#include "gpcaflow/gpca.hpp"

namespace gpcaflow::eval {

struct HammingCurveRow {
  Eigen::Index d;
  long total;
  long min_per_sample;
  long max_per_sample;
};

/// Fits one GPCA model per latent dimension (shared seed and step
/// budget from `config`) and reports the total plus per-sample min/max
/// Hamming reconstruction errors. `dims` must be sorted ascending.
std::vector<HammingCurveRow> hamming_curve(const OneHotDataset& data,
                                           const std::vector<Eigen::Index>& dims,
                                           const gpca::GpcaConfig& config);

void write_curve_csv(const std::vector<HammingCurveRow>& rows,
                     const std::filesystem::path& path);

/// Joint count matrix of the two variables of an n = 2 dataset
/// (entry (a-1, b-1) counts samples with index pair (a, b)).
Eigen::MatrixXd joint_histogram(const OneHotDataset& data);

/// Half the L1 distance between the two histograms after normalizing
/// each to total mass one.
double tv_distance(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2);

struct Neighbor {
  Eigen::Index index;
  long distance;
};

/// Exact k-nearest rows of the dataset by Hamming distance, full scan;
/// ties resolve to the lower index, distances non-decreasing.
std::vector<Neighbor> nearest_training(std::span<const std::int32_t> sample,
                                       const OneHotDataset& data,
                                       Eigen::Index k);

void write_histogram_csv(const Eigen::MatrixXd& hist,
                         const std::filesystem::path& path);

/// 8-bit binary PGM, counts normalized by the maximum cell.
void write_histogram_pgm(const Eigen::MatrixXd& hist,
                         const std::filesystem::path& path);

}  // namespace gpcaflow::eval
