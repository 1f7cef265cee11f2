#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gpcaflow/common.hpp"

namespace gpcaflow {

/// N discrete samples over n categorical variables with c categories
/// each, stored row-major as 1-based category indices.
struct OneHotDataset {
  Eigen::Index n = 0;
  Eigen::Index c = 0;
  Eigen::Index N = 0;
  std::vector<std::int32_t> indices;  // N * n entries, each in [1, c]

  static OneHotDataset empty(Eigen::Index n, Eigen::Index c);

  std::int32_t operator()(Eigen::Index i, Eigen::Index j) const {
    return indices[static_cast<std::size_t>(i * n + j)];
  }
  std::int32_t& operator()(Eigen::Index i, Eigen::Index j) {
    return indices[static_cast<std::size_t>(i * n + j)];
  }
  const std::int32_t* row(Eigen::Index i) const {
    return indices.data() + i * n;
  }

  void validate() const;  // throws DataError on out-of-range indices
};

namespace datasets {

enum class ToyKind { GaussianMixture, Pinwheel, TwoMoons };

ToyKind toy_kind_from_string(std::string_view name);
std::string to_string(ToyKind kind);

/// Two-dimensional toy distributions discretized onto a c x c grid.
/// The continuous samples live in the [-4, 4]^2 box; each axis is
/// binned uniformly into c cells (floor, clamped to the edge bins).
struct ToySpec {
  ToyKind kind = ToyKind::Pinwheel;
  Eigen::Index N = 10000;
  Eigen::Index c = 92;
  std::uint64_t seed = 0;

  // Shape parameters (fixed defaults).
  int mixture_components = 8;
  double mixture_radius = 2.5;
  double mixture_sigma = 0.3;
  int pinwheel_arms = 5;
  double pinwheel_radial_std = 0.2;
  double pinwheel_tangential_std = 0.02;
  double pinwheel_rate = 0.25;
  double pinwheel_scale = 2.6;
  double moons_radius = 2.0;
  double moons_noise = 0.1;
};

/// The continuous generator behind make_toy, exposed so tests can probe
/// the distribution before discretization. Returns an N x 2 matrix.
Eigen::MatrixXd sample_toy_continuous(const ToySpec& spec);

OneHotDataset make_toy(const ToySpec& spec);

/// IDX image file (big-endian magic 0x00000803, u8 pixels), binarized
/// at `threshold` (category 2 iff pixel >= threshold). When
/// `pad_28_to_32` is set, 28x28 images are zero-padded to 32x32 with a
/// centered 2-pixel border; other image sizes are rejected then.
OneHotDataset load_idx_images(const std::filesystem::path& path,
                              int threshold = 128, bool pad_28_to_32 = false);

/// Writes a c=2 dataset back to IDX with pixels 0 / 255. rows*cols must
/// equal the dataset's n.
void save_idx_images(const OneHotDataset& data,
                     const std::filesystem::path& path, Eigen::Index rows,
                     Eigen::Index cols);

/// One sequence per line over a fixed alphabet (default ACGT mapping to
/// categories 1..4). All lines must have the same length; an empty file
/// is an error.
OneHotDataset load_sequences(const std::filesystem::path& path,
                             std::string_view alphabet = "ACGT");
void save_sequences(const OneHotDataset& data,
                    const std::filesystem::path& path,
                    std::string_view alphabet = "ACGT");

/// Native text format: header line "n c N" followed by N lines of n
/// space-separated 1-based indices.
OneHotDataset load_text(const std::filesystem::path& path);
void save_text(const OneHotDataset& data, const std::filesystem::path& path);

}  // namespace datasets
}  // namespace gpcaflow
