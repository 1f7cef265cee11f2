#include "gpcaflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gpcaflow::eval {

std::vector<HammingCurveRow> hamming_curve(const OneHotDataset& data,
                                           const std::vector<Eigen::Index>& dims,
                                           const gpca::GpcaConfig& config) {
  if (dims.empty()) throw DataError("hamming_curve: no dimensions given");
  if (!std::is_sorted(dims.begin(), dims.end())) {
    throw DataError("hamming_curve: dims must be sorted ascending");
  }
  std::vector<HammingCurveRow> rows;
  rows.reserve(dims.size());
  for (const Eigen::Index d : dims) {
    auto [model, report] = gpca::fit(data, d, config);
    const auto errors = gpca::per_sample_errors(model, data);
    long total = 0;
    long lo = errors.empty() ? 0 : errors.front();
    long hi = lo;
    for (long e : errors) {
      total += e;
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    rows.push_back({d, total, lo, hi});
  }
  return rows;
}

void write_curve_csv(const std::vector<HammingCurveRow>& rows,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_curve_csv: cannot open " + path.string());
  out << "d,total_error,min_error,max_error\n";
  for (const auto& row : rows) {
    out << row.d << ',' << row.total << ',' << row.min_per_sample << ','
        << row.max_per_sample << '\n';
  }
  if (!out) throw DataError("write_curve_csv: write failed");
}

Eigen::MatrixXd joint_histogram(const OneHotDataset& data) {
  if (data.n != 2) {
    throw DataError("joint_histogram: dataset must have exactly two "
                    "variables, got n = " +
                    std::to_string(data.n));
  }
  Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(data.c, data.c);
  for (Eigen::Index i = 0; i < data.N; ++i) {
    hist(data(i, 0) - 1, data(i, 1) - 1) += 1.0;
  }
  return hist;
}

double tv_distance(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2) {
  if (h1.rows() != h2.rows() || h1.cols() != h2.cols()) {
    throw DataError("tv_distance: histogram shape mismatch");
  }
  const double t1 = h1.sum();
  const double t2 = h2.sum();
  if (t1 <= 0.0 || t2 <= 0.0) {
    throw DataError("tv_distance: histogram with zero total mass");
  }
  return 0.5 * (h1 / t1 - h2 / t2).cwiseAbs().sum();
}

std::vector<Neighbor> nearest_training(std::span<const std::int32_t> sample,
                                       const OneHotDataset& data,
                                       Eigen::Index k) {
  if (static_cast<Eigen::Index>(sample.size()) != data.n) {
    throw DataError("nearest_training: query length mismatch");
  }
  if (k < 1 || k > data.N) {
    throw DataError("nearest_training: k must be in [1, N]");
  }
  std::vector<Neighbor> all(static_cast<std::size_t>(data.N));
  for (Eigen::Index i = 0; i < data.N; ++i) {
    long dist = 0;
    const std::int32_t* row = data.row(i);
    for (Eigen::Index j = 0; j < data.n; ++j) {
      dist += row[j] != sample[static_cast<std::size_t>(j)];
    }
    all[static_cast<std::size_t>(i)] = {i, dist};
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Neighbor& a, const Neighbor& b) {
                     return a.distance < b.distance ||
                            (a.distance == b.distance && a.index < b.index);
                   });
  all.resize(static_cast<std::size_t>(k));
  return all;
}

void write_histogram_csv(const Eigen::MatrixXd& hist,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("write_histogram_csv: cannot open " + path.string());
  }
  for (Eigen::Index i = 0; i < hist.rows(); ++i) {
    for (Eigen::Index j = 0; j < hist.cols(); ++j) {
      if (j) out << ',';
      out << hist(i, j);
    }
    out << '\n';
  }
  if (!out) throw DataError("write_histogram_csv: write failed");
}

void write_histogram_pgm(const Eigen::MatrixXd& hist,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("write_histogram_pgm: cannot open " + path.string());
  }
  const double peak = hist.maxCoeff();
  out << "P5\n" << hist.cols() << ' ' << hist.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < hist.rows(); ++i) {
    for (Eigen::Index j = 0; j < hist.cols(); ++j) {
      const double v = peak > 0.0 ? hist(i, j) / peak : 0.0;
      out.put(static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  if (!out) throw DataError("write_histogram_pgm: write failed");
}

}  // namespace gpcaflow::eval
