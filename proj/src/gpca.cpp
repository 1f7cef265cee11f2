#include "gpcaflow/gpca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "gpcaflow/nn.hpp"
#include "gpcaflow/rng.hpp"

namespace gpcaflow::gpca {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EvalOut {
  double loss = 0.0;
  long hamming = 0;
};

// Cross-entropy, gradient wrt the subspace logits, and optionally the
// Hamming error, evaluated on a batch of row-vectorized logits. `rows`
// maps batch rows to dataset rows (null = identity).
EvalOut eval_logits(const RowMat& theta_hat, const OneHotDataset& data,
                    const std::vector<Eigen::Index>* rows, RowMat* grad,
                    bool want_hamming) {
  const Eigen::Index batch = theta_hat.rows();
  const Eigen::Index n = data.n;
  const Eigen::Index cm1 = data.c - 1;
  if (grad) grad->resize(batch, n * cm1);

  EvalOut out;
  if (cm1 == 1) {
    // Binary fast path: one logit per factor, whole-matrix arithmetic.
    const RowMat m = theta_hat.cwiseMax(0.0);
    const RowMat e = (theta_hat - m).array().exp();
    const RowMat denom = e + (-m).array().exp().matrix();
    out.loss += (m.array() + denom.array().log()).sum();
    if (grad) *grad = e.cwiseQuotient(denom);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Eigen::Index i = rows ? (*rows)[static_cast<std::size_t>(b)] : b;
      for (Eigen::Index j = 0; j < n; ++j) {
        const bool hit_first = data(i, j) == 1;
        if (hit_first) {
          out.loss -= theta_hat(b, j);
          if (grad) (*grad)(b, j) -= 1.0;
        }
        if (want_hamming) {
          const bool rounds_first = theta_hat(b, j) >= 0.0;
          out.hamming += rounds_first != hit_first;
        }
      }
    }
    return out;
  }

  Eigen::VectorXd m(batch), denom(batch);
  Eigen::MatrixXd p(batch, cm1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index base = j * cm1;
    auto block = theta_hat.middleCols(base, cm1);
    m = block.rowwise().maxCoeff().cwiseMax(0.0);
    p = (block.colwise() - m).array().exp();
    denom = p.rowwise().sum();
    denom.array() += (-m.array()).exp();
    out.loss += (m.array() + denom.array().log()).sum();
    if (grad) {
      grad->middleCols(base, cm1) = p.array().colwise() / denom.array();
    }
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Eigen::Index i = rows ? (*rows)[static_cast<std::size_t>(b)] : b;
      const std::int32_t x = data(i, j);
      if (x < data.c) {
        out.loss -= theta_hat(b, base + x - 1);
        if (grad) (*grad)(b, base + x - 1) -= 1.0;
      }
    }
  }
  if (want_hamming) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Eigen::Index i = rows ? (*rows)[static_cast<std::size_t>(b)] : b;
      for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index base = j * cm1;
        std::int32_t label = 1;
        double best = theta_hat(b, base);
        for (Eigen::Index k = 1; k < cm1; ++k) {
          if (theta_hat(b, base + k) > best) {
            best = theta_hat(b, base + k);
            label = static_cast<std::int32_t>(k + 1);
          }
        }
        if (0.0 > best) label = static_cast<std::int32_t>(data.c);
        if (label != data(i, j)) ++out.hamming;
      }
    }
  }
  return out;
}

double max_row_distance(const RowMat& theta_hat, const Eigen::MatrixXd& targets) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta_hat.rows(); ++i) {
    worst = std::max(worst, (theta_hat.row(i) - targets.row(i)).squaredNorm());
  }
  return std::sqrt(worst);
}

// Deterministic minibatch scheduler: a reshuffled pass over all rows,
// consumed batch_size at a time.
class BatchSchedule {
 public:
  BatchSchedule(Eigen::Index total, Eigen::Index batch_size, Rng& rng)
      : rng_(rng), batch_(std::min(batch_size, total)) {
    perm_.resize(static_cast<std::size_t>(total));
    for (Eigen::Index i = 0; i < total; ++i) {
      perm_[static_cast<std::size_t>(i)] = i;
    }
    shuffle();
  }

  const std::vector<Eigen::Index>& next() {
    if (pos_ + static_cast<std::size_t>(batch_) > perm_.size()) {
      shuffle();
    }
    current_.assign(perm_.begin() + static_cast<std::ptrdiff_t>(pos_),
                    perm_.begin() + static_cast<std::ptrdiff_t>(pos_) + batch_);
    pos_ += static_cast<std::size_t>(batch_);
    return current_;
  }

 private:
  void shuffle() {
    for (std::size_t i = perm_.size(); i > 1; --i) {
      std::swap(perm_[i - 1], perm_[rng_.below(i)]);
    }
    pos_ = 0;
  }

  Rng& rng_;
  Eigen::Index batch_;
  std::vector<Eigen::Index> perm_;
  std::vector<Eigen::Index> current_;
  std::size_t pos_ = 0;
};

// Shared driver for fit (optimize V and Z) and encode_with_fixed_basis
// (optimize Z only).
FitReport alternate(const OneHotDataset& data, const GpcaConfig& config,
                    Eigen::MatrixXd& v, Eigen::MatrixXd& z, bool update_v) {
  const Eigen::Index big_n = data.N;
  const bool minibatch =
      big_n >= config.full_batch_threshold && config.batch_size < big_n;

  Rng rng(config.seed + 0x9e3779b97f4a7c15ull);  // batching stream
  BatchSchedule schedule(big_n, minibatch ? config.batch_size : big_n, rng);

  nn::AdamConfig z_adam_cfg{config.lr_z, config.beta1, config.beta2,
                            config.adam_eps};
  nn::AdamConfig v_adam_cfg{config.lr_v, config.beta1, config.beta2,
                            config.adam_eps};
  nn::Adam adam_z(z.rows(), z.cols(), z_adam_cfg);
  nn::Adam adam_v(v.rows(), v.cols(), v_adam_cfg);

  const Eigen::MatrixXd targets = smooth_dataset(data, config.alpha).theta;

  FitReport report;
  RowMat theta_hat, grad;
  Eigen::MatrixXd zb;

  auto check_now = [&](long step) -> std::pair<bool, EvalOut> {
    theta_hat.noalias() = z * v.transpose();
    const EvalOut stats = eval_logits(theta_hat, data, nullptr, nullptr, true);
    if (!std::isfinite(stats.loss)) {
      throw NumericError(
          "gpca: loss became non-finite at step " + std::to_string(step) +
          "; lower the learning rates");
    }
    const double max_e = max_row_distance(theta_hat, targets);
    report.trace.push_back({step, stats.loss, stats.hamming});
    report.final_hamming = stats.hamming;
    report.final_max_e_distance = max_e;
    const bool stop = stats.hamming == 0 && max_e <= config.epsilon;
    return {stop, stats};
  };

  long step = 0;
  long round = 0;
  bool stopped = false;
  while (step < config.max_steps && !stopped) {
    for (int k = 0; k < config.z_steps_per_round && step < config.max_steps;
         ++k, ++step) {
      if (minibatch) {
        const auto& rows = schedule.next();
        zb.resize(static_cast<Eigen::Index>(rows.size()), z.cols());
        for (std::size_t b = 0; b < rows.size(); ++b) {
          zb.row(static_cast<Eigen::Index>(b)) = z.row(rows[b]);
        }
        theta_hat.noalias() = zb * v.transpose();
        eval_logits(theta_hat, data, &rows, &grad, false);
        adam_z.step_rows(z, grad * v, rows);
      } else {
        theta_hat.noalias() = z * v.transpose();
        eval_logits(theta_hat, data, nullptr, &grad, false);
        adam_z.step(z, grad * v);
      }
    }
    for (int k = 0;
         update_v && k < config.v_steps_per_round && step < config.max_steps;
         ++k, ++step) {
      theta_hat.noalias() = z * v.transpose();
      eval_logits(theta_hat, data, nullptr, &grad, false);
      adam_v.step(v, grad.transpose() * z);
    }
    ++round;
    if (round % std::max(1L, config.check_every_rounds) == 0) {
      stopped = check_now(step).first;
    }
  }
  if (report.trace.empty() || report.trace.back().step != step) {
    check_now(step);
  }
  report.steps_run = step;
  return report;
}

}  // namespace

void orthonormalize_basis(Eigen::MatrixXd& v, Eigen::MatrixXd& z) {
  const Eigen::Index d = v.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), d);
  Eigen::MatrixXd r =
      qr.matrixQR().topRows(d).template triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < d; ++k) {
    if (r(k, k) < 0.0) {
      r.row(k) *= -1.0;
      q.col(k) *= -1.0;
    }
  }
  v = std::move(q);
  z = z * r.transpose();
}

SmoothedTargets smooth_dataset(const OneHotDataset& data, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DataError("smooth_dataset: alpha must be in (0, 1)");
  }
  const Eigen::Index cm1 = data.c - 1;
  const double other = alpha / static_cast<double>(data.c);
  const double hit = 1.0 - alpha + other;
  const double theta_hit = std::log(hit) - std::log(other);

  SmoothedTargets targets;
  targets.theta = Eigen::MatrixXd::Zero(data.N, data.n * cm1);
  for (Eigen::Index i = 0; i < data.N; ++i) {
    for (Eigen::Index j = 0; j < data.n; ++j) {
      const std::int32_t x = data(i, j);
      if (x < data.c) {
        targets.theta(i, j * cm1 + x - 1) = theta_hit;
      } else {
        // Reference category hit: every log-ratio is log(other/hit).
        targets.theta.row(i).segment(j * cm1, cm1).setConstant(-theta_hit);
      }
    }
  }
  return targets;
}

double loss(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Z,
            const OneHotDataset& data) {
  RowMat theta_hat = Z * V.transpose();
  return eval_logits(theta_hat, data, nullptr, nullptr, false).loss;
}

double loss_and_grads(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Z,
                      const OneHotDataset& data, Eigen::MatrixXd* grad_v,
                      Eigen::MatrixXd* grad_z) {
  RowMat theta_hat = Z * V.transpose();
  RowMat grad;
  const EvalOut out = eval_logits(theta_hat, data, nullptr, &grad, false);
  if (grad_v) grad_v->noalias() = grad.transpose() * Z;
  if (grad_z) grad_z->noalias() = grad * V;
  return out.loss;
}

std::pair<LatentModel, FitReport> fit(const OneHotDataset& data,
                                      Eigen::Index d,
                                      const GpcaConfig& config) {
  data.validate();
  if (data.N < 1) throw DataError("gpca::fit: empty dataset");
  const Eigen::Index ambient = data.n * (data.c - 1);
  if (d < 1 || d > ambient) {
    throw DataError("gpca::fit: latent dimension must be in [1, " +
                    std::to_string(ambient) + "], got " + std::to_string(d));
  }

  LatentModel model;
  model.n = data.n;
  model.c = data.c;
  model.d = d;
  model.alpha = config.alpha;

  Rng rng(config.seed);
  model.V = rng.normal_matrix(ambient, d) /
            std::sqrt(static_cast<double>(ambient));
  model.Z = Eigen::MatrixXd::Zero(data.N, d);

  FitReport report = alternate(data, config, model.V, model.Z, true);

  orthonormalize_basis(model.V, model.Z);
  model.finalized = true;
  return {std::move(model), std::move(report)};
}

std::pair<Eigen::MatrixXd, FitReport> encode_with_fixed_basis(
    const LatentModel& model, const OneHotDataset& data,
    const GpcaConfig& config, const Eigen::MatrixXd* z_init) {
  data.validate();
  if (!model.finalized) {
    throw DataError("encode_with_fixed_basis: model must be finalized");
  }
  if (data.n != model.n || data.c != model.c) {
    throw DataError("encode_with_fixed_basis: dataset shape mismatch");
  }
  Eigen::MatrixXd z;
  if (z_init) {
    if (z_init->rows() != data.N || z_init->cols() != model.d) {
      throw DataError("encode_with_fixed_basis: z_init shape mismatch");
    }
    z = *z_init;
  } else {
    z = Eigen::MatrixXd::Zero(data.N, model.d);
  }
  Eigen::MatrixXd v = model.V;  // not updated
  FitReport report = alternate(data, config, v, z, false);
  return {std::move(z), std::move(report)};
}

std::vector<std::int32_t> round_labels(const Eigen::MatrixXd& theta) {
  const Eigen::Index n = theta.rows();
  const Eigen::Index cm1 = theta.cols();
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    std::int32_t label = 1;
    double best = theta(j, 0);
    for (Eigen::Index k = 1; k < cm1; ++k) {
      if (theta(j, k) > best) {
        best = theta(j, k);
        label = static_cast<std::int32_t>(k + 1);
      }
    }
    if (0.0 > best) label = static_cast<std::int32_t>(cm1 + 1);
    labels[static_cast<std::size_t>(j)] = label;
  }
  return labels;
}

Reconstruction reconstruct(const LatentModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.d) {
    throw DataError("reconstruct: coefficient vector has wrong dimension");
  }
  const Eigen::VectorXd theta_v = model.V * z;
  const Eigen::MatrixXd theta =
      geometry::unvectorize_rows(theta_v, model.n, model.c - 1);
  return Reconstruction{geometry::decode(geometry::NaturalParams(theta)),
                        round_labels(theta)};
}

std::vector<long> per_sample_errors(const LatentModel& model,
                                    const OneHotDataset& data) {
  if (data.n != model.n || data.c != model.c || data.N != model.Z.rows()) {
    throw DataError("per_sample_errors: model/data shape mismatch");
  }
  const Eigen::Index cm1 = model.c - 1;
  RowMat theta_hat = model.Z * model.V.transpose();
  std::vector<long> errors(static_cast<std::size_t>(data.N), 0);
  for (Eigen::Index i = 0; i < data.N; ++i) {
    for (Eigen::Index j = 0; j < data.n; ++j) {
      const Eigen::Index base = j * cm1;
      std::int32_t label = 1;
      double best = theta_hat(i, base);
      for (Eigen::Index k = 1; k < cm1; ++k) {
        if (theta_hat(i, base + k) > best) {
          best = theta_hat(i, base + k);
          label = static_cast<std::int32_t>(k + 1);
        }
      }
      if (0.0 > best) label = static_cast<std::int32_t>(model.c);
      if (label != data(i, j)) ++errors[static_cast<std::size_t>(i)];
    }
  }
  return errors;
}

long reconstruction_error(const LatentModel& model, const OneHotDataset& data) {
  const auto errors = per_sample_errors(model, data);
  long total = 0;
  for (long e : errors) total += e;
  return total;
}

void save_model(const LatentModel& model, const std::filesystem::path& path) {
  if (!model.finalized) {
    throw DataError("save_model: refusing to archive a non-finalized model");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_model: cannot open " + path.string());
  io::write_magic(out, "GPCA1");
  io::write_u32(out, static_cast<std::uint32_t>(model.n));
  io::write_u32(out, static_cast<std::uint32_t>(model.c));
  io::write_u32(out, static_cast<std::uint32_t>(model.d));
  io::write_u32(out, static_cast<std::uint32_t>(model.Z.rows()));
  io::write_f64(out, model.alpha);
  for (Eigen::Index i = 0; i < model.V.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.V.cols(); ++j) {
      io::write_f64(out, model.V(i, j));
    }
  }
  for (Eigen::Index i = 0; i < model.Z.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.Z.cols(); ++j) {
      io::write_f64(out, model.Z(i, j));
    }
  }
  if (!out) throw DataError("save_model: write failed");
}

LatentModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_model: cannot open " + path.string());
  io::expect_magic(in, "GPCA1", "load_model");
  LatentModel model;
  model.n = io::read_u32(in, "load_model");
  model.c = io::read_u32(in, "load_model");
  model.d = io::read_u32(in, "load_model");
  const auto big_n = static_cast<Eigen::Index>(io::read_u32(in, "load_model"));
  model.alpha = io::read_f64(in, "load_model");
  if (model.n < 1 || model.c < 2 || model.d < 1 ||
      model.d > model.ambient_dim()) {
    throw DataError("load_model: invalid header dimensions");
  }
  model.V.resize(model.ambient_dim(), model.d);
  for (Eigen::Index i = 0; i < model.V.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.V.cols(); ++j) {
      model.V(i, j) = io::read_f64(in, "load_model");
    }
  }
  model.Z.resize(big_n, model.d);
  for (Eigen::Index i = 0; i < big_n; ++i) {
    for (Eigen::Index j = 0; j < model.d; ++j) {
      model.Z(i, j) = io::read_f64(in, "load_model");
    }
  }
  const Eigen::MatrixXd gram = model.V.transpose() * model.V;
  model.finalized =
      (gram - Eigen::MatrixXd::Identity(model.d, model.d)).cwiseAbs().maxCoeff() <
      1e-8;
  return model;
}

void write_report_csv(const FitReport& report,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_report_csv: cannot open " + path.string());
  out << "step,loss,hamming\n";
  out.precision(17);
  for (const auto& row : report.trace) {
    out << row.step << ',' << row.loss << ',' << row.hamming << '\n';
  }
  if (!out) throw DataError("write_report_csv: write failed");
}

}  // namespace gpcaflow::gpca
