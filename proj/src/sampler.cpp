#include "gpcaflow/sampler.hpp"

#include <algorithm>

#include "gpcaflow/gpca.hpp"
#include "gpcaflow/rng.hpp"

namespace gpcaflow::sampler {

Method method_from_string(std::string_view name) {
  if (name == "euler") return Method::Euler;
  if (name == "rk4") return Method::Rk4;
  throw DataError("unknown integration method: \"" + std::string(name) +
                  "\" (expected euler | rk4)");
}

std::string to_string(Method method) {
  return method == Method::Euler ? "euler" : "rk4";
}

Eigen::MatrixXd integrate_ode(const Field& field, Eigen::MatrixXd z0,
                              long steps, Method method,
                              std::vector<Eigen::MatrixXd>* trajectory) {
  if (steps < 1) throw DataError("integrate: steps must be >= 1");
  const double h = 1.0 / static_cast<double>(steps);
  if (trajectory) {
    trajectory->clear();
    trajectory->push_back(z0);
  }
  Eigen::MatrixXd z = std::move(z0);
  for (long s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    if (method == Method::Euler) {
      z += h * field(z, t);
    } else {
      const Eigen::MatrixXd k1 = field(z, t);
      const Eigen::MatrixXd k2 = field(z + 0.5 * h * k1, t + 0.5 * h);
      const Eigen::MatrixXd k3 = field(z + 0.5 * h * k2, t + 0.5 * h);
      const Eigen::MatrixXd k4 = field(z + h * k3, t + h);
      z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!z.allFinite()) {
      throw NumericError("integrate: state became non-finite at step " +
                         std::to_string(s + 1));
    }
    if (trajectory) trajectory->push_back(z);
  }
  return z;
}

Eigen::MatrixXd integrate_batch(const flowmatch::FlowModel& model,
                                Eigen::MatrixXd z0, long steps, Method method,
                                std::vector<Eigen::MatrixXd>* trajectory) {
  if (z0.cols() != model.latent.d) {
    throw DataError("integrate: state dimension mismatch");
  }
  const auto field = [&model](const Eigen::MatrixXd& z, double t) {
    return model.net.forward(z, Eigen::VectorXd::Constant(z.rows(), t));
  };
  return integrate_ode(field, std::move(z0), steps, method, trajectory);
}

std::vector<Eigen::VectorXd> integrate(const flowmatch::FlowModel& model,
                                       const Eigen::VectorXd& z0, long steps,
                                       Method method) {
  std::vector<Eigen::MatrixXd> batched;
  integrate_batch(model, z0.transpose(), steps, method, &batched);
  std::vector<Eigen::VectorXd> states;
  states.reserve(batched.size());
  for (const auto& m : batched) states.push_back(m.row(0).transpose());
  return states;
}

GenerateResult generate(const flowmatch::FlowModel& model, Eigen::Index count,
                        long steps, std::uint64_t seed, Method method) {
  const auto& latent = model.latent;
  GenerateResult result;
  result.data = OneHotDataset::empty(latent.n, latent.c);
  result.z_final.resize(count, latent.d);
  if (count == 0) return result;

  Rng rng(seed);
  const Eigen::MatrixXd z0 = rng.normal_matrix(count, latent.d);
  // Trajectories are independent; chunking keeps the per-layer
  // workspaces cache-sized for large requests.
  const Eigen::Index chunk = 2048;
  for (Eigen::Index start = 0; start < count; start += chunk) {
    const Eigen::Index rows = std::min(chunk, count - start);
    result.z_final.middleRows(start, rows) =
        integrate_batch(model, z0.middleRows(start, rows), steps, method);
  }

  result.data.N = count;
  result.data.indices.resize(static_cast<std::size_t>(count * latent.n));
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::MatrixXd theta = geometry::unvectorize_rows(
        latent.V * result.z_final.row(i).transpose(), latent.n, latent.c - 1);
    const auto labels = gpca::round_labels(theta);
    for (Eigen::Index j = 0; j < latent.n; ++j) {
      result.data(i, j) = labels[static_cast<std::size_t>(j)];
    }
  }
  return result;
}

}  // namespace gpcaflow::sampler
