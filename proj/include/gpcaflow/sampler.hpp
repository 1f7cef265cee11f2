#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "gpcaflow/datasets.hpp"
#include "gpcaflow/flowmatch.hpp"

namespace gpcaflow::sampler {

enum class Method { Euler, Rk4 };

Method method_from_string(std::string_view name);
std::string to_string(Method method);

/// Right-hand side of a batched ODE: rows are states, t is shared.
using Field =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)>;

/// Fixed-step integration of dz/dt = field(z, t) on [0, 1], one
/// trajectory per row of z0. Returns the endpoints; `trajectory`, when
/// given, receives all steps+1 states. Throws NumericError naming the
/// step at which a state became non-finite.
Eigen::MatrixXd integrate_ode(const Field& field, Eigen::MatrixXd z0,
                              long steps, Method method,
                              std::vector<Eigen::MatrixXd>* trajectory = nullptr);

/// Integration of the learned latent vector field.
Eigen::MatrixXd integrate_batch(const flowmatch::FlowModel& model,
                                Eigen::MatrixXd z0, long steps, Method method,
                                std::vector<Eigen::MatrixXd>* trajectory = nullptr);

/// Single-trajectory convenience wrapper: the steps+1 states visited.
std::vector<Eigen::VectorXd> integrate(const flowmatch::FlowModel& model,
                                       const Eigen::VectorXd& z0, long steps,
                                       Method method);

struct GenerateResult {
  OneHotDataset data;
  Eigen::MatrixXd z_final;  // count x d latent endpoints
};

/// Draws `count` latent starting points from the standard normal
/// reference measure, integrates them to t = 1, decodes through the
/// basis and rounds to discrete samples. Deterministic given the seed.
GenerateResult generate(const flowmatch::FlowModel& model, Eigen::Index count,
                        long steps, std::uint64_t seed,
                        Method method = Method::Rk4);

}  // namespace gpcaflow::sampler
