#pragma once

#include <Eigen/Core>

#include "gpcaflow/common.hpp"

namespace gpcaflow::geometry {

/// Probabilities this small are treated as boundary points and rejected
/// by the encoder instead of being clamped.
inline constexpr double kInteriorTol = 1e-300;

/// A categorical distribution with full support: c strictly positive
/// probabilities summing to one. The constructor normalizes.
class CategoricalPoint {
 public:
  explicit CategoricalPoint(Eigen::VectorXd probs);

  Eigen::Index categories() const { return probs_.size(); }
  const Eigen::VectorXd& probs() const { return probs_; }

 private:
  Eigen::VectorXd probs_;
};

/// A point of the open product simplex: n independent categorical
/// factors over c categories, stored as an n x c matrix whose rows are
/// the factors. Rows are normalized on construction and must be
/// strictly positive.
class ProductSimplexPoint {
 public:
  explicit ProductSimplexPoint(Eigen::MatrixXd probs);

  static ProductSimplexPoint uniform(Eigen::Index n, Eigen::Index c);

  Eigen::Index factors() const { return probs_.rows(); }
  Eigen::Index categories() const { return probs_.cols(); }
  const Eigen::MatrixXd& probs() const { return probs_; }
  CategoricalPoint factor(Eigen::Index j) const;

 private:
  struct Unchecked {};
  ProductSimplexPoint(Unchecked, Eigen::MatrixXd probs)
      : probs_(std::move(probs)) {}

  friend ProductSimplexPoint decode(const class NaturalParams& theta);

  Eigen::MatrixXd probs_;
};

/// Natural (log-ratio) coordinates of a ProductSimplexPoint: an
/// n x (c-1) matrix. The last category is the fixed reference slot.
class NaturalParams {
 public:
  explicit NaturalParams(Eigen::MatrixXd theta);

  Eigen::Index factors() const { return theta_.rows(); }
  Eigen::Index categories() const { return theta_.cols() + 1; }
  const Eigen::MatrixXd& theta() const { return theta_; }

 private:
  Eigen::MatrixXd theta_;
};

/// Ambient tangent coordinates at a simplex point: an n x c matrix
/// whose rows each sum to zero.
class TangentVector {
 public:
  explicit TangentVector(Eigen::MatrixXd q);

  Eigen::Index factors() const { return q_.rows(); }
  Eigen::Index categories() const { return q_.cols(); }
  const Eigen::MatrixXd& coords() const { return q_; }

 private:
  Eigen::MatrixXd q_;
};

/// Log-ratio chart: theta[j][k] = log(s[j][k] / s[j][c-1]). Throws
/// DataError when any probability is at the boundary (<= kInteriorTol).
NaturalParams encode(const ProductSimplexPoint& s);

/// Inverse chart (softmax against the implicit zero logit of the
/// reference category). Stable for |theta| up to ~700: the row maximum
/// of the augmented logits (theta, 0) is subtracted before
/// exponentiating, so the result is always finite and strictly
/// positive.
ProductSimplexPoint decode(const NaturalParams& theta);

/// Geodesic distance of the e-structure: the Frobenius distance of the
/// two natural-parameter images.
double e_distance(const ProductSimplexPoint& s0, const ProductSimplexPoint& s1);

/// Differential of the encoder at s applied to an ambient tangent
/// vector: per factor (dtheta)_k = q_k / s_k - q_c / s_c, k < c.
Eigen::MatrixXd push_tangent_to_theta(const ProductSimplexPoint& s,
                                      const TangentVector& q);

/// Differential of the decoder at theta: the inverse linear map of
/// push_tangent_to_theta. With s = decode(theta) and dtheta augmented
/// by zero in the reference slot, q_k = s_k (dtheta_k - <s, dtheta>).
TangentVector push_theta_to_tangent(const NaturalParams& theta,
                                    const Eigen::MatrixXd& dtheta);

/// Norm induced by the chart: ||q||_{e,s} = ||push_tangent_to_theta(s, q)||_F.
double e_norm(const ProductSimplexPoint& s, const TangentVector& q);

/// Point at parameter t on the e-geodesic from s0 to s1: the decode of
/// the linear interpolation of the natural parameters. t outside [0,1]
/// extrapolates; the natural coordinates are global, so this is exact.
ProductSimplexPoint e_geodesic(const ProductSimplexPoint& s0,
                               const ProductSimplexPoint& s1, double t);

/// Time derivative of the geodesic at t, as an ambient tangent vector.
/// Satisfies push_tangent_to_theta(geodesic(t), velocity) = theta1 - theta0.
TangentVector geodesic_velocity(const ProductSimplexPoint& s0,
                                const ProductSimplexPoint& s1, double t);

/// Row-stacked vectorization of an n x m matrix and its inverse.
Eigen::VectorXd vectorize_rows(const Eigen::MatrixXd& m);
Eigen::MatrixXd unvectorize_rows(const Eigen::VectorXd& v, Eigen::Index rows,
                                 Eigen::Index cols);

}  // namespace gpcaflow::geometry
