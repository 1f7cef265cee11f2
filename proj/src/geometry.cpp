#include "gpcaflow/geometry.hpp"

#include <cmath>
#include <string>

namespace gpcaflow::geometry {

namespace {

void require_interior(const Eigen::MatrixXd& probs, const char* who) {
  for (Eigen::Index j = 0; j < probs.rows(); ++j) {
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double p = probs(j, k);
      if (!(p > kInteriorTol) || !std::isfinite(p)) {
        throw DataError(std::string(who) + ": factor " + std::to_string(j) +
                        " is not in the open simplex (p[" + std::to_string(k) +
                        "] = " + std::to_string(p) + ")");
      }
    }
  }
}

Eigen::MatrixXd normalized_rows(Eigen::MatrixXd probs, const char* who) {
  if (probs.rows() < 1 || probs.cols() < 2) {
    throw DataError(std::string(who) +
                    ": need at least one factor and two categories");
  }
  for (Eigen::Index j = 0; j < probs.rows(); ++j) {
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double p = probs(j, k);
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw DataError(std::string(who) + ": factor " + std::to_string(j) +
                        " has a non-positive or non-finite probability");
      }
    }
    probs.row(j) /= probs.row(j).sum();
  }
  return probs;
}

}  // namespace

CategoricalPoint::CategoricalPoint(Eigen::VectorXd probs)
    : probs_(std::move(probs)) {
  Eigen::MatrixXd row = probs_.transpose();
  probs_ = normalized_rows(std::move(row), "CategoricalPoint").row(0);
}

ProductSimplexPoint::ProductSimplexPoint(Eigen::MatrixXd probs)
    : probs_(normalized_rows(std::move(probs), "ProductSimplexPoint")) {}

ProductSimplexPoint ProductSimplexPoint::uniform(Eigen::Index n,
                                                 Eigen::Index c) {
  return ProductSimplexPoint(
      Unchecked{},
      Eigen::MatrixXd::Constant(n, c, 1.0 / static_cast<double>(c)));
}

CategoricalPoint ProductSimplexPoint::factor(Eigen::Index j) const {
  return CategoricalPoint(probs_.row(j).transpose());
}

NaturalParams::NaturalParams(Eigen::MatrixXd theta) : theta_(std::move(theta)) {
  if (!theta_.allFinite()) {
    throw DataError("NaturalParams: entries must be finite");
  }
}

TangentVector::TangentVector(Eigen::MatrixXd q) : q_(std::move(q)) {
  for (Eigen::Index j = 0; j < q_.rows(); ++j) {
    if (std::abs(q_.row(j).sum()) > 1e-12 * std::max(1.0, q_.row(j).cwiseAbs().maxCoeff())) {
      throw DataError("TangentVector: row " + std::to_string(j) +
                      " does not sum to zero");
    }
  }
}

NaturalParams encode(const ProductSimplexPoint& s) {
  require_interior(s.probs(), "encode");
  const Eigen::Index n = s.factors();
  const Eigen::Index c = s.categories();
  Eigen::MatrixXd theta(n, c - 1);
  const Eigen::MatrixXd& p = s.probs();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double log_ref = std::log(p(j, c - 1));
    for (Eigen::Index k = 0; k < c - 1; ++k) {
      theta(j, k) = std::log(p(j, k)) - log_ref;
    }
  }
  return NaturalParams(std::move(theta));
}

ProductSimplexPoint decode(const NaturalParams& theta) {
  const Eigen::Index n = theta.factors();
  const Eigen::Index c = theta.categories();
  Eigen::MatrixXd probs(n, c);
  const Eigen::MatrixXd& t = theta.theta();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double m = std::max(0.0, t.row(j).maxCoeff());
    double denom = std::exp(-m);  // reference category's shifted logit
    for (Eigen::Index k = 0; k < c - 1; ++k) {
      probs(j, k) = std::exp(t(j, k) - m);
      denom += probs(j, k);
    }
    probs(j, c - 1) = std::exp(-m);
    probs.row(j) /= denom;
  }
  return ProductSimplexPoint(ProductSimplexPoint::Unchecked{},
                             std::move(probs));
}

double e_distance(const ProductSimplexPoint& s0,
                  const ProductSimplexPoint& s1) {
  return (encode(s0).theta() - encode(s1).theta()).norm();
}

Eigen::MatrixXd push_tangent_to_theta(const ProductSimplexPoint& s,
                                      const TangentVector& q) {
  require_interior(s.probs(), "push_tangent_to_theta");
  if (s.factors() != q.factors() || s.categories() != q.categories()) {
    throw DataError("push_tangent_to_theta: shape mismatch");
  }
  const Eigen::Index n = s.factors();
  const Eigen::Index c = s.categories();
  const Eigen::MatrixXd& p = s.probs();
  const Eigen::MatrixXd& v = q.coords();
  Eigen::MatrixXd dtheta(n, c - 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double ref = v(j, c - 1) / p(j, c - 1);
    for (Eigen::Index k = 0; k < c - 1; ++k) {
      dtheta(j, k) = v(j, k) / p(j, k) - ref;
    }
  }
  return dtheta;
}

TangentVector push_theta_to_tangent(const NaturalParams& theta,
                                    const Eigen::MatrixXd& dtheta) {
  if (theta.theta().rows() != dtheta.rows() ||
      theta.theta().cols() != dtheta.cols()) {
    throw DataError("push_theta_to_tangent: shape mismatch");
  }
  const ProductSimplexPoint s = decode(theta);
  const Eigen::Index n = s.factors();
  const Eigen::Index c = s.categories();
  const Eigen::MatrixXd& p = s.probs();
  Eigen::MatrixXd q(n, c);
  for (Eigen::Index j = 0; j < n; ++j) {
    double mean = 0.0;  // <s_j, dtheta_j> with the zero-augmented slot
    for (Eigen::Index k = 0; k < c - 1; ++k) mean += p(j, k) * dtheta(j, k);
    for (Eigen::Index k = 0; k < c - 1; ++k) {
      q(j, k) = p(j, k) * (dtheta(j, k) - mean);
    }
    q(j, c - 1) = p(j, c - 1) * (0.0 - mean);
  }
  return TangentVector(std::move(q));
}

double e_norm(const ProductSimplexPoint& s, const TangentVector& q) {
  return push_tangent_to_theta(s, q).norm();
}

ProductSimplexPoint e_geodesic(const ProductSimplexPoint& s0,
                               const ProductSimplexPoint& s1, double t) {
  const Eigen::MatrixXd theta0 = encode(s0).theta();
  const Eigen::MatrixXd theta1 = encode(s1).theta();
  return decode(NaturalParams((1.0 - t) * theta0 + t * theta1));
}

TangentVector geodesic_velocity(const ProductSimplexPoint& s0,
                                const ProductSimplexPoint& s1, double t) {
  const Eigen::MatrixXd theta0 = encode(s0).theta();
  const Eigen::MatrixXd theta1 = encode(s1).theta();
  const NaturalParams theta_t((1.0 - t) * theta0 + t * theta1);
  return push_theta_to_tangent(theta_t, theta1 - theta0);
}

Eigen::VectorXd vectorize_rows(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    v.segment(j * m.cols(), m.cols()) = m.row(j).transpose();
  }
  return v;
}

Eigen::MatrixXd unvectorize_rows(const Eigen::VectorXd& v, Eigen::Index rows,
                                 Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw DataError("unvectorize_rows: size mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < rows; ++j) {
    m.row(j) = v.segment(j * cols, cols).transpose();
  }
  return m;
}

}  // namespace gpcaflow::geometry
