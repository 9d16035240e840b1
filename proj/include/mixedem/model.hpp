#ifndef MIXEDEM_MODEL_HPP
#define MIXEDEM_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "mixedem/errors.hpp"

namespace mixedem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Variance components below this floor are treated as numerically singular:
/// assembly of the mixed-model equations rejects them, and the EM iteration
/// stops with a boundary flag instead of feeding them back in.
inline constexpr double kVarianceFloor = 1e-12;

/// Estimation criterion. The two differ only in which covariance matrices
/// supply the trace adjustments of the variance-component updates.
enum class Criterion { ML, REML };

const char* to_string(Criterion c);

/// Parses "ml"/"reml" (case-insensitive). Throws InvalidArgument otherwise.
Criterion criterion_from_string(std::string_view s);

/// The pair (tau^2, sigma^2) parameterizing G = tau^2 I_q and R = sigma^2 I_n.
/// Both must be strictly positive.
class VarianceComponents {
 public:
  VarianceComponents(double tau2, double sigma2);

  double tau2() const { return tau2_; }
  double sigma2() const { return sigma2_; }

 private:
  double tau2_;
  double sigma2_;
};

/// Validated data for the model y = X beta + Z eta + eps.
///
/// Guarantees established at construction: row counts of y, X, Z agree,
/// all entries are finite, and X has full column rank (rank-revealing QR
/// with tolerance max(n,p) * machine_eps * largest column norm).
/// q = 0 (Z with no columns) is admitted; it is only meaningful for the
/// no-random-effects reduction handled by ols_fixed_point.
class ModelData {
 public:
  /// Validates and takes ownership of the inputs. Throws DimensionMismatch,
  /// RankDeficientX, or NonFiniteInput.
  ModelData(Vector y, Matrix X, Matrix Z);

  const Vector& y() const { return y_; }
  const Matrix& X() const { return X_; }
  const Matrix& Z() const { return Z_; }
  Index n() const { return y_.size(); }
  Index p() const { return X_.cols(); }
  Index q() const { return Z_.cols(); }

 private:
  Vector y_;
  Matrix X_;
  Matrix Z_;
};

/// Checks raw inputs and returns validated model data.
ModelData validate_model(const Vector& y, const Matrix& X, const Matrix& Z);

/// Builds the one-way random-intercept indicator matrix from group labels.
/// Column order follows first appearance of each distinct label, so the
/// result is reproducible across runs. Throws EmptyInput on no labels.
Matrix z_from_groups(const std::vector<std::string>& labels);

}  // namespace mixedem

#endif  // MIXEDEM_MODEL_HPP
