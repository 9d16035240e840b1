#include "mixedem/model.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <unordered_map>

namespace mixedem {

const char* to_string(Criterion c) {
  return c == Criterion::ML ? "ML" : "REML";
}

Criterion criterion_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "ml") return Criterion::ML;
  if (lower == "reml") return Criterion::REML;
  throw InvalidArgument("criterion must be 'ml' or 'reml', got '" +
                        std::string(s) + "'");
}

VarianceComponents::VarianceComponents(double tau2, double sigma2)
    : tau2_(tau2), sigma2_(sigma2) {
  if (!(tau2 > 0.0) || !(sigma2 > 0.0)) {
    throw InvalidArgument("variance components must be strictly positive, got tau2=" +
                          std::to_string(tau2) + ", sigma2=" + std::to_string(sigma2));
  }
}

namespace {

// Column rank of X from a rank-revealing QR, counted against the tolerance
// max(n,p) * eps * (largest column norm). An exact qr(X)$rank-style check
// would be fragile in floating point.
Index column_rank(const Matrix& X) {
  if (X.cols() == 0) return 0;
  const double max_col_norm = X.colwise().norm().maxCoeff();
  const double tol = static_cast<double>(std::max(X.rows(), X.cols())) *
                     std::numeric_limits<double>::epsilon() * max_col_norm;
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  const Index k = std::min(X.rows(), X.cols());
  const auto diag = qr.matrixQR().diagonal().head(k);
  Index rank = 0;
  for (Index i = 0; i < k; ++i) {
    if (std::abs(diag[i]) > tol) ++rank;
  }
  return rank;
}

}  // namespace

ModelData::ModelData(Vector y, Matrix X, Matrix Z)
    : y_(std::move(y)), X_(std::move(X)), Z_(std::move(Z)) {
  const Index n = y_.size();
  if (n == 0) throw DimensionMismatch("empty response vector");
  if (X_.rows() != n || Z_.rows() != n) {
    throw DimensionMismatch("rows(X)=" + std::to_string(X_.rows()) +
                            ", rows(Z)=" + std::to_string(Z_.rows()) +
                            " must both equal length(y)=" + std::to_string(n));
  }
  if (X_.cols() < 1) throw DimensionMismatch("X must have at least one column");
  if (!y_.allFinite() || !X_.allFinite() || !Z_.allFinite()) {
    throw NonFiniteInput("y, X, Z must contain only finite values");
  }
  if (column_rank(X_) < X_.cols()) {
    throw RankDeficientX("X must have full column rank " +
                         std::to_string(X_.cols()));
  }
}

ModelData validate_model(const Vector& y, const Matrix& X, const Matrix& Z) {
  return ModelData(y, X, Z);
}

Matrix z_from_groups(const std::vector<std::string>& labels) {
  if (labels.empty()) throw EmptyInput("no group labels");
  std::unordered_map<std::string, Index> index;
  std::vector<Index> assignment;
  assignment.reserve(labels.size());
  for (const auto& label : labels) {
    auto [it, inserted] = index.try_emplace(label, static_cast<Index>(index.size()));
    assignment.push_back(it->second);
    (void)inserted;
  }
  Matrix Z = Matrix::Zero(static_cast<Index>(labels.size()),
                          static_cast<Index>(index.size()));
  for (Index i = 0; i < Z.rows(); ++i) Z(i, assignment[i]) = 1.0;
  return Z;
}

}  // namespace mixedem
