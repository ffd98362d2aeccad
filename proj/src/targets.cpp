#include "langevin/targets.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "langevin/errors.hpp"
#include "langevin/rng.hpp"

namespace langevin {

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::gaussian: return "gaussian";
    case TargetKind::ridge_logistic: return "ridge-logistic";
    case TargetKind::custom: return "custom";
  }
  return "unknown";
}

namespace {

class QuadraticPotential final : public detail::Potential {
 public:
  explicit QuadraticPotential(Matrix Q) : Q_(std::move(Q)) {}
  double value(const Eigen::Ref<const Vector>& x) const override { return 0.5 * x.dot(Q_ * x); }
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override {
    out.noalias() = Q_ * x;
  }

 private:
  Matrix Q_;
};

// log(1 + exp(-t)) without overflow.
double softplus_neg(double t) { return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t)); }

// 1 / (1 + exp(t)).
double sigmoid_neg(double t) {
  if (t >= 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

class LogisticPotential final : public detail::Potential {
 public:
  LogisticPotential(Matrix A, Vector y, double ridge) : A_(std::move(A)), y_(std::move(y)), ridge_(ridge) {}

  double value(const Eigen::Ref<const Vector>& x) const override {
    double f = 0.5 * ridge_ * x.squaredNorm();
    for (Eigen::Index i = 0; i < A_.rows(); ++i) f += softplus_neg(y_[i] * A_.row(i).dot(x));
    return f;
  }

  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override {
    out = ridge_ * x;
    for (Eigen::Index i = 0; i < A_.rows(); ++i) {
      const double t = y_[i] * A_.row(i).dot(x);
      out.noalias() -= (y_[i] * sigmoid_neg(t)) * A_.row(i).transpose();
    }
  }

 private:
  Matrix A_;
  Vector y_;
  double ridge_;
};

class FunctionPotential final : public detail::Potential {
 public:
  FunctionPotential(Target::ValueFn value, Target::GradientFn gradient)
      : value_(std::move(value)), gradient_(std::move(gradient)) {}
  double value(const Eigen::Ref<const Vector>& x) const override { return value_(Vector(x)); }
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override {
    out = gradient_(Vector(x));
  }

 private:
  Target::ValueFn value_;
  Target::GradientFn gradient_;
};

void check_constants(double m, double L) {
  if (!(m > 0.0) || !(L >= m) || !std::isfinite(L))
    throw InvalidTarget("target constants must satisfy 0 < m <= L < inf");
}

}  // namespace

Target::Target(TargetKind kind, int dim, double m, double L, std::optional<double> L1,
               std::shared_ptr<const detail::Potential> potential)
    : kind_(kind), dim_(dim), m_(m), L_(L), L1_(L1), potential_(std::move(potential)) {}

Target Target::custom(int dim, double m, double L, std::optional<double> L1, ValueFn value,
                      GradientFn gradient) {
  if (dim <= 0) throw InvalidTarget("dimension must be positive");
  check_constants(m, L);
  if (L1 && !(*L1 >= 0.0)) throw InvalidTarget("L1 must be nonnegative");
  if (!value || !gradient) throw InvalidTarget("custom target needs value and gradient oracles");
  return Target(TargetKind::custom, dim, m, L, L1,
                std::make_shared<FunctionPotential>(std::move(value), std::move(gradient)));
}

double Target::value(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim_) throw DimensionMismatch("point dimension does not match target");
  return potential_->value(x);
}

Vector Target::gradient(const Eigen::Ref<const Vector>& x) const {
  Vector out(dim_);
  gradient(x, out);
  return out;
}

void Target::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  if (x.size() != dim_ || out.size() != dim_)
    throw DimensionMismatch("point dimension does not match target");
  potential_->gradient(x, out);
}

Target make_gaussian_target(const Vector& spectrum, const std::optional<Matrix>& rotation) {
  const auto d = spectrum.size();
  if (d == 0) throw InvalidTarget("spectrum must be nonempty");
  for (Eigen::Index i = 0; i < d; ++i)
    if (!(spectrum[i] > 0.0) || !std::isfinite(spectrum[i]))
      throw InvalidTarget("spectrum entries must be positive and finite");

  Matrix Q = spectrum.asDiagonal();
  if (rotation) {
    const Matrix& U = *rotation;
    if (U.rows() != d || U.cols() != d) throw InvalidTarget("rotation must be d x d");
    if ((U.transpose() * U - Matrix::Identity(d, d)).norm() > 1e-10)
      throw InvalidTarget("rotation must be orthogonal");
    Q = U * spectrum.asDiagonal() * U.transpose();
    Q = 0.5 * (Q + Q.transpose()).eval();
  }
  Target t(TargetKind::gaussian, static_cast<int>(d), spectrum.minCoeff(), spectrum.maxCoeff(), 0.0,
           std::make_shared<QuadraticPotential>(Q));
  t.precision_ = std::make_shared<const Matrix>(std::move(Q));
  return t;
}

Target make_quadratic_target(const Matrix& Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw InvalidTarget("precision must be square");
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm()))
    throw InvalidTarget("precision must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
  Target t = make_gaussian_target(eig.eigenvalues(), eig.eigenvectors());
  // Keep the caller's matrix bit-for-bit rather than the reassembled one.
  t.precision_ = std::make_shared<const Matrix>(Q);
  t.potential_ = std::make_shared<QuadraticPotential>(Q);
  return t;
}

Target make_ridge_logistic_target(const Matrix& features, const Vector& labels, double ridge) {
  if (!(ridge > 0.0) || !std::isfinite(ridge)) throw InvalidTarget("ridge must be positive");
  if (features.rows() != labels.size()) throw InvalidTarget("one label per feature row");
  if (features.cols() == 0) throw InvalidTarget("feature dimension must be positive");
  if (!features.allFinite()) throw InvalidTarget("features must be finite");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels[i] != 1.0 && labels[i] != -1.0) throw InvalidTarget("labels must be +1 or -1");

  double lambda_max = 0.0;
  double cubic_sum = 0.0;
  if (features.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(features.transpose() * features, Eigen::EigenvaluesOnly);
    lambda_max = eig.eigenvalues().maxCoeff();
    for (Eigen::Index i = 0; i < features.rows(); ++i) cubic_sum += std::pow(features.row(i).norm(), 3);
  }
  const double L = ridge + 0.25 * lambda_max;
  const double L1 = cubic_sum / (6.0 * std::sqrt(3.0));
  return Target(TargetKind::ridge_logistic, static_cast<int>(features.cols()), ridge, L, L1,
                std::make_shared<LogisticPotential>(features, labels, ridge));
}

Target load_ridge_logistic_csv(const std::string& path, double ridge) {
  std::ifstream in(path);
  if (!in) throw InvalidTarget("cannot open data file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        if (rows.empty() && row.empty()) break;  // header line
        throw InvalidTarget("non-numeric cell in " + path);
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) throw InvalidTarget("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2) throw InvalidTarget("no data rows in " + path);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size()) - 1;
  Matrix A(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = rows[i][j];
    y[i] = rows[i][d];
  }
  return make_ridge_logistic_target(A, y, ridge);
}

LogisticData synthetic_logistic_data(int n, int d, std::uint64_t seed) {
  if (n < 0 || d < 1) throw InvalidParameter("need n >= 0 rows and d >= 1 columns");
  GaussianStream rng(seed, 0x6c6f67ull);
  Vector theta(d);
  for (int j = 0; j < d; ++j) theta[j] = rng();
  LogisticData data{Matrix(n, d), Vector(n)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.features(i, j) = scale * rng();
    const double p = 1.0 / (1.0 + std::exp(-data.features.row(i).dot(theta)));
    data.labels[i] = rng.uniform() < p ? 1.0 : -1.0;
  }
  return data;
}

Matrix random_rotation(int d, std::uint64_t seed) {
  GaussianStream rng(seed, 0x726f74ull);
  Matrix G(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) G(i, j) = rng();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  // Sign fix makes the distribution Haar.
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

ProbeReport probe_constants(const Target& target, int samples, double radius, std::uint64_t seed,
                            double tolerance) {
  if (samples < 2) throw InvalidParameter("probe needs at least 2 samples");
  const int d = target.dim();
  GaussianStream rng(seed, 0x70726f6265ull);
  ProbeReport report;
  report.m_hat = std::numeric_limits<double>::infinity();
  report.L_hat = -std::numeric_limits<double>::infinity();
  double worst_score = -std::numeric_limits<double>::infinity();
  Vector x(d), y(d), gx(d), gy(d);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < d; ++i) x[i] = radius * rng();
    for (int i = 0; i < d; ++i) y[i] = radius * rng();
    const Vector diff = x - y;
    const double nrm2 = diff.squaredNorm();
    if (nrm2 == 0.0) continue;
    target.gradient(x, gx);
    target.gradient(y, gy);
    const double q = (gx - gy).dot(diff) / nrm2;
    report.m_hat = std::min(report.m_hat, q);
    report.L_hat = std::max(report.L_hat, q);
    ++report.pairs;
    const double score = std::max(target.m() - q, q - target.L());
    if (score > worst_score) {
      worst_score = score;
      report.worst_x = x;
      report.worst_y = y;
      report.worst_quotient = q;
    }
  }
  report.violation = report.m_hat < target.m() - tolerance || report.L_hat > target.L() + tolerance;
  return report;
}

}  // namespace langevin
