#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace langevin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class TargetKind { gaussian, ridge_logistic, custom };

std::string to_string(TargetKind kind);

namespace detail {
struct Potential {
  virtual ~Potential() = default;
  virtual double value(const Eigen::Ref<const Vector>& x) const = 0;
  virtual void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const = 0;
};
}  // namespace detail

// A strongly log-concave target exp(-f) with gradient oracle and the
// constants m <= L (and optionally L1) consumed by the analysis. Immutable,
// so one instance can be evaluated from many threads.
class Target {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  static Target custom(int dim, double m, double L, std::optional<double> L1, ValueFn value,
                       GradientFn gradient);

  int dim() const { return dim_; }
  double m() const { return m_; }
  double L() const { return L_; }
  double kappa() const { return L_ / m_; }
  std::optional<double> L1() const { return L1_; }
  TargetKind kind() const { return kind_; }

  double value(const Eigen::Ref<const Vector>& x) const;
  Vector gradient(const Eigen::Ref<const Vector>& x) const;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const;

  // Precision matrix Q for gaussian targets, nullptr otherwise.
  const Matrix* precision() const { return precision_ ? precision_.get() : nullptr; }

 private:
  friend Target make_gaussian_target(const Vector&, const std::optional<Matrix>&);
  friend Target make_ridge_logistic_target(const Matrix&, const Vector&, double);
  friend Target make_quadratic_target(const Matrix&);

  Target(TargetKind kind, int dim, double m, double L, std::optional<double> L1,
         std::shared_ptr<const detail::Potential> potential);

  TargetKind kind_;
  int dim_;
  double m_, L_;
  std::optional<double> L1_;
  std::shared_ptr<const detail::Potential> potential_;
  std::shared_ptr<const Matrix> precision_;
};

// f(x) = x'Qx/2 with Q = U diag(spectrum) U'. L1 = 0.
Target make_gaussian_target(const Vector& spectrum, const std::optional<Matrix>& rotation = {});

// Gaussian target with the given symmetric positive definite precision.
Target make_quadratic_target(const Matrix& Q);

// f(x) = sum_i log(1 + exp(-y_i a_i'x)) + ridge |x|^2 / 2.
// L = ridge + lambda_max(A'A)/4. L1 = sum_i |a_i|^3 / (6 sqrt 3), using
// max |s'''| = 1/(6 sqrt 3) for the logistic loss s(t) = log(1 + e^-t).
Target make_ridge_logistic_target(const Matrix& features, const Vector& labels, double ridge);

struct LogisticData {
  Matrix features;
  Vector labels;
};

// n rows with N(0, I/d) features; labels drawn from the logistic model with
// a random N(0, I) coefficient vector.
LogisticData synthetic_logistic_data(int n, int d, std::uint64_t seed);

// Rows are samples, last column is the +-1 label.
Target load_ridge_logistic_csv(const std::string& path, double ridge);

// Haar-distributed orthogonal matrix.
Matrix random_rotation(int d, std::uint64_t seed);

struct ProbeReport {
  double m_hat = 0.0;
  double L_hat = 0.0;
  int pairs = 0;
  bool violation = false;
  // Pair whose Rayleigh quotient lies furthest outside (or closest to the
  // edge of) [m, L].
  Vector worst_x, worst_y;
  double worst_quotient = 0.0;
};

ProbeReport probe_constants(const Target& target, int samples, double radius, std::uint64_t seed,
                            double tolerance = 1e-8);

}  // namespace langevin
