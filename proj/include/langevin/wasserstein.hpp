#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "langevin/contractivity.hpp"
#include "langevin/integrators.hpp"
#include "langevin/state_space.hpp"
#include "langevin/targets.hpp"

namespace langevin {

struct GaussianLaw {
  Vector mean;
  Matrix cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Symmetrizes cov and clips eigenvalues in [-1e-12 |cov|, 0) to zero.
GaussianLaw make_gaussian_law(const Vector& mean, const Matrix& cov);

// Last d coordinates of a (v, x) law.
GaussianLaw x_marginal(const GaussianLaw& law);

enum class DistanceMetric { W2, WP };
enum class DistanceMethod { gaussian_closed_form, empirical_assignment, sandwich_converted };

std::string to_string(DistanceMetric metric);
std::string to_string(DistanceMethod method);

struct WassersteinResult {
  double value = 0.0;
  DistanceMetric metric = DistanceMetric::W2;
  Eigen::MatrixXd P;  // hat metric for W_P, empty for W2
  DistanceMethod method = DistanceMethod::gaussian_closed_form;
};

nlohmann::json to_json(const WassersteinResult& result);

// PSD square root through the symmetric eigendecomposition.
Matrix psd_sqrt(const Matrix& A);

// Closed form W2 between Gaussians. With P, the state is read as N blocks
// of size d ((v, x) order) and mapped by (L' (x) I_d), which turns W_P into W2.
WassersteinResult gaussian_w2(const GaussianLaw& g1, const GaussianLaw& g2,
                              const std::optional<MetricP>& P = std::nullopt);

// p_min W2^2 <= W_P^2 <= p_max W2^2 applied to a W2 value: {lower, upper}.
std::pair<WassersteinResult, WassersteinResult> sandwich(const WassersteinResult& w2, const MetricP& P);

// One step on a quadratic target is xi' = M xi + b + T omega, with
// omega = (dW_1, I_E1, dW_2, I_E2) the half-step noise and Cov(omega) = C.
struct AffineStep {
  Matrix M;
  Vector b;
  Matrix T;
  Matrix C;
  Matrix N;  // T C T'
};

AffineStep affine_step(const SchemeStep& scheme, const Target& target);

struct LyapunovSolution {
  Matrix Sigma;
  double residual = 0.0;  // |M S M' + N - S| / |S|
  int doublings = 0;
};

// Sigma = M Sigma M' + N by doubling. Throws NoInvariant when the iteration
// does not settle to a relative residual of 1e-12.
LyapunovSolution solve_discrete_lyapunov(const Matrix& M, const Matrix& N);

// Exact stationary law of a scheme on f(x) = x'Qx/2, after checking that
// discrete_rate reports contraction on [lambda_min(Q), lambda_max(Q)].
GaussianLaw numerical_invariant(const SchemeStep& scheme, const Matrix& Q);

// v ~ N(0, c I) independent of x ~ N(0, Q^-1); x alone for overdamped.
GaussianLaw sde_invariant(const HatModel& model, const Matrix& Q);

// Rows are samples.
Matrix ensemble_matrix(const std::vector<ChainState>& chains, bool x_only = false);

// Exact optimal assignment on squared distances: sorting in one dimension,
// a shortest-augmenting-path solver otherwise (n <= 2048).
WassersteinResult empirical_w2(const Matrix& samples1, const Matrix& samples2,
                               const std::optional<MetricP>& P = std::nullopt);

// Minimum-cost perfect matching for a square cost matrix; returns the column
// assigned to each row.
std::vector<int> solve_assignment(const Matrix& cost);

}  // namespace langevin
