#include "langevin/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "langevin/errors.hpp"
#include "langevin/kernels.hpp"

namespace langevin {

namespace {

double rel_norm(const Matrix& A) { return std::max(1.0, A.norm()); }

// (L' (x) I_d) for a state of total dimension D = N d.
Matrix block_transform(const MetricP& P, Eigen::Index D) {
  const int n = P.n();
  if (D % n != 0) throw DimensionMismatch("state dimension is not a multiple of the metric size");
  const Eigen::Index d = D / n;
  Matrix T = Matrix::Zero(D, D);
  const Matrix Lt = P.L.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (Lt(i, j) != 0.0) T.block(i * d, j * d, d, d) = Lt(i, j) * Matrix::Identity(d, d);
  return T;
}

Matrix symmetrized(const Matrix& A) { return (A + A.transpose()) / 2; }

}  // namespace

std::string to_string(DistanceMetric metric) { return metric == DistanceMetric::W2 ? "W2" : "W_P"; }

std::string to_string(DistanceMethod method) {
  switch (method) {
    case DistanceMethod::gaussian_closed_form: return "gaussian-closed-form";
    case DistanceMethod::empirical_assignment: return "empirical-assignment";
    case DistanceMethod::sandwich_converted: return "sandwich-converted";
  }
  return "unknown";
}

nlohmann::json to_json(const WassersteinResult& result) {
  nlohmann::json j;
  j["value"] = result.value;
  j["metric"] = to_string(result.metric);
  j["method"] = to_string(result.method);
  if (result.P.size() > 0) j["P"] = matrix_to_json(result.P);
  return j;
}

GaussianLaw make_gaussian_law(const Vector& mean, const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size()) throw DimensionMismatch("mean and covariance sizes differ");
  if ((cov - cov.transpose()).norm() > 1e-12 * rel_norm(cov)) throw InvalidParameter("covariance must be symmetric");
  GaussianLaw law;
  law.mean = mean;
  law.cov = symmetrized(cov);
  if (cov.rows() == 0) return law;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(law.cov);
  if (eig.eigenvalues().minCoeff() < -1e-12 * rel_norm(cov)) throw InvalidParameter("covariance must be positive semidefinite");
  if (eig.eigenvalues().minCoeff() < 0.0) {
    const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
    law.cov = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  }
  return law;
}

GaussianLaw x_marginal(const GaussianLaw& law) {
  const Eigen::Index d = law.mean.size() / 2;
  if (2 * d != law.mean.size()) throw DimensionMismatch("kinetic law must have even dimension");
  GaussianLaw out;
  out.mean = law.mean.tail(d);
  out.cov = law.cov.bottomRightCorner(d, d);
  return out;
}

Matrix psd_sqrt(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(A));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

WassersteinResult gaussian_w2(const GaussianLaw& g1, const GaussianLaw& g2, const std::optional<MetricP>& P) {
  if (g1.dim() != g2.dim() || g1.cov.rows() != g1.dim() || g2.cov.rows() != g2.dim())
    throw DimensionMismatch("Gaussian laws have different dimensions");
  Vector m1 = g1.mean, m2 = g2.mean;
  Matrix S1 = g1.cov, S2 = g2.cov;
  WassersteinResult result;
  result.method = DistanceMethod::gaussian_closed_form;
  if (P) {
    const Matrix T = block_transform(*P, g1.dim());
    m1 = T * m1;
    m2 = T * m2;
    S1 = T * S1 * T.transpose();
    S2 = T * S2 * T.transpose();
    result.metric = DistanceMetric::WP;
    result.P = P->P;
  }
  const Matrix r2 = psd_sqrt(S2);
  const Matrix cross = psd_sqrt(r2 * S1 * r2);
  const double sq = (m1 - m2).squaredNorm() + S1.trace() + S2.trace() - 2.0 * cross.trace();
  result.value = std::sqrt(std::max(0.0, sq));
  return result;
}

std::pair<WassersteinResult, WassersteinResult> sandwich(const WassersteinResult& w2, const MetricP& P) {
  if (w2.metric != DistanceMetric::W2) throw InvalidParameter("sandwich conversion expects a W2 value");
  WassersteinResult lo, hi;
  lo.metric = hi.metric = DistanceMetric::WP;
  lo.method = hi.method = DistanceMethod::sandwich_converted;
  lo.P = hi.P = P.P;
  lo.value = std::sqrt(P.p_min) * w2.value;
  hi.value = std::sqrt(P.p_max) * w2.value;
  return {lo, hi};
}

AffineStep affine_step(const SchemeStep& scheme, const Target& target) {
  const int d = target.dim();
  const int n_hat = scheme.n_hat();
  const int D = n_hat * d;
  const double half = scheme.h / 2;
  const NoisePair zero = zero_noise_pair(scheme, d);

  auto run = [&](const Vector& xi, const NoisePair& noise) {
    ChainState st = state_from_xi(xi, n_hat);
    advance(scheme, target, st, noise);
    return st.xi();
  };

  AffineStep out;
  out.b = run(Vector::Zero(D), zero);
  out.M.resize(D, D);
  for (int j = 0; j < D; ++j) out.M.col(j) = run(Vector::Unit(D, j), zero) - out.b;

  out.T.resize(D, 4 * d);
  for (int slot = 0; slot < 4; ++slot) {
    for (int i = 0; i < d; ++i) {
      Vector dW = Vector::Zero(d), IE = Vector::Zero(d);
      (slot % 2 == 0 ? dW : IE)(i) = 1.0;
      NoisePair noise = zero;
      NoiseBlock& block = slot < 2 ? noise.first : noise.second;
      block = noise_block_from_pair(scheme.gamma, half, dW, IE);
      out.T.col(slot * d + i) = run(Vector::Zero(D), noise) - out.b;
    }
  }

  const Eigen::Matrix2d cov = noise_block_covariance(scheme.gamma, half);
  out.C = Matrix::Zero(4 * d, 4 * d);
  for (int half_index = 0; half_index < 2; ++half_index)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        out.C.block((2 * half_index + a) * d, (2 * half_index + b) * d, d, d) = cov(a, b) * Matrix::Identity(d, d);
  out.N = symmetrized(out.T * out.C * out.T.transpose());
  return out;
}

LyapunovSolution solve_discrete_lyapunov(const Matrix& M, const Matrix& N) {
  if (M.rows() != M.cols() || N.rows() != M.rows() || N.cols() != M.cols())
    throw DimensionMismatch("Lyapunov operands must be square and of equal size");
  LyapunovSolution sol;
  Matrix S = symmetrized(N);
  Matrix Mk = M;
  for (int k = 0; k < 200; ++k) {
    const Matrix next = symmetrized(S + Mk * S * Mk.transpose());
    const double change = (next - S).norm();
    S = next;
    Mk = Mk * Mk;
    sol.doublings = k + 1;
    if (!S.allFinite()) break;
    if (change <= 1e-17 * S.norm() || Mk.norm() < 1e-40) break;
  }
  sol.Sigma = S;
  const double scale = std::max(S.norm(), std::numeric_limits<double>::min());
  sol.residual = (M * S * M.transpose() + N - S).norm() / scale;
  if (!S.allFinite() || !(sol.residual <= 1e-12))
    throw NoInvariant("covariance recursion did not converge (residual " + std::to_string(sol.residual) + ")");
  return sol;
}

GaussianLaw numerical_invariant(const SchemeStep& scheme, const Matrix& Q) {
  const Target target = make_quadratic_target(Q);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  const ContractivityReport rate = discrete_rate(default_metric(scheme.n_hat()), scheme, lo, hi);
  if (!rate.contractive) throw NoInvariant("scheme is not contractive on the spectrum of Q at this step size");
  const AffineStep step = affine_step(scheme, target);
  const Eigen::Index D = step.M.rows();
  const Matrix I = Matrix::Identity(D, D);
  const Vector mean = (I - step.M).fullPivLu().solve(step.b);
  const LyapunovSolution sol = solve_discrete_lyapunov(step.M, step.N);
  GaussianLaw law;
  law.mean = mean;
  law.cov = sol.Sigma;
  return law;
}

GaussianLaw sde_invariant(const HatModel& model, const Matrix& Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw DimensionMismatch("Q must be square");
  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() != Eigen::Success) throw InvalidTarget("Q must be positive definite");
  const Eigen::Index d = Q.rows();
  const Matrix Qinv = llt.solve(Matrix::Identity(d, d));
  GaussianLaw law;
  switch (model.kind) {
    case ModelKind::overdamped:
      law.mean = Vector::Zero(d);
      law.cov = symmetrized(Qinv);
      return law;
    case ModelKind::underdamped:
      law.mean = Vector::Zero(2 * d);
      law.cov = Matrix::Zero(2 * d, 2 * d);
      law.cov.topLeftCorner(d, d) = model.c.value * Matrix::Identity(d, d);
      law.cov.bottomRightCorner(d, d) = symmetrized(Qinv);
      return law;
    case ModelKind::custom: break;
  }
  throw InvalidParameter("invariant law is only available for the overdamped and underdamped models");
}

Matrix ensemble_matrix(const std::vector<ChainState>& chains, bool x_only) {
  if (chains.empty()) return Matrix();
  const Eigen::Index D = x_only ? chains.front().x.size() : chains.front().xi().size();
  Matrix out(static_cast<Eigen::Index>(chains.size()), D);
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const Vector row = x_only ? chains[i].x : chains[i].xi();
    if (row.size() != D) throw DimensionMismatch("chains differ in dimension");
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

std::vector<int> solve_assignment(const Matrix& cost) {
  // Shortest augmenting paths with row/column potentials; column 0 is a
  // virtual start and rows/columns are 1-based internally.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionMismatch("assignment needs a square cost matrix");
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a = cost;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<int> free_cols(n), visited;
  visited.reserve(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::iota(free_cols.begin(), free_cols.end(), 1);
    int n_free = n;
    visited.assign(1, 0);
    do {
      const int i0 = p[j0];
      const double* row = a.data() + static_cast<std::ptrdiff_t>(i0 - 1) * n;
      const double ui = u[i0];
      double delta = inf;
      int k1 = -1;
      for (int k = 0; k < n_free; ++k) {
        const int j = free_cols[k];
        const double cur = row[j - 1] - ui - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          k1 = k;
        }
      }
      for (int j : visited) {
        u[p[j]] += delta;
        v[j] -= delta;
      }
      for (int k = 0; k < n_free; ++k) minv[free_cols[k]] -= delta;
      j0 = free_cols[k1];
      free_cols[k1] = free_cols[--n_free];
      visited.push_back(j0);
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

WassersteinResult empirical_w2(const Matrix& samples1, const Matrix& samples2, const std::optional<MetricP>& P) {
  if (samples1.rows() != samples2.rows()) throw InvalidParameter("ensembles must have equal sample counts");
  if (samples1.cols() != samples2.cols()) throw DimensionMismatch("ensembles differ in dimension");
  WassersteinResult result;
  result.method = DistanceMethod::empirical_assignment;
  const Eigen::Index n = samples1.rows();
  if (n == 0) return result;
  Matrix X = samples1, Y = samples2;
  if (P) {
    const Matrix T = block_transform(*P, X.cols());
    X = X * T.transpose();
    Y = Y * T.transpose();
    result.metric = DistanceMetric::WP;
    result.P = P->P;
  }
  double total = 0.0;
  if (X.cols() == 1) {
    std::vector<double> a(X.data(), X.data() + n), b(Y.data(), Y.data() + n);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (Eigen::Index i = 0; i < n; ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  } else {
    if (n > 2048) throw InvalidParameter("exact assignment is limited to 2048 samples");
    Matrix cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (X.row(i) - Y.row(j)).squaredNorm();
    const std::vector<int> match = solve_assignment(cost);
    for (Eigen::Index i = 0; i < n; ++i) total += cost(i, match[i]);
  }
  result.value = std::sqrt(total / static_cast<double>(n));
  return result;
}

}  // namespace langevin
