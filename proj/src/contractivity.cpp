#include "langevin/contractivity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "langevin/errors.hpp"
#include "langevin/kernels.hpp"
#include "langevin/rng.hpp"

namespace langevin {

namespace {

// Small dense matrix in quad precision, n = 1 or 2.
struct RM {
  int n = 2;
  std::array<std::array<Real, 2>, 2> a{};

  Real& operator()(int i, int j) { return a[i][j]; }
  const Real& operator()(int i, int j) const { return a[i][j]; }
};

RM zeros(int n) {
  RM r;
  r.n = n;
  for (auto& row : r.a) row.fill(Real(0));
  return r;
}

RM operator+(const RM& x, const RM& y) {
  RM r = zeros(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) r(i, j) = x(i, j) + y(i, j);
  return r;
}

RM operator*(const RM& x, const RM& y) {
  RM r = zeros(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j)
      for (int k = 0; k < x.n; ++k) r(i, j) += x(i, k) * y(k, j);
  return r;
}

RM scaled(const RM& x, const Real& s) {
  RM r = x;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) r(i, j) *= s;
  return r;
}

RM transposed(const RM& x) {
  RM r = zeros(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) r(i, j) = x(j, i);
  return r;
}

RM from_eigen(const Eigen::MatrixXd& m) {
  RM r = zeros(static_cast<int>(m.rows()));
  for (int i = 0; i < r.n; ++i)
    for (int j = 0; j < r.n; ++j) r(i, j) = Real(m(i, j));
  return r;
}

// Ascending roots of det(Z - t P) = 0 for symmetric Z and P > 0.
template <class T>
std::array<T, 2> pencil_roots(T z11, T z12, T z22, T p11, T p12, T p22) {
  using std::abs;
  using std::sqrt;
  const T a = p11 * p22 - p12 * p12;
  const T b = -(z11 * p22 + z22 * p11 - 2 * z12 * p12);
  const T c = z11 * z22 - z12 * z12;
  T disc = b * b - 4 * a * c;
  if (disc < T(0)) disc = T(0);
  const T q = -(b + (b < T(0) ? -sqrt(disc) : sqrt(disc))) / 2;
  T r1, r2;
  if (q == T(0)) {
    r1 = r2 = T(0);
  } else {
    r1 = q / a;
    r2 = c / q;
  }
  if (r2 < r1) std::swap(r1, r2);
  return {r1, r2};
}

std::array<Real, 2> pencil(const RM& Z, const RM& P) {
  if (Z.n == 1) {
    const Real r = Z(0, 0) / P(0, 0);
    return {r, r};
  }
  return pencil_roots<Real>(Z(0, 0), (Z(0, 1) + Z(1, 0)) / 2, Z(1, 1), P(0, 0), P(0, 1), P(1, 1));
}

// Quad-precision hat matrices for the continuous sweep.
struct RealModel {
  RM A, B, C;  // B is n x 1 and C is 1 x n, stored padded
  int n = 2;
};

RealModel real_model(const HatModel& model) {
  RealModel r;
  r.n = model.n_hat();
  r.A = zeros(r.n);
  r.B = zeros(r.n);
  r.C = zeros(r.n);
  const Real g(model.gamma);
  const Real& c = model.c.exact;
  switch (model.kind) {
    case ModelKind::underdamped:
      r.A(0, 0) = -g;
      r.A(1, 0) = Real(1);
      r.B(0, 0) = -c;
      r.C(0, 1) = Real(1);
      break;
    case ModelKind::overdamped:
      r.B(0, 0) = -c;
      r.C(0, 0) = Real(1);
      break;
    case ModelKind::custom:
      r.A = from_eigen(model.A);
      for (int i = 0; i < r.n; ++i) {
        r.B(i, 0) = Real(model.B(i, 0));
        r.C(0, i) = Real(model.C(0, i));
      }
      break;
  }
  return r;
}

RM z_continuous_real(const RM& P, const RealModel& model, const Real& H) {
  const RM drift = model.A + scaled(model.B * model.C, H);
  const RM pd = P * drift;
  return scaled(pd + transposed(pd), Real(-1));
}

// K = M - I for one step, built from expm1 so that ||K|| ~ h stays exact.
struct RealScheme {
  Scheme scheme;
  Real h, c, E, Em1, F, G, E2, F2;
};

RealScheme real_scheme(const SchemeStep& s) {
  RealScheme r;
  r.scheme = s.scheme;
  r.h = Real(s.h);
  r.c = s.c.exact;
  const Real g(s.gamma);
  const Real half = r.h / 2;
  r.E = kernel_E(g, r.h);
  r.Em1 = kernel_Em1(g, r.h);
  r.F = kernel_F(g, r.h);
  r.G = kernel_G(g, r.h);
  r.E2 = kernel_E(g, half);
  r.F2 = kernel_F(g, half);
  return r;
}

RM propagator_minus_identity(const RealScheme& s, const Real& H) {
  const Real cH = s.c * H;
  if (s.scheme == Scheme::EM) {
    RM k = zeros(1);
    k(0, 0) = -s.h * cH;
    return k;
  }
  RM k = zeros(2);
  switch (s.scheme) {
    case Scheme::EE:
      k(0, 0) = s.Em1;
      k(0, 1) = -s.F * cH;
      k(1, 0) = s.F;
      k(1, 1) = -s.G * cH;
      break;
    case Scheme::UBU: {
      const Real kick_v = s.h * cH * s.E2;
      const Real kick_x = s.h * cH * s.F2;
      k(0, 0) = s.Em1 - kick_v * s.F2;
      k(0, 1) = -kick_v;
      k(1, 0) = s.F - kick_x * s.F2;
      k(1, 1) = -kick_x;
      break;
    }
    case Scheme::BUB: {
      RM u = zeros(2);
      u(0, 0) = s.Em1;
      u(1, 0) = s.F;
      RM b = zeros(2);
      b(0, 1) = -(s.h / 2) * cH;
      k = u + scaled(b, Real(2)) + b * u + u * b + b * u * b;
      break;
    }
    case Scheme::EM: break;
  }
  return k;
}

// Eigenvalues g of (-(K'P + PK + K'PK), P); R = 1 - g.
std::array<Real, 2> discrete_gaps(const RM& P, const RM& K) {
  const RM kt = transposed(K);
  const RM D = scaled(kt * P + P * K + kt * P * K, Real(-1));
  return pencil(D, P);
}

struct SweepResult {
  Real value;
  double H = 0.0;
  int grid = 0;
  int refinements = 0;
};

std::vector<double> sweep_grid(double m, double L, int points) {
  std::vector<double> grid;
  if (!(L > m)) return {m};
  const bool mixed = L / m > 100.0;
  const int linear = mixed ? points / 2 : points;
  for (int i = 0; i < linear; ++i) grid.push_back(m + (L - m) * i / (linear - 1));
  if (mixed) {
    const int geo = points - linear;
    const double ratio = std::log(L / m);
    for (int i = 0; i < geo; ++i) grid.push_back(m * std::exp(ratio * i / (geo - 1)));
  }
  grid.front() = m;
  grid.push_back(L);
  for (double& H : grid) H = std::clamp(H, m, L);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// Minimum over [m, L] of f: dense grid plus golden-section refinement of the
// three lowest interior local minima.
SweepResult sweep_min(const std::function<Real(double)>& f, double m, double L) {
  constexpr int kGrid = 2048;
  constexpr int kRefine = 3;
  const std::vector<double> grid = sweep_grid(m, L, kGrid);
  std::vector<Real> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f(grid[i]);

  SweepResult best;
  best.grid = static_cast<int>(grid.size());
  std::size_t arg = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (values[i] < values[arg]) arg = i;
  best.value = values[arg];
  best.H = grid[arg];

  std::vector<std::size_t> minima;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i)
    if (values[i] <= values[i - 1] && values[i] <= values[i + 1]) minima.push_back(i);
  std::sort(minima.begin(), minima.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  if (minima.size() > kRefine) minima.resize(kRefine);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t i : minima) {
    double lo = grid[i - 1], hi = grid[i + 1];
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    Real f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = f(x2);
      }
    }
    ++best.refinements;
    if (f1 < best.value) {
      best.value = f1;
      best.H = x1;
    }
    if (f2 < best.value) {
      best.value = f2;
      best.H = x2;
    }
  }
  return best;
}

void check_interval(double m, double L) {
  if (!(m > 0.0) || !(L >= m) || !std::isfinite(L)) throw InvalidParameter("need 0 < m <= L");
}

void check_metric(const MetricP& P, int n) {
  if (P.n() != n) throw DimensionMismatch("metric size does not match the model");
}

}  // namespace

MetricP make_metric(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols() || P.rows() == 0) throw InvalidMetric("metric must be square");
  if ((P - P.transpose()).norm() > 1e-12 * std::max(1.0, P.norm())) throw InvalidMetric("metric must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw InvalidMetric("metric must be positive definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
  MetricP metric;
  metric.P = P;
  metric.L = llt.matrixL();
  metric.p_min = eig.eigenvalues().minCoeff();
  metric.p_max = eig.eigenvalues().maxCoeff();
  if (!(metric.p_min > 0.0)) throw InvalidMetric("metric must be positive definite");
  return metric;
}

MetricP default_metric(int n_hat) {
  if (n_hat == 1) return make_metric(Eigen::MatrixXd::Ones(1, 1));
  if (n_hat == 2) return make_metric((Eigen::MatrixXd(2, 2) << 1, 1, 1, 2).finished());
  throw InvalidMetric("no default metric for this dimension");
}

MetricP metric_from_cholesky(double l11, double l21, double l22) {
  Eigen::Matrix2d L;
  L << l11, 0, l21, l22;
  return make_metric(L * L.transpose());
}

Eigen::VectorXd generalized_eigenvalues(const Eigen::MatrixXd& Z, const MetricP& P) {
  if (Z.rows() != P.n() || Z.cols() != P.n()) throw DimensionMismatch("Z and P sizes differ");
  const Eigen::MatrixXd Linv = P.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(P.n(), P.n()));
  Eigen::MatrixXd W = Linv * Z * Linv.transpose();
  W = (W + W.transpose()) / 2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

Eigen::Vector2d generalized_eigenvalues_2x2(const Eigen::Matrix2d& Z, const Eigen::Matrix2d& P) {
  const auto r = pencil_roots<double>(Z(0, 0), (Z(0, 1) + Z(1, 0)) / 2, Z(1, 1), P(0, 0), P(0, 1), P(1, 1));
  return {r[0], r[1]};
}

Eigen::MatrixXd z_continuous(const MetricP& P, const HatModel& model, double H) {
  check_metric(P, model.n_hat());
  const Eigen::MatrixXd drift = model.A + H * model.B * model.C;
  const Eigen::MatrixXd pd = P.P * drift;
  return -(pd + pd.transpose());
}

ContractivityReport continuous_rate(const MetricP& P, const HatModel& model, double m, double L) {
  check_interval(m, L);
  check_metric(P, model.n_hat());
  if (model.B.cols() != 1 || model.C.rows() != 1)
    throw DimensionMismatch("only scalar-gradient models (B: N x 1, C: 1 x N) are supported");
  ContractivityReport report;
  report.continuous = true;
  report.m = m;
  report.L = L;
  SweepResult best;
  if (model.n_hat() <= 2) {
    const RealModel rm = real_model(model);
    const RM rp = from_eigen(P.P);
    best = sweep_min([&](double H) { return pencil(z_continuous_real(rp, rm, Real(H)), rp)[0]; }, m, L);
  } else {
    best = sweep_min(
        [&](double H) { return Real(generalized_eigenvalues(z_continuous(P, model, H), P)(0)); }, m, L);
  }
  report.lambda = static_cast<double>(best.value);
  report.rate = report.lambda;
  report.H = best.H;
  report.contractive = report.lambda > 0.0;
  report.grid_points = best.grid;
  report.refinements = best.refinements;
  return report;
}

Eigen::MatrixXd discrete_propagator(const SchemeStep& scheme, double H) {
  if (scheme.scheme != Scheme::BUB) return scheme.A_h + H * scheme.B_h * scheme.C_h;
  Eigen::Matrix2d kick;
  kick << 1, -0.5 * scheme.h * scheme.c.value * H, 0, 1;
  Eigen::Matrix2d drift;
  drift << scheme.E, 0, scheme.F, 1;
  return kick * drift * kick;
}

Eigen::MatrixXd z_discrete(const MetricP& P, const SchemeStep& scheme, double H) {
  check_metric(P, scheme.n_hat());
  const Eigen::MatrixXd M = discrete_propagator(scheme, H);
  return M.transpose() * P.P * M;
}

ContractivityReport discrete_rate(const MetricP& P, const SchemeStep& scheme, double m, double L) {
  check_interval(m, L);
  check_metric(P, scheme.n_hat());
  if (!(scheme.h > 0.0)) throw InvalidParameter("step size must be positive");
  const RealScheme rs = real_scheme(scheme);
  const RM rp = from_eigen(P.P);
  const SweepResult best =
      sweep_min([&](double H) { return discrete_gaps(rp, propagator_minus_identity(rs, Real(H)))[0]; }, m, L);
  ContractivityReport report;
  report.continuous = false;
  report.m = m;
  report.L = L;
  report.h = scheme.h;
  report.one_minus_rho = static_cast<double>(best.value);
  const Real rho = Real(1) - best.value;
  report.rho = static_cast<double>(rho);
  report.contractive = best.value > Real(0);
  using boost::multiprecision::sqrt;
  const Real root = sqrt(rho < Real(0) ? Real(0) : rho);
  report.rate = static_cast<double>(best.value / ((Real(1) + root) * rs.h));
  report.H = best.H;
  report.grid_points = best.grid;
  report.refinements = best.refinements;
  return report;
}

std::string EigencurveRow::flag() const {
  std::string out;
  if (complex_pair) out = "complex";
  if (expanding) out += out.empty() ? "expanding" : ",expanding";
  return out;
}

double EigencurveTable::max_error() const {
  double err = 0.0;
  for (const auto& row : rows) {
    err = std::max(err, std::abs(row.tilde_plus - row.lambda_plus));
    if (std::isfinite(row.lambda_minus)) err = std::max(err, std::abs(row.tilde_minus - row.lambda_minus));
  }
  return err;
}

bool EigencurveTable::any_negative_minus() const {
  return std::any_of(rows.begin(), rows.end(), [](const EigencurveRow& r) { return r.tilde_minus < 0.0; });
}

EigencurveTable eigencurves(const SchemeStep& scheme, double m, double L, int grid) {
  return eigencurves(scheme, m, L, grid, default_metric(scheme.n_hat()));
}

EigencurveTable eigencurves(const SchemeStep& scheme, double m, double L, int grid, const MetricP& P) {
  check_interval(m, L);
  check_metric(P, scheme.n_hat());
  if (grid < 2) throw InvalidParameter("grid needs at least two points");
  if (!(scheme.h > 0.0)) throw InvalidParameter("step size must be positive");
  const RealScheme rs = real_scheme(scheme);
  const RM rp = from_eigen(P.P);
  RealModel rm;
  rm.n = scheme.n_hat();
  rm.A = zeros(rm.n);
  rm.B = zeros(rm.n);
  rm.C = zeros(rm.n);
  rm.B(0, 0) = -rs.c;
  if (rm.n == 2) {
    rm.A(0, 0) = Real(-scheme.gamma);
    rm.A(1, 0) = Real(1);
    rm.C(0, 1) = Real(1);
  } else {
    rm.C(0, 0) = Real(1);
  }

  EigencurveTable table;
  table.scheme = scheme.scheme;
  table.h = scheme.h;
  using boost::multiprecision::abs;
  using boost::multiprecision::sqrt;
  for (int i = 0; i < grid; ++i) {
    const double H = i + 1 == grid ? L : m + (L - m) * i / (grid - 1);
    const Real rH(H);
    EigencurveRow row;
    row.H = H;

    const auto lam = pencil(z_continuous_real(rp, rm, rH), rp);
    const Real target = rs.c * rH;
    const bool first_plus = abs(lam[0] - target) <= abs(lam[1] - target);
    const Real lp = first_plus ? lam[0] : lam[1];
    const Real lm = first_plus ? lam[1] : lam[0];

    const RM K = propagator_minus_identity(rs, rH);
    const auto gaps = discrete_gaps(rp, K);
    std::array<Real, 2> tilde{};
    for (int k = 0; k < 2; ++k) {
      const Real R = Real(1) - gaps[k];
      tilde[k] = 2 * gaps[k] / ((Real(1) + sqrt(R < Real(0) ? Real(0) : R)) * rs.h);
      if (R > Real(1)) row.expanding = true;
    }
    const bool tilde_first_plus = abs(tilde[0] - lp) <= abs(tilde[1] - lp);
    row.lambda_plus = static_cast<double>(lp);
    row.tilde_plus = static_cast<double>(tilde_first_plus ? tilde[0] : tilde[1]);
    if (rm.n == 2) {
      row.lambda_minus = static_cast<double>(lm);
      row.tilde_minus = static_cast<double>(tilde_first_plus ? tilde[1] : tilde[0]);
      const Real tr = Real(2) + K(0, 0) + K(1, 1);
      const Real det = (Real(1) + K(0, 0)) * (Real(1) + K(1, 1)) - K(0, 1) * K(1, 0);
      row.complex_pair = tr * tr - 4 * det < Real(0);
    } else {
      row.lambda_minus = std::numeric_limits<double>::quiet_NaN();
      row.tilde_minus = std::numeric_limits<double>::quiet_NaN();
    }
    table.rows.push_back(row);
  }
  return table;
}

namespace {

// phi(H) for P = [[1, l21], [l21, l21^2 + l22^2]] and gamma = 2, with
// c = s / L so that all three unknowns are O(1).
struct PhiParams {
  double m, L;
};

double phi(double l21, double l22, double s, double H, double L) {
  const double a = l22 * l22 + 2 * l21 - l21 * l21;
  const double u = s * H / L - a;
  return u * u / (l22 * l22) + 4 * (1 - l21) * (1 - l21);
}

Eigen::Vector3d phi_gradient(double l21, double l22, double s, double H, double L) {
  const double q = l22 * l22;
  const double u = s * H / L - (q + 2 * l21 - l21 * l21);
  Eigen::Vector3d g;
  g(0) = -2 * u * (2 - 2 * l21) / q - 8 * (1 - l21);
  g(1) = -4 * u / l22 - 2 * u * u / (q * l22);
  g(2) = 2 * u * (H / L) / q;
  return g;
}

double sup_objective(const gsl_vector* v, void* params) {
  const auto* p = static_cast<const PhiParams*>(params);
  const double l21 = gsl_vector_get(v, 0), l22 = gsl_vector_get(v, 1), s = gsl_vector_get(v, 2);
  if (!(std::abs(l22) > 1e-300)) return std::numeric_limits<double>::max();
  // phi is convex in H, so its supremum over [m, L] sits at an endpoint.
  return std::max(phi(l21, l22, s, p->m, p->L), phi(l21, l22, s, p->L, p->L));
}

Eigen::Vector4d kkt_residual(const Eigen::Vector4d& z, double m, double L) {
  const Eigen::Vector3d gm = phi_gradient(z(0), z(1), z(2), m, L);
  const Eigen::Vector3d gL = phi_gradient(z(0), z(1), z(2), L, L);
  Eigen::Vector4d r;
  r.head<3>() = z(3) * gm + (1 - z(3)) * gL;
  r(3) = phi(z(0), z(1), z(2), m, L) - phi(z(0), z(1), z(2), L, L);
  return r;
}

}  // namespace

OptimalP optimal_underdamped(double m, double L) {
  check_interval(m, L);
  if (!(L > m)) throw InvalidParameter("optimal metric needs m < L");
  PhiParams params{m, L};
  gsl_multimin_function fn{&sup_objective, 3, &params};

  OptimalP best;
  best.objective = std::numeric_limits<double>::infinity();
  const std::array<std::array<double, 3>, 4> starts{
      {{1.0, 1.0, 2.0}, {0.5, 0.5, 1.0}, {1.5, 1.5, 3.0}, {0.9, 0.3, 0.5}}};
  gsl_set_error_handler_off();
  for (const auto& start : starts) {
    gsl_multimin_fminimizer* solver = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* step = gsl_vector_alloc(3);
    for (int i = 0; i < 3; ++i) {
      gsl_vector_set(x, i, start[i]);
      gsl_vector_set(step, i, 0.2);
    }
    gsl_multimin_fminimizer_set(solver, &fn, x, step);
    int it = 0;
    for (; it < 20000; ++it) {
      if (gsl_multimin_fminimizer_iterate(solver) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-12) == GSL_SUCCESS) break;
    }
    if (solver->fval < best.objective) {
      best.objective = solver->fval;
      best.l21 = gsl_vector_get(solver->x, 0);
      best.l22 = std::abs(gsl_vector_get(solver->x, 1));
      best.c = gsl_vector_get(solver->x, 2) / L;
      best.simplex_iterations = it;
    }
    gsl_vector_free(step);
    gsl_vector_free(x);
    gsl_multimin_fminimizer_free(solver);
  }

  // Newton polish on the two-active-endpoint optimality system.
  Eigen::Vector4d z(best.l21, best.l22, best.c * L, 0.5);
  {
    // Initial multiplier from least squares on the stationarity rows.
    const Eigen::Vector3d gm = phi_gradient(z(0), z(1), z(2), m, L);
    const Eigen::Vector3d gL = phi_gradient(z(0), z(1), z(2), L, L);
    const Eigen::Vector3d d = gm - gL;
    if (d.squaredNorm() > 0) z(3) = std::clamp(-d.dot(gL) / d.squaredNorm(), 0.0, 1.0);
  }
  for (int it = 0; it < 50; ++it) {
    const Eigen::Vector4d r = kkt_residual(z, m, L);
    if (r.norm() < 1e-14) {
      best.newton_converged = true;
      break;
    }
    Eigen::Matrix4d J;
    for (int j = 0; j < 4; ++j) {
      const double dz = 1e-7 * std::max(1.0, std::abs(z(j)));
      Eigen::Vector4d zp = z, zm = z;
      zp(j) += dz;
      zm(j) -= dz;
      J.col(j) = (kkt_residual(zp, m, L) - kkt_residual(zm, m, L)) / (2 * dz);
    }
    const Eigen::Vector4d dz = J.fullPivLu().solve(-r);
    if (!dz.allFinite()) break;
    z += dz;
    best.newton_iterations = it + 1;
  }
  if (!best.newton_converged) best.newton_converged = kkt_residual(z, m, L).norm() < 1e-10;
  const double polished = std::max(phi(z(0), z(1), z(2), m, L), phi(z(0), z(1), z(2), L, L));
  if (best.newton_converged && z(3) >= 0.0 && z(3) <= 1.0 && z(1) != 0.0 && polished <= best.objective + 1e-12) {
    best.l21 = z(0);
    best.l22 = std::abs(z(1));
    best.c = z(2) / L;
    best.objective = polished;
  } else {
    best.newton_converged = false;
  }
  best.lambda = 2.0 - std::sqrt(best.objective);
  const HatModel model = make_model(ModelKind::underdamped, 2.0, best.c);
  best.lambda_check = continuous_rate(metric_from_cholesky(1.0, best.l21, best.l22), model, m, L).lambda;
  return best;
}

CouplingReport coupled_contraction(const SchemeStep& scheme, const Target& target, const MetricP& P,
                                   std::int64_t steps, std::uint64_t seed) {
  const int n_hat = scheme.n_hat();
  check_metric(P, n_hat);
  if (steps < 1) throw InvalidParameter("need at least one step");
  const int d = target.dim();
  const Eigen::Index D = static_cast<Eigen::Index>(n_hat) * d;
  // |xi|_P for xi = (v, x) is |(L' (x) I) xi|.
  const Matrix Lt = P.L.transpose();
  auto pnorm = [&](const Vector& xi) {
    double s = 0.0;
    for (int i = 0; i < n_hat; ++i) {
      Vector block = Vector::Zero(d);
      for (int j = 0; j < n_hat; ++j) block += Lt(i, j) * xi.segment(static_cast<Eigen::Index>(j) * d, d);
      s += block.squaredNorm();
    }
    return std::sqrt(s);
  };

  CouplingReport report;
  const ContractivityReport rate = discrete_rate(P, scheme, target.m(), target.L());
  report.contractive = rate.contractive;
  report.rho_sqrt = std::sqrt(std::max(0.0, rate.rho));

  GaussianStream rng(seed, 0);
  Vector xi1(D), dir(D);
  for (Eigen::Index i = 0; i < D; ++i) xi1[i] = rng();
  for (Eigen::Index i = 0; i < D; ++i) dir[i] = rng();
  ChainState s1 = state_from_xi(xi1, n_hat);
  ChainState s2 = state_from_xi(xi1 + dir / pnorm(dir), n_hat);
  report.ratios.reserve(static_cast<std::size_t>(steps));
  for (std::int64_t k = 0; k < steps; ++k) {
    const double before = pnorm(s2.xi() - s1.xi());
    const NoisePair noise = sample_noise_pair(scheme, d, rng);
    advance(scheme, target, s1, noise);
    advance(scheme, target, s2, noise);
    const Vector diff = s2.xi() - s1.xi();
    const double after = pnorm(diff);
    const double ratio = after / before;
    report.ratios.push_back(ratio);
    report.max_ratio = std::max(report.max_ratio, ratio);
    if (!(after > 0.0)) break;
    const std::int64_t n2 = s2.n;
    s2 = state_from_xi(s1.xi() + diff / after, n_hat);
    s2.n = n2;
  }
  return report;
}

std::vector<Table1> table1(const std::vector<double>& kappas, const std::vector<CChoice>& cs,
                           const std::vector<double>& hs, double m, double gamma,
                           const std::vector<Scheme>& schemes, bool parallel) {
  std::vector<Table1> tables;
  for (double kappa : kappas) {
    if (!(kappa >= 1.0)) throw InvalidParameter("kappa must be >= 1");
    Table1 t;
    t.kappa = kappa;
    t.m = m;
    t.gamma = gamma;
    t.h = hs;
    t.c = cs;
    t.schemes = schemes;
    for (double h : hs)
      for (const auto& c : cs)
        for (Scheme s : schemes) t.cells.push_back({h, c, s, {}});
    tables.push_back(std::move(t));
  }
  std::vector<Table1Cell*> work;
  std::vector<const Table1*> owner;
  for (auto& t : tables)
    for (auto& cell : t.cells) {
      work.push_back(&cell);
      owner.push_back(&t);
    }
  const long n = static_cast<long>(work.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i) {
    Table1Cell& cell = *work[i];
    const Table1& t = *owner[i];
    const double L = t.kappa * t.m;
    const SchemeStep step = make_scheme(cell.scheme, t.gamma, cell.c.resolve(t.m, L), cell.h);
    cell.report = discrete_rate(default_metric(step.n_hat()), step, t.m, L);
  }
  return tables;
}

std::string format_mantissa_exponent(double value, int significant) {
  if (!std::isfinite(value)) return "nan";
  if (value == 0.0) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(significant - 1) << 0.0 << "(0)";
    return os.str();
  }
  int e = static_cast<int>(std::floor(std::log10(std::abs(value))));
  double mant = value / std::pow(10.0, e);
  const double scale = std::pow(10.0, significant - 1);
  if (std::abs(std::round(mant * scale) / scale) >= 10.0) {
    mant /= 10.0;
    ++e;
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(significant - 1) << mant << "(" << e << ")";
  return os.str();
}

std::string format_scientific(double value, int significant) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(significant - 1) << value;
  return os.str();
}

}  // namespace langevin
