#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "langevin/integrators.hpp"
#include "langevin/precision.hpp"
#include "langevin/state_space.hpp"

namespace langevin {

// Weight matrix P = L L' for the norm |xi|_P^2 = xi' (P (x) I_d) xi.
struct MetricP {
  Eigen::MatrixXd P;
  Eigen::MatrixXd L;  // lower Cholesky factor
  double p_min = 1.0;
  double p_max = 1.0;

  int n() const { return static_cast<int>(P.rows()); }
};

MetricP make_metric(const Eigen::MatrixXd& P);
// [[1,1],[1,2]] for N=2, [1] for N=1.
MetricP default_metric(int n_hat);
// P = L L' with L = [[l11, 0], [l21, l22]].
MetricP metric_from_cholesky(double l11, double l21, double l22);

struct ContractivityReport {
  bool continuous = true;
  // Continuous: lambda = inf over H of the smallest eigenvalue of
  // Z(H) x = Lambda P x.
  double lambda = 0.0;
  // Discrete: rho = sup over H of the largest eigenvalue of
  // M'PM x = R P x; one_minus_rho is computed without cancellation.
  double rho = 0.0;
  double one_minus_rho = 0.0;
  // lambda (continuous) or (1 - sqrt(rho)) / h (discrete).
  double rate = 0.0;
  double H = 0.0;  // where the extremum sits
  bool contractive = false;
  int grid_points = 0;
  int refinements = 0;
  double m = 0.0, L = 0.0, h = 0.0;
};

// Z(H) = -P(A + H B C) - (A + H B C)' P.
Eigen::MatrixXd z_continuous(const MetricP& P, const HatModel& model, double H);
ContractivityReport continuous_rate(const MetricP& P, const HatModel& model, double m, double L);

// M(H) = A_h + H B_h C_h (EM, EE, UBU); kick-drift-kick product for BUB.
Eigen::MatrixXd discrete_propagator(const SchemeStep& scheme, double H);
// Z_h(H) = M' P M.
Eigen::MatrixXd z_discrete(const MetricP& P, const SchemeStep& scheme, double H);
ContractivityReport discrete_rate(const MetricP& P, const SchemeStep& scheme, double m, double L);

// Ascending generalized eigenvalues of Z x = Lambda P x via the symmetric
// matrix L^-1 Z L^-T.
Eigen::VectorXd generalized_eigenvalues(const Eigen::MatrixXd& Z, const MetricP& P);
// Same for 2x2 from the roots of det(Z - Lambda P) = 0.
Eigen::Vector2d generalized_eigenvalues_2x2(const Eigen::Matrix2d& Z, const Eigen::Matrix2d& P);

struct EigencurveRow {
  double H = 0.0;
  double lambda_plus = 0.0, lambda_minus = 0.0;  // SDE
  double tilde_plus = 0.0, tilde_minus = 0.0;    // 2 (1 - sqrt(R)) / h
  bool complex_pair = false;  // M(H) has complex eigenvalues
  bool expanding = false;     // some R > 1

  std::string flag() const;
};

struct EigencurveTable {
  Scheme scheme = Scheme::UBU;
  double h = 0.0;
  std::vector<EigencurveRow> rows;

  // max over H of |tilde+ - lambda+| and |tilde- - lambda-|.
  double max_error() const;
  bool any_negative_minus() const;
};

// The discrete pair is labelled + when its value is closer to Lambda+,
// where Lambda+ is the SDE eigenvalue closer to cH.
EigencurveTable eigencurves(const SchemeStep& scheme, double m, double L, int grid);
EigencurveTable eigencurves(const SchemeStep& scheme, double m, double L, int grid, const MetricP& P);

struct CouplingReport {
  std::vector<double> ratios;  // |Delta_{k+1}|_P / |Delta_k|_P
  double max_ratio = 0.0;
  double rho_sqrt = 0.0;       // sqrt(rho_h) from discrete_rate on [m, L]
  bool contractive = false;
};

// Two chains driven by the same noise from (seed, 0). After every step the
// difference is rescaled to unit P-norm around the first chain, so the
// ratio is measured on an O(1) difference throughout.
CouplingReport coupled_contraction(const SchemeStep& scheme, const Target& target, const MetricP& P,
                                   std::int64_t steps, std::uint64_t seed);

struct OptimalP {
  double l21 = 0.0, l22 = 0.0, c = 0.0;
  double lambda = 0.0;        // 2 - sqrt(minimized supremum)
  double lambda_check = 0.0;  // continuous_rate at the optimizer
  double objective = 0.0;
  int simplex_iterations = 0;
  int newton_iterations = 0;
  bool newton_converged = false;
};

// Minimizes over (l21, l22, c), with l11 = 1 and gamma = 2, the supremum
// over H in [m, L] of (cH - (l22^2 + 2 l21 - l21^2))^2 / l22^2 + 4 (1 - l21)^2.
OptimalP optimal_underdamped(double m, double L);

struct Table1Cell {
  double h = 0.0;
  CChoice c;
  Scheme scheme = Scheme::EE;
  ContractivityReport report;
};

struct Table1 {
  double kappa = 1.0;
  double m = 1.0;
  double gamma = 2.0;
  std::vector<double> h;
  std::vector<CChoice> c;
  std::vector<Scheme> schemes;
  std::vector<Table1Cell> cells;  // index (i_h * c.size() + i_c) * schemes.size() + i_s

  const Table1Cell& at(std::size_t i_h, std::size_t i_c, std::size_t i_s) const {
    return cells[(i_h * c.size() + i_c) * schemes.size() + i_s];
  }
};

// (1 - sqrt(rho_h)) / h for every (kappa, h, c, scheme) with the default
// metric; cells are computed in parallel.
std::vector<Table1> table1(const std::vector<double>& kappas, const std::vector<CChoice>& cs,
                           const std::vector<double>& hs, double m = 1.0, double gamma = 2.0,
                           const std::vector<Scheme>& schemes = {Scheme::EE, Scheme::UBU}, bool parallel = true);

// "5.000(-10)" style used by the rate tables, and plain "5.000e-10".
std::string format_mantissa_exponent(double value, int significant = 4);
std::string format_scientific(double value, int significant = 4);

}  // namespace langevin
