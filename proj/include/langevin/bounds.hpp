#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "langevin/integrators.hpp"

namespace langevin {

// Local-error constants of a scheme and the per-step contraction rate r
// (rho_h <= (1 - r h)^2 for h <= h0).
struct BoundParams {
  int p = 1;
  double C0 = 0.0, C1 = 0.0, C2 = 0.0;
  double r = 0.0;
  double h0 = 1.0;

  // R_h = (1 - sqrt((1 - r h)^2 + C0 h^2)) / h, evaluated without cancellation.
  double R(double h) const;
  // (sqrt(2) C1 / sqrt(R_h) + C2 / R_h) h^p; BoundUnavailable when R_h <= 0.
  double bias(double h) const;
};

nlohmann::json to_json(const BoundParams& params);

// sqrt(6 + 2 sqrt 5) / 3
double constant_K();
double constant_K0();
double constant_K1();
double constant_K2();

// EE, valid for h <= 1: p = 1, C0 = C1 = 0, C2 = K c^{3/2} L d^{1/2}.
BoundParams constants_ee(double c, double L, int d, double r = 0.0);

// UBU, valid for h <= 2. With L1: p = 2 and the three-constant form. Without
// L1: p = 1, C0 = C1 = 0, and C2 from the order-one local error bound at
// h <= 2, converted to the P norm by sqrt(p_max).
BoundParams constants_ubu(double c, double L, std::optional<double> L1, int d, double r = 0.0);

// (1 - h R_h)^n W0 + (sqrt(2) C1 / sqrt(R_h) + C2 / R_h) h^p.
double mixing_bound(const BoundParams& params, double W0, double h, std::int64_t n);

struct PlanRequest {
  Scheme scheme = Scheme::UBU;
  double eps = 0.01;
  double kappa = 100.0;
  double m = 1.0;
  int d = 1;
  double W0 = 1.0;
  double r_bar = 0.45;
  std::optional<double> h0;  // default 1 (EE) or 2 (UBU)
  std::optional<double> L1;  // UBU only; absent means order one
  double a = 0.5;            // eps split: bias <= a eps, contraction <= (1 - a) eps
  bool use_computed_rate = false;
};

struct MixingPlan {
  PlanRequest request;
  double L = 0.0;
  double c = 0.0;
  BoundParams params;
  double h = 0.0;
  std::int64_t n = 0;
  double R_h = 0.0;
  double bias = 0.0;
  double contraction = 0.0;  // (1 - h R_h)^n W0
  double bound = 0.0;
  // "h0", "bias" or "C0": which condition fixed h.
  std::string limiting;
  // Bias coefficient divided by (1/sqrt(L) + L1/L^2) kappa d^{1/2} (UBU, p = 2).
  std::optional<double> K_bar;
  int h0_halvings = 0;
  int rate_iterations = 0;
};

nlohmann::json to_json(const MixingPlan& plan);

// c = 1/L and gamma = 2. r = r_bar / kappa, or the computed discrete rate at
// the chosen h when use_computed_rate is set. h0 is halved until the scheme's
// computed rate at h0 reaches r.
MixingPlan plan(const PlanRequest& request);

struct RecursionCheck {
  std::vector<double> z;
  std::vector<double> bound;
  bool holds = true;
};

// z_{k+1} = sqrt((1-A)^2 z_k^2 + B) + C against (1-A)^k z0 + sqrt(B/A) + C/A.
RecursionCheck gronwall_recursion_check(double A, double B, double C, double z0, int n);

}  // namespace langevin
