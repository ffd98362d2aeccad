#include "langevin/bounds.hpp"

#include <cmath>
#include <limits>

#include "langevin/contractivity.hpp"
#include "langevin/errors.hpp"

namespace langevin {

double BoundParams::R(double h) const {
  if (!(h > 0.0)) throw InvalidParameter("step size must be positive");
  const double rh = r * h;
  const double q = (1.0 - rh) * (1.0 - rh) + C0 * h * h;
  return (rh * (2.0 - rh) - C0 * h * h) / ((1.0 + std::sqrt(q)) * h);
}

double BoundParams::bias(double h) const {
  const double Rh = R(h);
  if (!(Rh > 0.0)) throw BoundUnavailable("R_h <= 0: step size too large for the local-error constants");
  return (std::sqrt(2.0) * C1 / std::sqrt(Rh) + C2 / Rh) * std::pow(h, p);
}

nlohmann::json to_json(const BoundParams& params) {
  return {{"p", params.p}, {"C0", params.C0}, {"C1", params.C1}, {"C2", params.C2}, {"r", params.r},
          {"h0", params.h0}};
}

double constant_K() { return std::sqrt(6.0 + 2.0 * std::sqrt(5.0)) / 3.0; }
double constant_K0() { return std::sqrt(2.0 * std::sqrt(2.0) / (3.0 - std::sqrt(5.0))); }
double constant_K1() { return std::sqrt(3.0) / 12.0; }
double constant_K2() { return std::sqrt((3.0 + std::sqrt(5.0)) / 2.0) / 24.0; }

namespace {

void check_constants_input(double c, double L, int d) {
  if (!(c > 0.0) || !(L > 0.0)) throw InvalidParameter("c and L must be positive");
  if (d < 0) throw InvalidParameter("dimension must be nonnegative");
}

}  // namespace

BoundParams constants_ee(double c, double L, int d, double r) {
  check_constants_input(c, L, d);
  BoundParams b;
  b.p = 1;
  b.C2 = constant_K() * std::pow(c, 1.5) * L * std::sqrt(static_cast<double>(d));
  b.r = r;
  b.h0 = 1.0;
  return b;
}

BoundParams constants_ubu(double c, double L, std::optional<double> L1, int d, double r) {
  check_constants_input(c, L, d);
  const double sd = std::sqrt(static_cast<double>(d));
  BoundParams b;
  b.r = r;
  b.h0 = 2.0;
  if (L1) {
    if (!(*L1 >= 0.0)) throw InvalidParameter("L1 must be nonnegative");
    b.p = 2;
    b.C0 = constant_K0() * (2.0 + c * L);
    b.C1 = constant_K1() * std::pow(c, 1.5) * L * sd;
    b.C2 = constant_K2() *
           ((1.0 + 4.0 * std::sqrt(3.0)) * c * c * std::pow(L, 1.5) + (3.0 + std::sqrt(42.0) / 2.0) * std::pow(c, 1.5) * L +
            6.0 * c * std::sqrt(L) + std::sqrt(3.0) * c * c * *L1) *
           sd;
    return b;
  }
  const double h0 = b.h0;
  const double p_max = (3.0 + std::sqrt(5.0)) / 2.0;
  b.p = 1;
  b.C2 = std::sqrt(p_max) *
         (0.25 * (1.0 + (1.0 / 6.0 + std::sqrt(42.0) / 12.0) * h0) * std::pow(c, 1.5) * L +
          0.5 * (1.0 + h0 / 6.0) * c * std::sqrt(L) + std::sqrt(3.0) / 12.0 * h0 * (1.0 + h0 / 2.0) * c * c * std::pow(L, 1.5)) *
         sd;
  return b;
}

double mixing_bound(const BoundParams& params, double W0, double h, std::int64_t n) {
  if (!(h > 0.0)) throw InvalidParameter("step size must be positive");
  if (h > params.h0 * (1.0 + 1e-12)) throw InvalidParameter("step size exceeds h0");
  if (n < 0) throw InvalidParameter("number of steps must be nonnegative");
  if (!(W0 >= 0.0)) throw InvalidParameter("initial distance must be nonnegative");
  const double bias = params.bias(h);
  const double Rh = params.R(h);
  const double decay = std::exp(static_cast<double>(n) * std::log1p(-h * Rh));
  return decay * W0 + bias;
}

namespace {

double computed_rate(Scheme scheme, double c, double m, double L, double h) {
  const SchemeStep step = make_scheme(scheme, 2.0, c, h);
  const ContractivityReport rep = discrete_rate(default_metric(2), step, m, L);
  return rep.contractive ? rep.rate : -std::numeric_limits<double>::infinity();
}

BoundParams scheme_constants(const PlanRequest& req, double c, double L, double r) {
  return req.scheme == Scheme::EE ? constants_ee(c, L, req.d, r) : constants_ubu(c, L, req.L1, req.d, r);
}

// Largest h in (0, h0] with R_h > 0 and bias(h) <= target.
double bias_step(const BoundParams& params, double target, std::string& limiting) {
  auto ok = [&](double h) {
    if (!(params.R(h) > 0.0)) return false;
    return params.bias(h) <= target;
  };
  if (ok(params.h0)) {
    limiting = "h0";
    return params.h0;
  }
  if (params.C0 == 0.0 && params.C1 == 0.0) {
    // R_h = r, so the bias is C2 h^p / r.
    limiting = "bias";
    return std::pow(target * params.r / params.C2, 1.0 / params.p);
  }
  double lo = 0.0, hi = params.h0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  limiting = params.R(lo) < 0.5 * params.r ? "C0" : "bias";
  return lo;
}

}  // namespace

MixingPlan plan(const PlanRequest& req) {
  if (req.scheme != Scheme::EE && req.scheme != Scheme::UBU) throw InvalidParameter("plans exist for EE and UBU only");
  if (!(req.eps > 0.0)) throw InvalidParameter("eps must be positive");
  if (!(req.kappa >= 1.0) || !(req.m > 0.0)) throw InvalidParameter("need kappa >= 1 and m > 0");
  if (req.d < 1) throw InvalidParameter("dimension must be at least 1");
  if (!(req.W0 >= 0.0)) throw InvalidParameter("W0 must be nonnegative");
  if (!(req.r_bar > 0.0 && req.r_bar < 0.5)) throw InvalidParameter("r_bar must lie in (0, 1/2)");
  if (!(req.a > 0.0 && req.a < 1.0)) throw InvalidParameter("a must lie in (0, 1)");
  const double default_h0 = req.scheme == Scheme::EE ? 1.0 : 2.0;
  double h0 = req.h0.value_or(default_h0);
  if (!(h0 > 0.0) || h0 > default_h0) throw InvalidParameter("h0 must lie in (0, " + std::to_string(default_h0) + "]");

  MixingPlan out;
  out.request = req;
  out.L = req.kappa * req.m;
  out.c = 1.0 / out.L;
  double r = req.r_bar / req.kappa;

  // The local-error constants hold for h <= h0; contraction at rate r must too.
  while (computed_rate(req.scheme, out.c, req.m, out.L, h0) < r) {
    h0 /= 2.0;
    ++out.h0_halvings;
    if (out.h0_halvings > 60) throw BoundUnavailable("no step size reaches the requested contraction rate");
  }

  BoundParams params = scheme_constants(req, out.c, out.L, r);
  params.h0 = h0;
  double h = bias_step(params, req.a * req.eps, out.limiting);
  if (req.use_computed_rate) {
    for (int it = 0; it < 20; ++it) {
      ++out.rate_iterations;
      const double r_new = computed_rate(req.scheme, out.c, req.m, out.L, h);
      if (!(r_new > 0.0)) break;
      params.r = r_new;
      const double h_new = bias_step(params, req.a * req.eps, out.limiting);
      const bool settled = std::abs(h_new - h) <= 1e-10 * h;
      h = h_new;
      if (settled) break;
    }
    params.r = computed_rate(req.scheme, out.c, req.m, out.L, h);
    if (!(params.r > 0.0)) throw BoundUnavailable("scheme is not contractive at the planned step size");
  }

  out.params = params;
  out.h = h;
  out.R_h = params.R(h);
  if (!(out.R_h > 0.0)) throw BoundUnavailable("R_h <= 0 at the planned step size");
  out.bias = params.bias(h);
  const double per_step = -std::log1p(-h * out.R_h);
  const double target = (1.0 - req.a) * req.eps;
  std::int64_t n = 1;
  if (req.W0 > target) n = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::log(req.W0 / target) / per_step)));
  while (mixing_bound(params, req.W0, h, n) > req.eps) ++n;
  out.n = n;
  out.contraction = std::exp(static_cast<double>(n) * std::log1p(-h * out.R_h)) * req.W0;
  out.bound = mixing_bound(params, req.W0, h, n);
  if (req.scheme == Scheme::UBU && params.p == 2) {
    const double scale = (1.0 / std::sqrt(out.L) + req.L1.value_or(0.0) / (out.L * out.L)) * req.kappa *
                         std::sqrt(static_cast<double>(req.d));
    out.K_bar = out.bias / (h * h) / scale;
  }
  return out;
}

nlohmann::json to_json(const MixingPlan& plan) {
  const PlanRequest& q = plan.request;
  nlohmann::json inputs = {{"scheme", to_string(q.scheme)}, {"eps", q.eps},   {"kappa", q.kappa},
                           {"m", q.m},                      {"d", q.d},       {"W0", q.W0},
                           {"r_bar", q.r_bar},              {"a", q.a},       {"use_computed_rate", q.use_computed_rate}};
  inputs["h0"] = q.h0 ? nlohmann::json(*q.h0) : nlohmann::json(nullptr);
  inputs["L1"] = q.L1 ? nlohmann::json(*q.L1) : nlohmann::json(nullptr);
  nlohmann::json j = {{"inputs", inputs},
                      {"L", plan.L},
                      {"c", plan.c},
                      {"gamma", 2.0},
                      {"constants", to_json(plan.params)},
                      {"h", plan.h},
                      {"n", plan.n},
                      {"R_h", plan.R_h},
                      {"bias", plan.bias},
                      {"contraction", plan.contraction},
                      {"bound", plan.bound},
                      {"limiting", plan.limiting},
                      {"h0_halvings", plan.h0_halvings},
                      {"rate_iterations", plan.rate_iterations}};
  j["K_bar"] = plan.K_bar ? nlohmann::json(*plan.K_bar) : nlohmann::json(nullptr);
  return j;
}

RecursionCheck gronwall_recursion_check(double A, double B, double C, double z0, int n) {
  if (!(A > 0.0 && A < 1.0)) throw InvalidParameter("A must lie in (0, 1)");
  if (!(B >= 0.0) || !(C >= 0.0) || !(z0 >= 0.0)) throw InvalidParameter("B, C and z0 must be nonnegative");
  if (n < 0) throw InvalidParameter("n must be nonnegative");
  RecursionCheck out;
  out.z.reserve(n + 1);
  out.bound.reserve(n + 1);
  const double tail = std::sqrt(B / A) + C / A;
  double z = z0;
  double decay = 1.0;
  for (int k = 0; k <= n; ++k) {
    const double bound = decay * z0 + tail;
    out.z.push_back(z);
    out.bound.push_back(bound);
    if (z > bound * (1.0 + 1e-12) + 1e-300) out.holds = false;
    z = std::sqrt((1.0 - A) * (1.0 - A) * z * z + B) + C;
    decay *= 1.0 - A;
  }
  return out;
}

}  // namespace langevin
