#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "langevin/bounds.hpp"
#include "langevin/contractivity.hpp"
#include "langevin/errors.hpp"
#include "langevin/integrators.hpp"
#include "langevin/state_space.hpp"
#include "langevin/targets.hpp"
#include "langevin/wasserstein.hpp"

namespace langevin::cli {

namespace {

using json = nlohmann::json;

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Writes through a sibling temporary and a rename, so a failed run never
// leaves a partial file behind.
void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidParameter("cannot open output file: " + path);
    f << text;
    f.close();
    if (!f) throw InvalidParameter("cannot write output file: " + path);
  }
  fs::rename(tmp, target);
}

// Options shared by most commands.
struct Common {
  double m = 1.0;
  double L = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double gamma = 2.0;
  std::string format;
  std::string out;
  std::uint64_t seed = 0;
};

struct Bound {
  CLI::Option* L = nullptr;
  CLI::Option* kappa = nullptr;
  CLI::Option* seed = nullptr;
};

Bound add_interval(CLI::App* sub, Common& c) {
  Bound b;
  sub->add_option("--m", c.m, "strong convexity constant")->capture_default_str();
  b.L = sub->add_option("--L", c.L, "gradient Lipschitz constant");
  b.kappa = sub->add_option("--kappa", c.kappa, "condition number L/m");
  b.L->excludes(b.kappa);
  return b;
}

void add_io(CLI::App* sub, Common& c, const std::string& default_format) {
  sub->add_option("--format", c.format, "output format (default " + default_format + ")")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--out", c.out, "output file (stdout when omitted)");
}

double resolve_L(const Common& c, const Bound& b, double default_L) {
  if (!(c.m > 0.0)) throw InvalidParameter("m must be positive");
  double L = default_L;
  if (b.L && b.L->count()) L = c.L;
  if (b.kappa && b.kappa->count()) {
    if (!(c.kappa >= 1.0)) throw InvalidParameter("kappa must be >= 1");
    L = c.kappa * c.m;
  }
  if (!(L >= c.m) || !std::isfinite(L)) throw InvalidParameter("need m <= L");
  return L;
}

void require_seed(const Bound& b) {
  if (!b.seed || !b.seed->count()) throw InvalidParameter("--seed is required for stochastic commands");
}

// Every command sets its own default format; the option is shared.
void default_format(Common& c, const std::string& fmt) {
  if (c.format.empty()) c.format = fmt;
}

void require_format(const Common& c, const std::string& only) {
  if (c.format != only) throw InvalidParameter("this command writes " + only + " only");
}

std::vector<Scheme> parse_schemes(const std::vector<std::string>& names) {
  std::vector<Scheme> out;
  for (const auto& n : names) out.push_back(parse_scheme(n));
  return out;
}

std::vector<CChoice> parse_cs(const std::vector<std::string>& texts) {
  std::vector<CChoice> out;
  for (const auto& t : texts) out.push_back(CChoice::parse(t));
  return out;
}

void check_steps(const std::vector<double>& hs) {
  if (hs.empty()) throw InvalidParameter("need at least one step size");
  for (double h : hs)
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("step sizes must be positive");
}

// ---- targets for the stochastic commands ----

struct TargetOptions {
  std::string kind = "gaussian";
  int d = 2;
  bool rotate = false;
  std::string data;
  int rows = 20;
  double ridge = 1.0;
};

void add_target(CLI::App* sub, TargetOptions& t) {
  sub->add_option("--target", t.kind, "gaussian or logistic")
      ->check(CLI::IsMember({"gaussian", "logistic"}))
      ->capture_default_str();
  sub->add_option("--d", t.d, "dimension")->capture_default_str();
  sub->add_flag("--rotate", t.rotate, "random rotation of the gaussian precision");
  sub->add_option("--data", t.data, "ridge-logistic CSV (rows = samples, last column = +-1 label)");
  sub->add_option("--rows", t.rows, "synthetic logistic rows when --data is absent")->capture_default_str();
  sub->add_option("--ridge", t.ridge, "ridge parameter")->capture_default_str();
}

// Gaussian: spectrum evenly spaced on [m, L]. Logistic: file or synthetic data.
Target build_target(const TargetOptions& t, double m, double L, std::uint64_t seed) {
  if (t.kind == "logistic") {
    if (!t.data.empty()) return load_ridge_logistic_csv(t.data, t.ridge);
    if (t.d < 1 || t.rows < 0) throw InvalidParameter("need d >= 1 and rows >= 0");
    const LogisticData data = synthetic_logistic_data(t.rows, t.d, seed);
    return make_ridge_logistic_target(data.features, data.labels, t.ridge);
  }
  if (t.d < 1) throw InvalidParameter("dimension must be at least 1");
  if (t.d == 1 && L != m) throw InvalidParameter("a one-dimensional gaussian target needs m = L");
  Vector spectrum(t.d);
  for (int i = 0; i < t.d; ++i) spectrum[i] = t.d == 1 ? m : m + (L - m) * i / (t.d - 1);
  if (t.rotate) return make_gaussian_target(spectrum, random_rotation(t.d, seed));
  return make_gaussian_target(spectrum);
}

json report_json(const ContractivityReport& r) {
  json j = {{"continuous", r.continuous}, {"contractive", r.contractive}, {"rate", r.rate},
            {"H", r.H},                   {"grid_points", r.grid_points}, {"refinements", r.refinements},
            {"m", r.m},                   {"L", r.L}};
  if (r.continuous) {
    j["lambda"] = r.lambda;
  } else {
    j["h"] = r.h;
    j["rho"] = r.rho;
    j["one_minus_rho"] = r.one_minus_rho;
  }
  return j;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contraction, bias and mixing analysis for kinetic Langevin samplers"};
  app.require_subcommand(1);
  // -h is taken by the step size option.
  app.set_help_flag("--help", "print help and exit");
  app.set_help_all_flag("--help-all", "print help for every command and exit");

  Common common;
  std::function<std::string()> action;

  // table1
  std::vector<double> t1_kappa{1e9};
  std::vector<double> t1_h{2, 1, 0.5, 0.25};
  std::vector<std::string> t1_c{"1/L", "2/(L+m)", "3/(L+m)"};
  std::vector<std::string> t1_schemes{"ee", "ubu"};
  {
    auto* sub = app.add_subcommand("table1", "per-step contraction rates (1 - rho_h^{1/2})/h");
    sub->add_option("--kappa", t1_kappa, "condition numbers")->delimiter(',')->capture_default_str();
    sub->add_option("--m", common.m, "strong convexity constant")->capture_default_str();
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    sub->add_option("--h", t1_h, "step sizes")->delimiter(',')->capture_default_str();
    sub->add_option("--c", t1_c, "force scales, e.g. 1/L,2/(L+m),0.5")->delimiter(',')->capture_default_str();
    sub->add_option("--schemes", t1_schemes, "schemes")->delimiter(',')->capture_default_str();
    add_io(sub, common, "csv");
    sub->callback([&] {
      action = [&] {
        default_format(common, "csv");
        check_steps(t1_h);
        const auto cs = parse_cs(t1_c);
        const auto schemes = parse_schemes(t1_schemes);
        if (!(common.m > 0.0)) throw InvalidParameter("m must be positive");
        for (double k : t1_kappa)
          if (!(k >= 1.0)) throw InvalidParameter("kappa must be >= 1");
        const auto tables = table1(t1_kappa, cs, t1_h, common.m, common.gamma, schemes);
        if (common.format == "json") {
          json j = json::array();
          for (const auto& t : tables) {
            json cells = json::array();
            for (const auto& cell : t.cells)
              cells.push_back({{"h", cell.h},
                               {"c", cell.c.label()},
                               {"scheme", to_string(cell.scheme)},
                               {"value", cell.report.contractive ? format_mantissa_exponent(cell.report.rate) : "***"},
                               {"report", report_json(cell.report)}});
            j.push_back({{"kappa", t.kappa}, {"m", t.m}, {"gamma", t.gamma}, {"cells", cells}});
          }
          return dump(j);
        }
        std::ostringstream os;
        os << "kappa,h";
        for (const char* suffix : {"", "_sci"})
          for (const auto& c : cs)
            for (Scheme s : schemes) os << ',' << to_string(s) << '[' << c.label() << ']' << suffix;
        os << '\n';
        for (const auto& t : tables) {
          for (std::size_t ih = 0; ih < t.h.size(); ++ih) {
            os << num(t.kappa) << ',' << num(t.h[ih]);
            for (int sci = 0; sci < 2; ++sci)
              for (std::size_t ic = 0; ic < t.c.size(); ++ic)
                for (std::size_t is = 0; is < t.schemes.size(); ++is) {
                  const auto& r = t.at(ih, ic, is).report;
                  os << ',';
                  if (!r.contractive)
                    os << "***";
                  else
                    os << (sci ? format_scientific(r.rate) : format_mantissa_exponent(r.rate));
                }
            os << '\n';
          }
        }
        return os.str();
      };
    });
  }

  // eigencurves
  std::string ec_scheme = "ubu";
  std::string ec_c = "3/(L+m)";
  std::vector<double> ec_h{2, 1, 0.5, 0.25};
  int ec_grid = 181;
  Bound ec_bound;
  {
    auto* sub = app.add_subcommand("eigencurves", "discrete and continuous eigenvalue curves over H in [m, L]");
    sub->add_option("--scheme", ec_scheme, "scheme")->capture_default_str();
    ec_bound = add_interval(sub, common);
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    sub->add_option("--c", ec_c, "force scale")->capture_default_str();
    sub->add_option("--h", ec_h, "step sizes")->delimiter(',')->capture_default_str();
    sub->add_option("--grid", ec_grid, "number of H values")->capture_default_str();
    add_io(sub, common, "csv");
    sub->callback([&] {
      action = [&] {
        default_format(common, "csv");
        const double L = resolve_L(common, ec_bound, 10.0);
        check_steps(ec_h);
        const Scheme scheme = parse_scheme(ec_scheme);
        const ForceScale c = CChoice::parse(ec_c).resolve(common.m, L);
        std::vector<EigencurveTable> tables;
        for (double h : ec_h) tables.push_back(eigencurves(make_scheme(scheme, common.gamma, c, h), common.m, L, ec_grid));
        if (common.format == "json") {
          json j = json::array();
          for (const auto& t : tables) {
            json rows = json::array();
            for (const auto& r : t.rows)
              rows.push_back({{"H", r.H},
                              {"lambda_plus", r.lambda_plus},
                              {"lambda_minus", std::isfinite(r.lambda_minus) ? json(r.lambda_minus) : json(nullptr)},
                              {"tilde_plus", r.tilde_plus},
                              {"tilde_minus", std::isfinite(r.tilde_minus) ? json(r.tilde_minus) : json(nullptr)},
                              {"flag", r.flag()}});
            j.push_back({{"scheme", to_string(t.scheme)},
                         {"h", t.h},
                         {"max_error", t.max_error()},
                         {"any_negative_minus", t.any_negative_minus()},
                         {"rows", rows}});
          }
          return dump(j);
        }
        std::ostringstream os;
        os << "h,H,lambda_plus,lambda_minus,tilde_plus,tilde_minus,flag\n";
        for (const auto& t : tables)
          for (const auto& r : t.rows)
            os << num(t.h) << ',' << num(r.H) << ',' << num(r.lambda_plus) << ','
               << (std::isfinite(r.lambda_minus) ? num(r.lambda_minus) : "") << ',' << num(r.tilde_plus) << ','
               << (std::isfinite(r.tilde_minus) ? num(r.tilde_minus) : "") << ',' << r.flag() << '\n';
        return os.str();
      };
    });
  }

  // plan
  PlanRequest pl;
  std::string pl_scheme;
  double pl_h0 = 0.0, pl_L1 = 0.0;
  CLI::Option *pl_h0_opt = nullptr, *pl_L1_opt = nullptr;
  Bound pl_bound;
  {
    auto* sub = app.add_subcommand("plan", "step size and step count meeting a W_P accuracy target");
    sub->add_option("--scheme", pl_scheme, "ee or ubu")->required();
    sub->add_option("--eps", pl.eps, "target accuracy")->required();
    pl_bound = add_interval(sub, common);
    sub->add_option("--d", pl.d, "dimension")->capture_default_str();
    sub->add_option("--w0", pl.W0, "initial W_P distance")->capture_default_str();
    sub->add_option("--r-bar", pl.r_bar, "rate factor, r = r_bar / kappa")->capture_default_str();
    pl_h0_opt = sub->add_option("--h0", pl_h0, "largest admissible step (default 1 for EE, 2 for UBU)");
    pl_L1_opt = sub->add_option("--L1", pl_L1, "third-derivative bound; UBU is treated as order one without it");
    sub->add_option("--a", pl.a, "share of eps given to the bias")->capture_default_str();
    sub->add_flag("--computed-rate", pl.use_computed_rate, "use the computed discrete rate instead of r_bar/kappa");
    add_io(sub, common, "json");
    sub->callback([&] {
      action = [&] {
        default_format(common, "json");
        require_format(common, "json");
        const double L = resolve_L(common, pl_bound, 100.0 * common.m);
        pl.scheme = parse_scheme(pl_scheme);
        pl.m = common.m;
        pl.kappa = L / common.m;
        if (pl_h0_opt->count()) pl.h0 = pl_h0;
        if (pl_L1_opt->count()) pl.L1 = pl_L1;
        return dump(to_json(plan(pl)));
      };
    });
  }

  // bound
  std::string bd_scheme, bd_c = "1/L";
  double bd_L1 = 0.0, bd_r = 0.0, bd_rbar = 0.45, bd_w0 = 1.0, bd_h = 0.1;
  int bd_d = 1;
  std::int64_t bd_n = 1;
  CLI::Option *bd_L1_opt = nullptr, *bd_r_opt = nullptr;
  Bound bd_bound;
  {
    auto* sub = app.add_subcommand("bound", "evaluate the non-asymptotic W_P bound for given (h, n)");
    sub->add_option("--scheme", bd_scheme, "ee or ubu")->required();
    bd_bound = add_interval(sub, common);
    sub->add_option("--c", bd_c, "force scale")->capture_default_str();
    bd_L1_opt = sub->add_option("--L1", bd_L1, "third-derivative bound (UBU)");
    sub->add_option("--d", bd_d, "dimension")->capture_default_str();
    bd_r_opt = sub->add_option("--r", bd_r, "contraction rate (default r_bar / kappa)");
    sub->add_option("--r-bar", bd_rbar, "rate factor")->capture_default_str();
    sub->add_option("--w0", bd_w0, "initial W_P distance")->capture_default_str();
    sub->add_option("--h", bd_h, "step size")->capture_default_str();
    sub->add_option("--n", bd_n, "number of steps")->capture_default_str();
    add_io(sub, common, "json");
    sub->callback([&] {
      action = [&] {
        default_format(common, "json");
        require_format(common, "json");
        const double L = resolve_L(common, bd_bound, 100.0 * common.m);
        const Scheme scheme = parse_scheme(bd_scheme);
        const double c = CChoice::parse(bd_c).resolve(common.m, L).value;
        const double r = bd_r_opt->count() ? bd_r : bd_rbar * common.m / L;
        BoundParams params;
        if (scheme == Scheme::EE)
          params = constants_ee(c, L, bd_d, r);
        else if (scheme == Scheme::UBU)
          params = constants_ubu(c, L, bd_L1_opt->count() ? std::optional<double>(bd_L1) : std::nullopt, bd_d, r);
        else
          throw InvalidParameter("bounds exist for EE and UBU only");
        const double value = mixing_bound(params, bd_w0, bd_h, bd_n);
        json j = {{"inputs",
                   {{"scheme", to_string(scheme)}, {"m", common.m}, {"L", L}, {"c", c}, {"d", bd_d}, {"W0", bd_w0},
                    {"h", bd_h}, {"n", bd_n}}},
                  {"constants", to_json(params)},
                  {"R_h", params.R(bd_h)},
                  {"bias", params.bias(bd_h)},
                  {"bound", value}};
        return dump(j);
      };
    });
  }

  // check-model
  std::string cm_model = "underdamped", cm_c = "1", cm_from;
  double cm_tol = 1e-12;
  Bound cm_bound;
  {
    auto* sub = app.add_subcommand("check-model", "invariance relations of a state-space model");
    sub->add_option("--model", cm_model, "underdamped or overdamped")->capture_default_str();
    sub->add_option("--c", cm_c, "force scale")->capture_default_str();
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    cm_bound = add_interval(sub, common);
    sub->add_option("--from", cm_from, "JSON model description (overrides --model)");
    sub->add_option("--tol", cm_tol, "residual tolerance")->capture_default_str();
    add_io(sub, common, "json");
    sub->callback([&] {
      action = [&] {
        default_format(common, "json");
        require_format(common, "json");
        HatModel model;
        if (!cm_from.empty()) {
          std::ifstream in(cm_from);
          if (!in) throw InvalidParameter("cannot open model file: " + cm_from);
          json j;
          try {
            in >> j;
          } catch (const json::exception& e) {
            throw InvalidParameter(std::string("malformed model file: ") + e.what());
          }
          model = model_from_json(j);
        } else {
          const double L = resolve_L(common, cm_bound, common.m);
          model = make_model(parse_model_kind(cm_model), common.gamma, CChoice::parse(cm_c).resolve(common.m, L));
        }
        return dump({{"model", to_json(model)}, {"report", to_json(check_invariance_relations(model, cm_tol))}});
      };
    });
  }

  // rate
  bool rt_cont = false, rt_disc = false;
  std::string rt_model = "underdamped", rt_scheme = "ubu", rt_c = "1/L";
  double rt_h = 0.5;
  std::vector<double> rt_P;
  Bound rt_bound;
  {
    auto* sub = app.add_subcommand("rate", "continuous or discrete contraction rate");
    auto* oc = sub->add_flag("--continuous", rt_cont, "SDE rate lambda");
    auto* od = sub->add_flag("--discrete", rt_disc, "per-step rho_h");
    oc->excludes(od);
    sub->add_option("--model", rt_model, "underdamped or overdamped (continuous)")->capture_default_str();
    sub->add_option("--scheme", rt_scheme, "scheme (discrete)")->capture_default_str();
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    sub->add_option("--c", rt_c, "force scale")->capture_default_str();
    sub->add_option("--h", rt_h, "step size (discrete)")->capture_default_str();
    sub->add_option("--P", rt_P, "metric entries, row-major (1 or 4 values)")->delimiter(',');
    rt_bound = add_interval(sub, common);
    add_io(sub, common, "json");
    sub->callback([&] {
      action = [&] {
        default_format(common, "json");
        require_format(common, "json");
        if (rt_cont == rt_disc) throw InvalidParameter("choose exactly one of --continuous and --discrete");
        const double L = resolve_L(common, rt_bound, 10.0 * common.m);
        const ForceScale c = CChoice::parse(rt_c).resolve(common.m, L);
        auto metric_for = [&](int n) {
          if (rt_P.empty()) return default_metric(n);
          if (rt_P.size() != static_cast<std::size_t>(n * n)) throw InvalidMetric("--P needs " + std::to_string(n * n) + " entries");
          Eigen::MatrixXd P(n, n);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) P(i, j) = rt_P[i * n + j];
          return make_metric(P);
        };
        json j;
        if (rt_cont) {
          const HatModel model = make_model(parse_model_kind(rt_model), common.gamma, c);
          j = report_json(continuous_rate(metric_for(model.n_hat()), model, common.m, L));
        } else {
          const SchemeStep step = make_scheme(parse_scheme(rt_scheme), common.gamma, c, rt_h);
          j = report_json(discrete_rate(metric_for(step.n_hat()), step, common.m, L));
          j["scheme"] = to_string(step.scheme);
        }
        j["c"] = c.value;
        j["gamma"] = common.gamma;
        return dump(j);
      };
    });
  }

  // optimal-p
  Bound op_bound;
  {
    auto* sub = app.add_subcommand("optimal-p", "optimal metric and force scale for the underdamped SDE");
    op_bound = add_interval(sub, common);
    add_io(sub, common, "json");
    sub->callback([&] {
      action = [&] {
        default_format(common, "json");
        require_format(common, "json");
        const double L = resolve_L(common, op_bound, 10.0 * common.m);
        const OptimalP o = optimal_underdamped(common.m, L);
        return dump({{"m", common.m},
                     {"L", L},
                     {"l21", o.l21},
                     {"l22", o.l22},
                     {"c", o.c},
                     {"lambda", o.lambda},
                     {"lambda_check", o.lambda_check},
                     {"objective", o.objective},
                     {"simplex_iterations", o.simplex_iterations},
                     {"newton_iterations", o.newton_iterations},
                     {"newton_converged", o.newton_converged}});
      };
    });
  }

  // order-test
  std::vector<std::string> ot_schemes{"ee", "ubu"};
  std::vector<double> ot_h{0.4, 0.2, 0.1, 0.05};
  std::string ot_c = "1/L";
  int ot_paths = 2000, ot_refine = 16;
  double ot_T = 2.0;
  TargetOptions ot_target;
  Bound ot_bound;
  {
    auto* sub = app.add_subcommand("order-test", "empirical strong order with shared Brownian paths");
    sub->add_option("--schemes", ot_schemes, "schemes")->delimiter(',')->capture_default_str();
    add_target(sub, ot_target);
    ot_bound = add_interval(sub, common);
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    sub->add_option("--c", ot_c, "force scale")->capture_default_str();
    sub->add_option("--h", ot_h, "step sizes (nested by factors of two)")->delimiter(',')->capture_default_str();
    sub->add_option("--paths", ot_paths, "number of Brownian paths")->capture_default_str();
    sub->add_option("--T", ot_T, "time horizon")->capture_default_str();
    sub->add_option("--refinement", ot_refine, "reference step is min(h) / refinement")->capture_default_str();
    ot_bound.seed = sub->add_option("--seed", common.seed, "random seed");
    add_io(sub, common, "csv");
    sub->callback([&] {
      action = [&] {
        default_format(common, "csv");
        require_seed(ot_bound);
        const double L = resolve_L(common, ot_bound, 10.0 * common.m);
        const Target target = build_target(ot_target, common.m, L, common.seed);
        const ForceScale c = CChoice::parse(ot_c).resolve(target.m(), target.L());
        StrongOrderOptions options;
        options.refinement = ot_refine;
        std::vector<StrongOrderReport> reports;
        for (Scheme s : parse_schemes(ot_schemes))
          reports.push_back(strong_order_test(s, common.gamma, c, target, ot_h, ot_paths, ot_T, common.seed, options));
        if (common.format == "json") {
          json j = json::array();
          for (const auto& r : reports)
            j.push_back({{"scheme", to_string(r.scheme)}, {"h", r.h}, {"rms_error", r.rms_error},
                         {"h_reference", r.h_reference}, {"slope", r.slope}, {"intercept", r.intercept},
                         {"paths", r.paths}, {"horizon", r.horizon}, {"target", to_string(target.kind())},
                         {"m", target.m()}, {"L", target.L()}, {"c", c.value}});
          return dump(j);
        }
        std::ostringstream os;
        os << "scheme,h,rms_error,h_reference,slope\n";
        for (const auto& r : reports)
          for (std::size_t i = 0; i < r.h.size(); ++i)
            os << to_string(r.scheme) << ',' << num(r.h[i]) << ',' << num(r.rms_error[i]) << ',' << num(r.h_reference)
               << ',' << num(r.slope) << '\n';
        return os.str();
      };
    });
  }

  // bias-scan
  std::vector<std::string> bs_schemes{"ee", "ubu"};
  std::vector<double> bs_h{0.2, 0.1, 0.05, 0.025};
  std::string bs_c = "1/L";
  int bs_d = 10;
  Bound bs_bound;
  {
    auto* sub = app.add_subcommand("bias-scan", "exact invariant-law bias on a gaussian target");
    sub->add_option("--schemes", bs_schemes, "schemes (em uses the overdamped model)")->delimiter(',')->capture_default_str();
    sub->add_option("--d", bs_d, "dimension")->capture_default_str();
    bs_bound = add_interval(sub, common);
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    sub->add_option("--c", bs_c, "force scale")->capture_default_str();
    sub->add_option("--h", bs_h, "step sizes")->delimiter(',')->capture_default_str();
    bs_bound.seed = sub->add_option("--seed", common.seed, "seed of the random rotation");
    add_io(sub, common, "csv");
    sub->callback([&] {
      action = [&] {
        default_format(common, "csv");
        require_seed(bs_bound);
        check_steps(bs_h);
        const double L = resolve_L(common, bs_bound, 10.0 * common.m);
        TargetOptions t;
        t.d = bs_d;
        t.rotate = true;
        const Target target = build_target(t, common.m, L, common.seed);
        const Matrix& Q = *target.precision();
        const ForceScale c = CChoice::parse(bs_c).resolve(common.m, L);
        json j = json::array();
        std::ostringstream os;
        os << "scheme,h,w2_full,w2_x,wp_full\n";
        for (Scheme s : parse_schemes(bs_schemes)) {
          const bool kinetic = s != Scheme::EM;
          const HatModel model = make_model(kinetic ? ModelKind::underdamped : ModelKind::overdamped, common.gamma, c);
          const GaussianLaw exact = sde_invariant(model, Q);
          const MetricP P = default_metric(model.n_hat());
          std::vector<double> full, xm, wp;
          for (double h : bs_h) {
            const GaussianLaw law = numerical_invariant(make_scheme(s, common.gamma, c, h), Q);
            full.push_back(gaussian_w2(law, exact).value);
            xm.push_back(kinetic ? gaussian_w2(x_marginal(law), x_marginal(exact)).value : full.back());
            wp.push_back(gaussian_w2(law, exact, P).value);
            os << to_string(s) << ',' << num(h) << ',' << num(full.back()) << ',' << num(xm.back()) << ','
               << num(wp.back()) << '\n';
          }
          json entry = {{"scheme", to_string(s)}, {"h", bs_h}, {"w2_full", full}, {"w2_x", xm}, {"wp_full", wp}};
          if (bs_h.size() >= 2) {
            entry["slope_full"] = loglog_fit(bs_h, full).first;
            entry["slope_x"] = loglog_fit(bs_h, xm).first;
          }
          j.push_back(entry);
        }
        return common.format == "json" ? dump(j) : os.str();
      };
    });
  }

  // sample
  std::string sm_scheme = "ubu", sm_c = "1/L";
  double sm_h = 0.1;
  std::int64_t sm_steps = 1000, sm_thin = 0;
  int sm_paths = 100;
  TargetOptions sm_target;
  Bound sm_bound;
  {
    auto* sub = app.add_subcommand("sample", "run an ensemble of independent chains");
    sub->add_option("--scheme", sm_scheme, "scheme")->capture_default_str();
    add_target(sub, sm_target);
    sm_bound = add_interval(sub, common);
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    sub->add_option("--c", sm_c, "force scale")->capture_default_str();
    sub->add_option("--h", sm_h, "step size")->capture_default_str();
    sub->add_option("--steps", sm_steps, "steps per chain")->capture_default_str();
    sub->add_option("--paths", sm_paths, "number of chains")->capture_default_str();
    sub->add_option("--thin", sm_thin, "also record every thin-th step (0: final only)")->capture_default_str();
    sm_bound.seed = sub->add_option("--seed", common.seed, "random seed");
    add_io(sub, common, "csv");
    sub->callback([&] {
      action = [&] {
        default_format(common, "csv");
        require_seed(sm_bound);
        require_format(common, "csv");
        if (sm_steps < 0 || sm_paths < 1 || sm_thin < 0) throw InvalidParameter("need steps >= 0, paths >= 1, thin >= 0");
        const double L = resolve_L(common, sm_bound, 10.0 * common.m);
        const Target target = build_target(sm_target, common.m, L, common.seed);
        const ForceScale c = CChoice::parse(sm_c).resolve(target.m(), target.L());
        const SchemeStep step = make_scheme(parse_scheme(sm_scheme), common.gamma, c, sm_h);
        const bool kinetic = step.scheme != Scheme::EM;
        const int d = target.dim();
        SimulationOptions options;
        options.thin = sm_thin;
        const Ensemble e = simulate(step, target, gaussian_initial(d, kinetic, c.value, 1.0 / target.L()), sm_steps,
                                    sm_paths, common.seed, options);
        std::ostringstream os;
        if (sm_thin > 0) os << "step,";
        os << "chain";
        if (kinetic)
          for (int i = 0; i < d; ++i) os << ",v" << i;
        for (int i = 0; i < d; ++i) os << ",x" << i;
        os << '\n';
        auto rows = [&](const std::vector<ChainState>& chains, std::int64_t stepno) {
          for (std::size_t k = 0; k < chains.size(); ++k) {
            if (sm_thin > 0) os << stepno << ',';
            os << k;
            for (Eigen::Index i = 0; i < chains[k].v.size(); ++i) os << ',' << num(chains[k].v[i]);
            for (Eigen::Index i = 0; i < chains[k].x.size(); ++i) os << ',' << num(chains[k].x[i]);
            os << '\n';
          }
        };
        if (sm_thin > 0)
          for (std::size_t s = 0; s < e.snapshots.size(); ++s) rows(e.snapshots[s], e.snapshot_steps[s]);
        else
          rows(e.chains, sm_steps);
        return os.str();
      };
    });
  }

  // couple
  std::string cp_scheme = "ubu", cp_c = "1/L";
  double cp_h = 0.5;
  std::int64_t cp_steps = 10000;
  int cp_d = 10;
  Bound cp_bound;
  {
    auto* sub = app.add_subcommand("couple", "synchronously coupled chains on a gaussian target");
    sub->add_option("--scheme", cp_scheme, "scheme")->capture_default_str();
    cp_bound = add_interval(sub, common);
    sub->add_option("--gamma", common.gamma, "friction")->capture_default_str();
    sub->add_option("--c", cp_c, "force scale")->capture_default_str();
    sub->add_option("--d", cp_d, "dimension")->capture_default_str();
    sub->add_option("--h", cp_h, "step size")->capture_default_str();
    sub->add_option("--steps", cp_steps, "number of steps")->capture_default_str();
    cp_bound.seed = sub->add_option("--seed", common.seed, "random seed");
    add_io(sub, common, "json");
    sub->callback([&] {
      action = [&] {
        default_format(common, "json");
        require_seed(cp_bound);
        const double L = resolve_L(common, cp_bound, 100.0 * common.m);
        TargetOptions t;
        t.d = cp_d;
        t.rotate = true;
        const Target target = build_target(t, common.m, L, common.seed);
        const ForceScale c = CChoice::parse(cp_c).resolve(common.m, L);
        const SchemeStep step = make_scheme(parse_scheme(cp_scheme), common.gamma, c, cp_h);
        const CouplingReport r = coupled_contraction(step, target, default_metric(step.n_hat()), cp_steps, common.seed);
        if (common.format == "csv") {
          std::ostringstream os;
          os << "step,ratio\n";
          for (std::size_t k = 0; k < r.ratios.size(); ++k) os << k + 1 << ',' << num(r.ratios[k]) << '\n';
          return os.str();
        }
        return dump({{"scheme", to_string(step.scheme)},
                     {"h", cp_h},
                     {"m", common.m},
                     {"L", L},
                     {"c", c.value},
                     {"d", cp_d},
                     {"steps", static_cast<std::int64_t>(r.ratios.size())},
                     {"contractive", r.contractive},
                     {"rho_sqrt", r.rho_sqrt},
                     {"max_ratio", r.max_ratio},
                     {"within_rate", r.max_ratio <= r.rho_sqrt + 1e-12}});
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    const std::string text = action();
    write_output(text, common.out, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace langevin::cli
