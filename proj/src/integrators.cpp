#include "langevin/integrators.hpp"

#include <algorithm>
#include <cmath>

#include "langevin/errors.hpp"
#include "langevin/kernels.hpp"

namespace langevin {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::EM: return "EM";
    case Scheme::EE: return "EE";
    case Scheme::UBU: return "UBU";
    case Scheme::BUB: return "BUB";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::toupper(ch); });
  if (t == "EM") return Scheme::EM;
  if (t == "EE") return Scheme::EE;
  if (t == "UBU") return Scheme::UBU;
  if (t == "BUB") return Scheme::BUB;
  throw InvalidParameter("unknown scheme: " + text);
}

SchemeStep make_scheme(Scheme scheme, double gamma, ForceScale c, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("step size h must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParameter("friction gamma must be positive");
  if (!(c.value >= 0.0) || !std::isfinite(c.value)) throw InvalidParameter("force scale c must be nonnegative");
  SchemeStep s;
  s.scheme = scheme;
  s.gamma = gamma;
  s.c = c;
  s.h = h;
  s.E = kernel_E(gamma, h);
  s.Em1 = kernel_Em1(gamma, h);
  s.F = kernel_F(gamma, h);
  s.G = kernel_G(gamma, h);
  s.E_half = kernel_E(gamma, h / 2);
  s.F_half = kernel_F(gamma, h / 2);
  s.G_half = kernel_G(gamma, h / 2);
  const double cv = c.value;
  s.noise_scale = scheme == Scheme::EM ? std::sqrt(2.0 * cv) : std::sqrt(2.0 * gamma * cv);
  switch (scheme) {
    case Scheme::EM:
      s.A_h = Eigen::MatrixXd::Ones(1, 1);
      s.B_h = Eigen::MatrixXd::Constant(1, 1, -h * cv);
      s.C_h = Eigen::MatrixXd::Ones(1, 1);
      break;
    case Scheme::EE:
      s.A_h = Eigen::MatrixXd{{s.E, 0.0}, {s.F, 1.0}};
      s.B_h = Eigen::MatrixXd{{-cv * s.F}, {-cv * s.G}};
      s.C_h = Eigen::MatrixXd{{0.0, 1.0}};
      break;
    case Scheme::UBU:
      s.A_h = Eigen::MatrixXd{{s.E, 0.0}, {s.F, 1.0}};
      s.B_h = Eigen::MatrixXd{{-h * cv * s.E_half}, {-h * cv * s.F_half}};
      s.C_h = Eigen::MatrixXd{{s.F_half, 1.0}};
      break;
    case Scheme::BUB:
      break;
  }
  return s;
}

Eigen::Matrix2d noise_block_covariance(double gamma, double delta) {
  const double F = kernel_F(gamma, delta);
  Eigen::Matrix2d cov;
  cov << delta, F, F, noise_var_IE(gamma, delta);
  return cov;
}

NoiseBlock sample_noise_block(double gamma, double delta, int d, GaussianStream& rng) {
  if (!(delta > 0.0)) throw InvalidParameter("noise interval must be positive");
  if (!(gamma > 0.0)) throw InvalidParameter("friction gamma must be positive");
  const double root_delta = std::sqrt(delta);
  const double l21 = kernel_F(gamma, delta) / root_delta;
  const double l22 = std::sqrt(noise_conditional_var_IE(gamma, delta));
  // (dW - I_E)/gamma expanded: the z1 weight (delta - F)/(gamma sqrt(delta))
  // equals G(delta)/sqrt(delta).
  const double f21 = kernel_G(gamma, delta) / root_delta;
  const double f22 = -l22 / gamma;

  NoiseBlock b;
  b.gamma = gamma;
  b.delta = delta;
  b.dW.resize(d);
  b.IE.resize(d);
  b.IF.resize(d);
  for (int i = 0; i < d; ++i) {
    const double z1 = rng();
    const double z2 = rng();
    b.dW[i] = root_delta * z1;
    b.IE[i] = l21 * z1 + l22 * z2;
    b.IF[i] = f21 * z1 + f22 * z2;
  }
  return b;
}

NoiseBlock noise_block_from_pair(double gamma, double delta, const Vector& dW, const Vector& IE) {
  if (dW.size() != IE.size()) throw DimensionMismatch("dW and I_E sizes differ");
  NoiseBlock b;
  b.gamma = gamma;
  b.delta = delta;
  b.dW = dW;
  b.IE = IE;
  b.IF = (dW - IE) / gamma;
  return b;
}

NoiseBlock zero_noise_block(double gamma, double delta, int d) {
  return noise_block_from_pair(gamma, delta, Vector::Zero(d), Vector::Zero(d));
}

NoisePair sample_noise_pair(const SchemeStep& scheme, int d, GaussianStream& rng) {
  NoisePair p;
  p.first = sample_noise_block(scheme.gamma, scheme.h / 2, d, rng);
  p.second = sample_noise_block(scheme.gamma, scheme.h / 2, d, rng);
  return p;
}

NoisePair zero_noise_pair(const SchemeStep& scheme, int d) {
  return {zero_noise_block(scheme.gamma, scheme.h / 2, d), zero_noise_block(scheme.gamma, scheme.h / 2, d)};
}

namespace {

NoiseBlock aggregate_range(const NoiseBlock* first, int k) {
  const double gamma = first->gamma;
  const double delta = first->delta;
  const int d = first->dim();
  NoiseBlock out;
  out.gamma = gamma;
  out.delta = delta * k;
  out.dW = Vector::Zero(d);
  out.IE = Vector::Zero(d);
  out.IF = Vector::Zero(d);
  // Block j ends r_j = (k-1-j) delta before the coarse end:
  //   int E(T-s) dW = E(r_j) I_E^j,   int F(T-s) dW = I_F^j + F(r_j) I_E^j.
  const double Ed = kernel_E(gamma, delta);
  const double Fd = kernel_F(gamma, delta);
  double E_r = 1.0;
  double F_r = 0.0;
  for (int j = k - 1; j >= 0; --j) {
    const NoiseBlock& b = first[j];
    if (b.dim() != d) throw DimensionMismatch("noise blocks differ in dimension");
    if (std::abs(b.delta - delta) > 1e-12 * delta || b.gamma != gamma)
      throw InvalidParameter("aggregated noise blocks must share gamma and interval length");
    out.dW += b.dW;
    out.IE += E_r * b.IE;
    out.IF += b.IF + F_r * b.IE;
    // Step the remaining time back by one block: F(r+delta) = F(delta) + E(delta) F(r).
    F_r = Fd + Ed * F_r;
    E_r *= Ed;
  }
  return out;
}

// Two half blocks to one full-step block.
void combine_pair(const SchemeStep& s, const NoisePair& p, Vector& dW, Vector& IE, Vector& IF) {
  dW = p.first.dW + p.second.dW;
  IE = s.E_half * p.first.IE + p.second.IE;
  IF = p.first.IF + s.F_half * p.first.IE + p.second.IF;
}

void check_noise(const NoisePair& p, int d) {
  if (p.first.dim() != d || p.second.dim() != d) throw DimensionMismatch("noise dimension does not match target");
}

}  // namespace

NoiseBlock aggregate_noise(const std::vector<NoiseBlock>& fine) {
  if (fine.empty()) throw InvalidParameter("nothing to aggregate");
  return aggregate_range(fine.data(), static_cast<int>(fine.size()));
}

Vector ChainState::xi() const {
  Vector out(v.size() + x.size());
  out << v, x;
  return out;
}

ChainState make_state(const Vector& v, const Vector& x) {
  ChainState s;
  s.v = v;
  s.x = x;
  return s;
}

ChainState state_from_xi(const Vector& xi, int n_hat) {
  if (n_hat == 1) return make_state(Vector(), xi);
  const auto d = xi.size() / 2;
  if (2 * d != xi.size()) throw DimensionMismatch("kinetic state must have even length");
  return make_state(xi.head(d), xi.tail(d));
}

void advance(const SchemeStep& s, const Target& target, ChainState& st, const NoisePair& noise) {
  const int d = target.dim();
  if (st.x.size() != d) throw DimensionMismatch("state dimension does not match target");
  if (s.scheme != Scheme::EM && st.v.size() != d) throw DimensionMismatch("kinetic state needs v of size d");
  check_noise(noise, d);
  const double c = s.c.value;
  const double sig = s.noise_scale;
  Vector g(d);

  switch (s.scheme) {
    case Scheme::EM: {
      target.gradient(st.x, g);
      st.x += -s.h * c * g + sig * (noise.first.dW + noise.second.dW);
      break;
    }
    case Scheme::EE: {
      Vector dW, IE, IF;
      combine_pair(s, noise, dW, IE, IF);
      target.gradient(st.x, g);
      const Vector v0 = st.v;
      st.v = s.E * v0 - (s.F * c) * g + sig * IE;
      st.x += s.F * v0 - (s.G * c) * g + sig * IF;
      break;
    }
    case Scheme::UBU: {
      // U(h/2), B(h), U(h/2); the kick is evaluated at y_n.
      const Vector v0 = st.v;
      st.v = s.E_half * v0 + sig * noise.first.IE;
      st.x += s.F_half * v0 + sig * noise.first.IF;
      target.gradient(st.x, g);
      st.v -= (s.h * c) * g;
      const Vector v1 = st.v;
      st.v = s.E_half * v1 + sig * noise.second.IE;
      st.x += s.F_half * v1 + sig * noise.second.IF;
      break;
    }
    case Scheme::BUB: {
      Vector dW, IE, IF;
      combine_pair(s, noise, dW, IE, IF);
      if (!st.grad_valid) {
        st.cached_grad.resize(d);
        target.gradient(st.x, st.cached_grad);
      }
      st.v -= (0.5 * s.h * c) * st.cached_grad;
      const Vector v0 = st.v;
      st.v = s.E * v0 + sig * IE;
      st.x += s.F * v0 + sig * IF;
      target.gradient(st.x, g);
      st.v -= (0.5 * s.h * c) * g;
      st.cached_grad = g;
      st.grad_valid = true;
      break;
    }
  }
  ++st.n;
}

ChainState step(const SchemeStep& scheme, const Target& target, const ChainState& state,
                const NoisePair& noise) {
  ChainState out = state;
  advance(scheme, target, out, noise);
  return out;
}

std::pair<ChainState, ChainState> coupled_step(const SchemeStep& scheme, const Target& target,
                                               const ChainState& s1, const ChainState& s2,
                                               const NoisePair& shared) {
  if (s1.x.size() != s2.x.size() || s1.v.size() != s2.v.size())
    throw DimensionMismatch("coupled states differ in dimension");
  return {step(scheme, target, s1, shared), step(scheme, target, s2, shared)};
}

InitialSampler fixed_initial(const ChainState& state) {
  return [state](std::uint64_t, GaussianStream&) { return state; };
}

InitialSampler gaussian_initial(int d, bool kinetic, double v_var, double x_var) {
  return [=](std::uint64_t, GaussianStream& rng) {
    ChainState s;
    if (kinetic) {
      s.v.resize(d);
      for (int i = 0; i < d; ++i) s.v[i] = std::sqrt(v_var) * rng();
    }
    s.x.resize(d);
    for (int i = 0; i < d; ++i) s.x[i] = std::sqrt(x_var) * rng();
    return s;
  };
}

namespace {

Ensemble run_ensemble(const SchemeStep& scheme, const Target& target, const InitialSampler& initial,
                      std::int64_t n_steps, int n_chains, std::uint64_t seed, SimulationOptions options) {
  if (n_steps < 0) throw InvalidParameter("n_steps must be nonnegative");
  if (n_chains < 0) throw InvalidParameter("n_chains must be nonnegative");
  if (!initial) throw InvalidParameter("initial sampler required");
  const int d = target.dim();
  Ensemble out;
  out.chains.resize(n_chains);
  if (options.thin > 0) {
    for (std::int64_t k = options.thin; k <= n_steps; k += options.thin) out.snapshot_steps.push_back(k);
    out.snapshots.assign(out.snapshot_steps.size(), std::vector<ChainState>(n_chains));
  }

#pragma omp parallel for schedule(static) if (options.parallel)
  for (int i = 0; i < n_chains; ++i) {
    GaussianStream rng(seed, static_cast<std::uint64_t>(i));
    ChainState st = initial(static_cast<std::uint64_t>(i), rng);
    std::size_t snap = 0;
    for (std::int64_t k = 1; k <= n_steps; ++k) {
      const NoisePair noise = sample_noise_pair(scheme, d, rng);
      advance(scheme, target, st, noise);
      if (options.thin > 0 && k % options.thin == 0) out.snapshots[snap++][i] = st;
    }
    out.chains[i] = std::move(st);
  }
  return out;
}

}  // namespace

Ensemble simulate(const SchemeStep& scheme, const Target& target, const InitialSampler& initial,
                  std::int64_t n_steps, int n_chains, std::uint64_t seed, SimulationOptions options) {
  return run_ensemble(scheme, target, initial, n_steps, n_chains, seed, options);
}

Ensemble simulate_serial(const SchemeStep& scheme, const Target& target, const InitialSampler& initial,
                         std::int64_t n_steps, int n_chains, std::uint64_t seed) {
  SimulationOptions options;
  options.parallel = false;
  return run_ensemble(scheme, target, initial, n_steps, n_chains, seed, options);
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("log-log fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw NumericalError("log-log fit needs positive data");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

StrongOrderReport strong_order_test(Scheme scheme, double gamma, ForceScale c, const Target& target,
                                    std::vector<double> h_list, int n_paths, double horizon,
                                    std::uint64_t seed, const StrongOrderOptions& options) {
  if (h_list.size() < 2) throw InvalidParameter("strong order test needs at least two step sizes");
  if (n_paths < 1) throw InvalidParameter("need at least one path");
  if (!(horizon > 0.0)) throw InvalidParameter("horizon must be positive");
  const int refinement = options.refinement;
  if (refinement < 1 || (refinement & (refinement - 1)) != 0)
    throw InvalidParameter("reference refinement must be a power of two");
  std::sort(h_list.begin(), h_list.end(), std::greater<>());
  for (std::size_t i = 0; i + 1 < h_list.size(); ++i)
    if (std::abs(h_list[i] / h_list[i + 1] - 2.0) > 1e-9) throw InvalidParameter("step sizes must be nested by factors of 2");
  const double h_ref = h_list.back() / refinement;
  const double coarse_steps = horizon / h_list.front();
  if (std::abs(coarse_steps - std::round(coarse_steps)) > 1e-9 || std::round(coarse_steps) < 1)
    throw InvalidParameter("horizon must be a whole number of the largest step");

  const int d = target.dim();
  const bool kinetic = scheme != Scheme::EM;
  const std::int64_t n_fine = 2 * static_cast<std::int64_t>(std::llround(horizon / h_ref));
  std::vector<double> levels = h_list;
  levels.push_back(h_ref);
  std::vector<int> k_level;  // fine blocks per half step
  for (double h : levels) k_level.push_back(static_cast<int>(std::llround(h / h_ref)));

  std::vector<SchemeStep> steps;
  for (double h : levels) steps.push_back(make_scheme(scheme, gamma, c, h));

  InitialSampler initial = options.initial;
  if (!initial) initial = gaussian_initial(d, kinetic, c.value, 1.0 / target.L());

  const std::size_t n_levels = h_list.size();
  std::vector<double> sq_err(static_cast<std::size_t>(n_paths) * n_levels, 0.0);

#pragma omp parallel for schedule(dynamic, 8) if (options.parallel)
  for (int p = 0; p < n_paths; ++p) {
    GaussianStream rng(seed, static_cast<std::uint64_t>(p));
    const ChainState start = initial(static_cast<std::uint64_t>(p), rng);
    std::vector<NoiseBlock> fine;
    fine.reserve(n_fine);
    for (std::int64_t j = 0; j < n_fine; ++j) fine.push_back(sample_noise_block(gamma, h_ref / 2, d, rng));

    std::vector<Vector> endpoints(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const int k = k_level[l];
      const std::int64_t n_steps = n_fine / (2 * k);
      ChainState st = start;
      for (std::int64_t s = 0; s < n_steps; ++s) {
        NoisePair pair{aggregate_range(&fine[2 * s * k], k), aggregate_range(&fine[(2 * s + 1) * k], k)};
        advance(steps[l], target, st, pair);
      }
      endpoints[l] = st.xi();
    }
    for (std::size_t l = 0; l < n_levels; ++l)
      sq_err[static_cast<std::size_t>(p) * n_levels + l] = (endpoints[l] - endpoints.back()).squaredNorm();
  }

  StrongOrderReport report;
  report.scheme = scheme;
  report.h = h_list;
  report.h_reference = h_ref;
  report.paths = n_paths;
  report.horizon = horizon;
  for (std::size_t l = 0; l < n_levels; ++l) {
    double sum = 0.0;
    for (int p = 0; p < n_paths; ++p) sum += sq_err[static_cast<std::size_t>(p) * n_levels + l];
    report.rms_error.push_back(std::sqrt(sum / n_paths));
  }
  std::tie(report.slope, report.intercept) = loglog_fit(report.h, report.rms_error);
  return report;
}

}  // namespace langevin
