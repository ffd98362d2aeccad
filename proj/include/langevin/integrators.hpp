#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "langevin/precision.hpp"
#include "langevin/rng.hpp"
#include "langevin/targets.hpp"

namespace langevin {

enum class Scheme { EM, EE, UBU, BUB };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

// One step of a scheme with its kernels precomputed. State is xi = (v, x)
// for the kinetic schemes and x alone for EM.
struct SchemeStep {
  Scheme scheme = Scheme::UBU;
  double gamma = 2.0;
  ForceScale c;
  double h = 0.0;

  double E = 1, F = 0, G = 0;                 // at h
  double E_half = 1, F_half = 0, G_half = 0;  // at h/2
  double Em1 = 0;                             // E(h) - 1
  double noise_scale = 0;                     // sqrt(2 gamma c), sqrt(2c) for EM

  // xi_{n+1} = A_h xi_n + B_h grad f(C_h xi_n) + noise, for EM/EE/UBU.
  // Empty for BUB, which takes two kicks per step.
  Eigen::MatrixXd A_h, B_h, C_h;

  int n_hat() const { return scheme == Scheme::EM ? 1 : 2; }
};

// c = 0 is allowed (force and noise switched off).
SchemeStep make_scheme(Scheme scheme, double gamma, ForceScale c, double h);

// Per-dimension Brownian functionals over one interval of length delta:
// dW, I_E = int E(delta - s) dW(s), and I_F = int F(delta - s) dW(s).
struct NoiseBlock {
  double gamma = 0.0;
  double delta = 0.0;
  Vector dW, IE, IF;

  int dim() const { return static_cast<int>(dW.size()); }
};

struct NoisePair {
  NoiseBlock first, second;
};

// 2x2 covariance of (dW, I_E).
Eigen::Matrix2d noise_block_covariance(double gamma, double delta);

// Draws (dW, I_E) through the Cholesky factor of their covariance, two
// normals per dimension in the order (z1, z2). I_F = (dW - I_E)/gamma is
// evaluated in a cancellation-free form.
NoiseBlock sample_noise_block(double gamma, double delta, int d, GaussianStream& rng);

// Block from given (dW, I_E); I_F from the identity. Used for linear probes.
NoiseBlock noise_block_from_pair(double gamma, double delta, const Vector& dW, const Vector& IE);

NoiseBlock zero_noise_block(double gamma, double delta, int d);

// The two half-step blocks consumed by one step (first half, then second).
NoisePair sample_noise_pair(const SchemeStep& scheme, int d, GaussianStream& rng);
NoisePair zero_noise_pair(const SchemeStep& scheme, int d);

// Exact coarse block over the union of k contiguous equal subintervals.
NoiseBlock aggregate_noise(const std::vector<NoiseBlock>& fine);

struct ChainState {
  Vector v;  // empty for EM
  Vector x;
  std::int64_t n = 0;
  // BUB reuses the closing kick's gradient as the next opening kick.
  Vector cached_grad;
  bool grad_valid = false;

  Vector xi() const;
};

ChainState make_state(const Vector& v, const Vector& x);
ChainState state_from_xi(const Vector& xi, int n_hat);

void advance(const SchemeStep& scheme, const Target& target, ChainState& state, const NoisePair& noise);
ChainState step(const SchemeStep& scheme, const Target& target, const ChainState& state,
                const NoisePair& noise);
std::pair<ChainState, ChainState> coupled_step(const SchemeStep& scheme, const Target& target,
                                               const ChainState& s1, const ChainState& s2,
                                               const NoisePair& shared);

// Draws a chain's initial state from its own stream before any noise.
using InitialSampler = std::function<ChainState(std::uint64_t chain, GaussianStream& rng)>;

InitialSampler fixed_initial(const ChainState& state);
// v ~ N(0, v_var I), x ~ N(0, x_var I); v omitted when kinetic is false.
InitialSampler gaussian_initial(int d, bool kinetic, double v_var, double x_var);

struct SimulationOptions {
  std::int64_t thin = 0;  // record all chains every `thin` steps when > 0
  bool parallel = true;
};

struct Ensemble {
  std::vector<ChainState> chains;
  std::vector<std::int64_t> snapshot_steps;
  std::vector<std::vector<ChainState>> snapshots;
};

// Chain i uses stream (seed, i) for its initial draw and then its noise, so
// results do not depend on thread count or scheduling.
Ensemble simulate(const SchemeStep& scheme, const Target& target, const InitialSampler& initial,
                  std::int64_t n_steps, int n_chains, std::uint64_t seed, SimulationOptions options = {});

// Serial reference with the same stream layout as simulate.
Ensemble simulate_serial(const SchemeStep& scheme, const Target& target, const InitialSampler& initial,
                         std::int64_t n_steps, int n_chains, std::uint64_t seed);

struct StrongOrderReport {
  Scheme scheme = Scheme::UBU;
  std::vector<double> h;
  std::vector<double> rms_error;
  double h_reference = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  int paths = 0;
  double horizon = 0.0;
};

struct StrongOrderOptions {
  // The reference solution runs at min(h) / refinement, a power of two.
  int refinement = 16;
  bool parallel = true;
  InitialSampler initial;  // default: v ~ N(0, c), x ~ N(0, 1/L)
};

// RMS endpoint error of xi at horizon T against a finer reference, every
// level driven by the same Brownian path through aggregate_noise.
StrongOrderReport strong_order_test(Scheme scheme, double gamma, ForceScale c, const Target& target,
                                    std::vector<double> h_list, int n_paths, double horizon,
                                    std::uint64_t seed, const StrongOrderOptions& options = {});

// Least-squares slope and intercept of log y against log x.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace langevin
