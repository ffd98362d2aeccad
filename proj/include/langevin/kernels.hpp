#pragma once

#include <cmath>

namespace langevin {

// E(t) = exp(-g t), F(t) = (1 - E)/g, G(t) = (g t + E - 1)/g^2.
// Templated so the contraction sweeps can run them in quad precision.

template <class T>
T kernel_E(const T& gamma, const T& t) {
  using std::exp;
  return exp(-gamma * t);
}

// E(t) - 1 without cancellation.
template <class T>
T kernel_Em1(const T& gamma, const T& t) {
  using std::expm1;
  return expm1(-gamma * t);
}

template <class T>
T kernel_F(const T& gamma, const T& t) {
  return -kernel_Em1(gamma, t) / gamma;
}

template <class T>
T kernel_G(const T& gamma, const T& t) {
  using std::expm1;
  const T x = gamma * t;
  if (x < T(1e-4)) {
    return t * t * (T(1) / 2 - x * (T(1) / 6 - x * (T(1) / 24 - x * (T(1) / 120 - x / 720))));
  }
  return (x + expm1(-x)) / (gamma * gamma);
}

// Covariances of the half-block pair (dW, I_E) over an interval of length
// delta, by the Ito isometry:
//   Var dW = delta, Var I_E = (1 - exp(-2 g delta)) / (2 g), Cov = F(delta).
inline double noise_var_IE(double gamma, double delta) { return -std::expm1(-2.0 * gamma * delta) / (2.0 * gamma); }

// Var(I_E | dW) = Var I_E - F^2 / delta, with a series where the
// subtraction loses digits.
inline double noise_conditional_var_IE(double gamma, double delta) {
  const double x = gamma * delta;
  if (x < 0.05) {
    constexpr double c[] = {1.0 / 12, -1.0 / 12, 17.0 / 360, -7.0 / 360, 43.0 / 6720, -107.0 / 60480,
                            769.0 / 1814400, -163.0 / 1814400};
    double s = 0.0;
    for (int k = 7; k >= 0; --k) s = s * x + c[k];
    return delta * x * x * s;
  }
  const double F = kernel_F(gamma, delta);
  return noise_var_IE(gamma, delta) - F * F / delta;
}

}  // namespace langevin
