#pragma once

#include <string>

#include <boost/multiprecision/float128.hpp>

namespace langevin {

// Quad precision for the scalar H-sweeps. At kappa = 1e9 the rate for
// c = 4/(L+m) is 4 - cL, which a double-valued c cannot resolve.
using Real = boost::multiprecision::float128;

// Force scale c carried both as a double (for simulation) and in quad
// precision (for rate computations).
struct ForceScale {
  double value = 1.0;
  Real exact = 1;

  ForceScale() = default;
  ForceScale(double v) : value(v), exact(v) {}  // NOLINT(google-explicit-constructor)
  ForceScale(const Real& r) : value(static_cast<double>(r)), exact(r) {}  // NOLINT
};

// Symbolic choice of c relative to the target constants: k/L, k/(L+m) or a
// literal value.
struct CChoice {
  enum class Denominator { none, L, L_plus_m };

  double numerator = 1.0;
  Denominator denominator = Denominator::L;

  // Accepts "1/L", "2/(L+m)", "3/(L+m)", "0.25", ...
  static CChoice parse(const std::string& text);
  static CChoice literal(double c) { return {c, Denominator::none}; }

  ForceScale resolve(double m, double L) const;
  std::string label() const;
};

}  // namespace langevin
