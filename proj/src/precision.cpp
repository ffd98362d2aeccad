#include "langevin/precision.hpp"

#include <cmath>
#include <regex>
#include <sstream>

#include "langevin/errors.hpp"

namespace langevin {

CChoice CChoice::parse(const std::string& text) {
  static const std::regex over_L(R"(^\s*([0-9.eE+-]+)\s*/\s*L\s*$)");
  static const std::regex over_Lm(R"(^\s*([0-9.eE+-]+)\s*/\s*\(\s*L\s*\+\s*m\s*\)\s*$)");
  std::smatch match;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidParameter("cannot parse force scale: " + text);
    }
    if (used != s.size()) throw InvalidParameter("cannot parse force scale: " + text);
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter("force scale must be positive: " + text);
    return v;
  };
  if (std::regex_match(text, match, over_L)) return {number(match[1]), Denominator::L};
  if (std::regex_match(text, match, over_Lm)) return {number(match[1]), Denominator::L_plus_m};
  return literal(number(text));
}

ForceScale CChoice::resolve(double m, double L) const {
  switch (denominator) {
    case Denominator::none: return ForceScale(numerator);
    case Denominator::L: return ForceScale(Real(numerator) / Real(L));
    case Denominator::L_plus_m: return ForceScale(Real(numerator) / (Real(L) + Real(m)));
  }
  return ForceScale(numerator);
}

std::string CChoice::label() const {
  std::ostringstream os;
  os << numerator;
  switch (denominator) {
    case Denominator::none: break;
    case Denominator::L: os << "/L"; break;
    case Denominator::L_plus_m: os << "/(L+m)"; break;
  }
  return os.str();
}

}  // namespace langevin
