#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kst/annulus.hpp"

namespace kst {

// Named test functions for the CLI and the experiment harness.  Parameters
// go through --fn-param; defaults keep every function usable bare.
inline ScalarField make_registry_function(const std::string& name, const std::vector<double>& params,
                                          int n) {
  auto p = [&params](size_t i, double dflt) { return i < params.size() ? params[i] : dflt; };
  if (name == "zero") return [](const Point&) { return 0.0; };
  if (name == "const") {
    double c = p(0, 1.0);
    return [c](const Point&) { return c; };
  }
  if (name == "ramp") return [](const Point& x) { return x[0]; };
  if (name == "poly") {
    // polynomial in x_0: params are coefficients, constant term first
    std::vector<double> cs = params.empty() ? std::vector<double>{0.0, 1.0} : params;
    return [cs](const Point& x) {
      double acc = 0.0;
      for (size_t i = cs.size(); i-- > 0;) acc = acc * x[0] + cs[i];
      return acc;
    };
  }
  if (name == "sin") {
    double freq = p(0, 1.0);
    return [freq](const Point& x) { return std::sin(freq * x[0]); };
  }
  if (name == "exp") {
    double scale = p(0, 0.5);
    return [scale](const Point& x) { return std::exp(scale * x[0]); };
  }
  if (name == "hat") {
    // peak height 1 at the origin, support [-w, w] in the max norm
    double w = p(0, 2.0);
    return [w](const Point& x) { return std::max(0.0, 1.0 - max_norm(x) / w); };
  }
  if (name == "gauss") {
    double s = p(0, 1.0);
    return [s](const Point& x) {
      double q = 0.0;
      for (double v : x) q += v * v;
      return std::exp(-q / (s * s));
    };
  }
  if (name == "product") {
    if (n < 2) throw std::invalid_argument("registry: 'product' needs n >= 2");
    return [](const Point& x) { return x[0] * x[1]; };
  }
  throw std::invalid_argument("registry: unknown function '" + name + "'");
}

inline std::vector<std::string> registry_names() {
  return {"zero", "const", "ramp", "poly", "sin", "exp", "hat", "gauss", "product"};
}

}  // namespace kst
