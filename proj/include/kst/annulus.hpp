#pragma once

#include <functional>

#include "kst/exhaustion.hpp"

namespace kst {

using ScalarField = std::function<double(const Point&)>;

// cutoff: 1 on K_m, 0 outside the interior of K_{m+1}, max-metric ramp between
inline double cutoff(int m, const Point& x) {
  return std::clamp(double(m + 1) - max_norm(x), 0.0, 1.0);
}

// One term of the decomposition f = sum_s f_s with supp f_s inside
// L_s = K_{s+1} \ K_{s-1}^o.
struct AnnulusProblem {
  int s = 1;
  double window_bound = 3.0;  // identities enforced on [-bound, bound]^n = K_{s+2}
  ScalarField f_s;
};

// f_1 = f * cut_1, f_{s+1} = (f - sum_{t<=s} f_t) * cut_{s+1}.
// Partial sums equal f exactly on K_{s_max}.
inline std::vector<AnnulusProblem> annulus_decompose(const ScalarField& f, const Exhaustion& ex,
                                                     int s_max) {
  if (s_max < 1) throw std::invalid_argument("annulus_decompose: s_max must be >= 1");
  (void)ex;
  // f_s evaluated by the recursion below; partials share the closure chain
  struct Chain {
    ScalarField f;
    // returns f_s(x) and the partial sum up to s
    static void eval(const ScalarField& f, int s, const Point& x, double& fs, double& partial) {
      double remaining = f(x);
      partial = 0.0;
      fs = 0.0;
      for (int t = 1; t <= s; ++t) {
        fs = remaining * cutoff(t, x);
        partial += fs;
        remaining -= fs;
      }
    }
  };
  std::vector<AnnulusProblem> out;
  for (int s = 1; s <= s_max; ++s) {
    AnnulusProblem p;
    p.s = s;
    p.window_bound = double(s + 2);
    p.f_s = [f, s](const Point& x) {
      double fs, partial;
      Chain::eval(f, s, x, fs, partial);
      return fs;
    };
    out.push_back(std::move(p));
  }
  return out;
}

inline double annulus_partial_sum(const ScalarField& f, int s_max, const Point& x) {
  double remaining = f(x), partial = 0.0;
  for (int t = 1; t <= s_max; ++t) {
    double fs = remaining * cutoff(t, x);
    partial += fs;
    remaining -= fs;
  }
  return partial;
}

}  // namespace kst
