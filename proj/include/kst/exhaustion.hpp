#pragma once

#include <stdexcept>
#include <string>

#include "kst/geometry.hpp"

namespace kst {

// Domain X in R^n: the whole space, or a closed region given as a finite
// union of closed boxes.
struct DomainSpec {
  int n = 1;
  bool full_space = true;
  Region region;  // used when !full_space; must be closed

  void validate() const {
    if (n < 1) throw std::invalid_argument("DomainSpec: dimension must be >= 1");
    if (!full_space && region.empty())
      throw std::invalid_argument("DomainSpec: box region must be nonempty");
    if (!full_space)
      for (const Box& b : region.boxes)
        if (b.dim() != n) throw std::invalid_argument("DomainSpec: box dimension mismatch");
  }
};

// Compact exhaustion K_m of the domain with K_{-1} = K_0 = empty and
// K_m = [-m, m]^n ∩ X for m >= 1.  Shells and annuli are max-norm bands
// intersected with X, so all set operations below are exact.
class Exhaustion {
 public:
  explicit Exhaustion(DomainSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const DomainSpec& domain() const { return spec_; }
  int dim() const { return spec_.n; }

  bool domain_contains(const Point& x) const {
    return spec_.full_space ? true : spec_.region.contains(x);
  }

  // K_m
  Region compact(int m) const {
    Region r;
    if (m <= 0) return r;
    Box cube = Box::cube(spec_.n, -double(m), double(m));
    if (spec_.full_space) {
      r.add(cube);
    } else {
      for (const Box& b : spec_.region.boxes) r.add(Box::intersection(b, cube));
    }
    return r;
  }

  bool in_compact(int m, const Point& x) const {
    if (m <= 0) return false;
    return max_norm(x) <= double(m) && domain_contains(x);
  }

  // H_m = K_m \ K_{m-1}^o : the band m-1 <= |x|_inf <= m within X
  Region shell(int m) const {
    Region r;
    if (m <= 0) return r;
    if (m == 1) return compact(1);
    r = band(double(m - 1), double(m));
    return r;
  }

  bool in_shell(int m, const Point& x) const {
    if (m <= 0) return false;
    double v = max_norm(x);
    double lo = (m == 1) ? 0.0 : double(m - 1);
    return v >= lo && v <= double(m) && domain_contains(x);
  }

  // smallest m with x in H_m (== ceil of the norm, at least 1)
  int shell_index(const Point& x) const {
    double v = max_norm(x);
    int m = static_cast<int>(std::ceil(v));
    return std::max(1, m);
  }

  // L_s = K_{s+1} \ K_{s-1}^o
  Region annulus(int s) const {
    Region r;
    if (s < 1) return r;
    if (s == 1) return compact(2);
    return band(double(s - 1), double(s + 1));
  }

  bool in_annulus(int s, const Point& x) const {
    if (s < 1) return false;
    double v = max_norm(x);
    double lo = (s == 1) ? 0.0 : double(s - 1);
    return v >= lo && v <= double(s + 1) && domain_contains(x);
  }

  // U_m = K_{m+1}^o \ K_{m-1}, an open set; membership only.
  bool in_open_band(int m, const Point& x) const {
    if (m < 0) return false;
    double v = max_norm(x);
    if (v >= double(m + 1)) return false;
    if (m >= 1 && v <= double(m - 1)) return false;
    return domain_contains(x);
  }

  // S(H_m, eta) = closed eta-neighborhood of the shell
  Region buffered_shell(int m, double eta) const {
    if (eta <= 0.0) throw std::invalid_argument("buffered_shell: eta must be > 0");
    Region h = shell(m);
    return h.buffered(eta);
  }

  bool in_buffered_shell(int m, double eta, const Point& x) const {
    Region h = shell(m);
    if (h.empty()) return false;
    return h.distance_to(x) <= eta;
  }

 private:
  // { x in X : lo <= |x|_inf <= hi } as a finite union of closed boxes
  Region band(double lo, double hi) const {
    Region r;
    int n = spec_.n;
    // 2n slabs, one per face of the outer cube
    for (int axis = 0; axis < n; ++axis) {
      for (int side = 0; side < 2; ++side) {
        Box slab = Box::cube(n, -hi, hi);
        if (side == 0) {
          slab.lo[axis] = lo;
          slab.hi[axis] = hi;
        } else {
          slab.lo[axis] = -hi;
          slab.hi[axis] = -lo;
        }
        if (spec_.full_space) {
          r.add(slab);
        } else {
          for (const Box& b : spec_.region.boxes) r.add(Box::intersection(b, slab));
        }
      }
    }
    return r;
  }

  DomainSpec spec_;
};

inline Exhaustion build_exhaustion(const DomainSpec& spec) { return Exhaustion(spec); }

}  // namespace kst
