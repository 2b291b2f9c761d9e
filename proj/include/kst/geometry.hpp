#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace kst {

using Point = std::vector<double>;

inline double max_norm(const Point& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double max_dist(const Point& a, const Point& b) {
  assert(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Axis-aligned box. Endpoints are exact doubles (dyadic in all internal
// constructions), so comparisons below are exact set operations.
struct Box {
  std::vector<double> lo, hi;  // lo[i] <= hi[i]

  int dim() const { return static_cast<int>(lo.size()); }

  bool empty() const {
    for (int i = 0; i < dim(); ++i)
      if (lo[i] > hi[i]) return true;
    return lo.empty();
  }

  bool contains_closed(const Point& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }

  bool contains_open(const Point& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] <= lo[i] || x[i] >= hi[i]) return false;
    return true;
  }

  // max-metric diameter
  double diameter() const {
    double d = 0.0;
    for (int i = 0; i < dim(); ++i) d = std::max(d, hi[i] - lo[i]);
    return d;
  }

  // max-metric distance between two closed boxes (0 if they intersect)
  static double distance(const Box& a, const Box& b) {
    double d = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
      double g = std::max({0.0, b.lo[i] - a.hi[i], a.lo[i] - b.hi[i]});
      d = std::max(d, g);
    }
    return d;
  }

  // sup over x in a, y in b of max-metric distance
  static double sup_distance(const Box& a, const Box& b) {
    double d = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
      double g = std::max(a.hi[i] - b.lo[i], b.hi[i] - a.lo[i]);
      d = std::max(d, g);
    }
    return d;
  }

  static bool intersect_closed(const Box& a, const Box& b) {
    for (int i = 0; i < a.dim(); ++i)
      if (a.hi[i] < b.lo[i] || b.hi[i] < a.lo[i]) return false;
    return true;
  }

  // closure of a intersects the open box b
  static bool closed_meets_open(const Box& a, const Box& b) {
    for (int i = 0; i < a.dim(); ++i)
      if (a.hi[i] <= b.lo[i] || b.hi[i] <= a.lo[i]) return false;
    return true;
  }

  static Box intersection(const Box& a, const Box& b) {
    Box r;
    r.lo.resize(a.dim());
    r.hi.resize(a.dim());
    for (int i = 0; i < a.dim(); ++i) {
      r.lo[i] = std::max(a.lo[i], b.lo[i]);
      r.hi[i] = std::min(a.hi[i], b.hi[i]);
    }
    return r;
  }

  Box inflated(double eta) const {
    Box r = *this;
    for (int i = 0; i < dim(); ++i) {
      r.lo[i] -= eta;
      r.hi[i] += eta;
    }
    return r;
  }

  double min_norm() const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i) {
      double v = 0.0;
      if (lo[i] > 0.0) v = lo[i];
      else if (hi[i] < 0.0) v = -hi[i];
      m = std::max(m, v);
    }
    return m;
  }

  double max_norm_sup() const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i) m = std::max(m, std::max(std::abs(lo[i]), std::abs(hi[i])));
    return m;
  }

  Point center() const {
    Point c(lo.size());
    for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }

  static Box cube(int n, double lo_v, double hi_v) {
    Box b;
    b.lo.assign(n, lo_v);
    b.hi.assign(n, hi_v);
    return b;
  }
};

// Finite union of closed boxes. Boxes may overlap; the union is the set.
struct Region {
  std::vector<Box> boxes;

  bool empty() const {
    for (const Box& b : boxes)
      if (!b.empty()) return false;
    return true;
  }

  int dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }

  bool contains(const Point& x) const {
    for (const Box& b : boxes)
      if (!b.empty() && b.contains_closed(x)) return true;
    return false;
  }

  // max-metric distance from the set to x (infinity if empty)
  double distance_to(const Point& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const Box& b : boxes) {
      if (b.empty()) continue;
      double bd = 0.0;
      for (int i = 0; i < b.dim(); ++i) {
        double g = std::max({0.0, b.lo[i] - x[i], x[i] - b.hi[i]});
        bd = std::max(bd, g);
      }
      d = std::min(d, bd);
    }
    return d;
  }

  // min over box pairs of box distance (infinity if either is empty)
  static double distance(const Region& r, const Region& s) {
    double d = std::numeric_limits<double>::infinity();
    for (const Box& a : r.boxes) {
      if (a.empty()) continue;
      for (const Box& b : s.boxes) {
        if (b.empty()) continue;
        d = std::min(d, Box::distance(a, b));
      }
    }
    return d;
  }

  double diameter() const {
    double d = 0.0;
    for (const Box& a : boxes) {
      if (a.empty()) continue;
      for (const Box& b : boxes) {
        if (b.empty()) continue;
        d = std::max(d, Box::sup_distance(a, b));
      }
    }
    return d;
  }

  bool intersects_box_closed(const Box& b) const {
    for (const Box& a : boxes)
      if (!a.empty() && Box::intersect_closed(a, b)) return true;
    return false;
  }

  bool intersects(const Region& other) const {
    for (const Box& b : other.boxes)
      if (!b.empty() && intersects_box_closed(b)) return true;
    return false;
  }

  // closed eta-neighborhood in the max metric
  Region buffered(double eta) const {
    Region r;
    for (const Box& b : boxes)
      if (!b.empty()) r.boxes.push_back(b.inflated(eta));
    return r;
  }

  void add(const Box& b) {
    if (!b.empty()) boxes.push_back(b);
  }
};

}  // namespace kst
