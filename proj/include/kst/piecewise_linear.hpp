#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kst {

// Continuous piecewise-linear function with compact support: linear between
// breakpoints, identically zero outside the first and last one.
class PiecewiseLinear1D {
 public:
  PiecewiseLinear1D() = default;

  PiecewiseLinear1D(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size()) throw std::invalid_argument("PiecewiseLinear1D: size mismatch");
    for (size_t i = 0; i + 1 < xs_.size(); ++i)
      if (!(xs_[i] < xs_[i + 1])) throw std::invalid_argument("PiecewiseLinear1D: breakpoints not increasing");
  }

  bool zero() const { return xs_.empty(); }
  size_t size() const { return xs_.size(); }
  const std::vector<double>& breakpoints() const { return xs_; }
  const std::vector<double>& values() const { return ys_; }

  double operator()(double x) const {
    if (xs_.empty()) return 0.0;
    if (x <= xs_.front()) return (x == xs_.front()) ? ys_.front() : 0.0;
    if (x >= xs_.back()) return (x == xs_.back()) ? ys_.back() : 0.0;
    size_t hi = size_t(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
    size_t lo = hi - 1;
    double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + t * (ys_[hi] - ys_[lo]);
  }

  double sup_abs() const {
    double m = 0.0;
    for (double y : ys_) m = std::max(m, std::abs(y));
    return m;
  }

  // max absolute slope over all segments (0 for constants)
  double lipschitz() const {
    double m = 0.0;
    for (size_t i = 0; i + 1 < xs_.size(); ++i)
      m = std::max(m, std::abs((ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i])));
    return m;
  }

  double support_lo() const { return xs_.empty() ? 0.0 : xs_.front(); }
  double support_hi() const { return xs_.empty() ? 0.0 : xs_.back(); }

  // pointwise sum; breakpoints merged and deduplicated
  static PiecewiseLinear1D add(const PiecewiseLinear1D& a, const PiecewiseLinear1D& b) {
    if (a.zero()) return b;
    if (b.zero()) return a;
    std::vector<double> xs;
    xs.reserve(a.xs_.size() + b.xs_.size());
    std::merge(a.xs_.begin(), a.xs_.end(), b.xs_.begin(), b.xs_.end(), std::back_inserter(xs));
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> ys(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) ys[i] = a(xs[i]) + b(xs[i]);
    return PiecewiseLinear1D(std::move(xs), std::move(ys));
  }

  PiecewiseLinear1D scaled(double s) const {
    PiecewiseLinear1D r = *this;
    for (double& y : r.ys_) y *= s;
    return r;
  }

  // drop breakpoints whose removal changes nothing (collinear interior
  // points and zero-value fringe beyond the support)
  PiecewiseLinear1D simplified(double tol = 0.0) const {
    if (xs_.size() < 3) return *this;
    std::vector<double> xs{xs_.front()}, ys{ys_.front()};
    for (size_t i = 1; i + 1 < xs_.size(); ++i) {
      double t = (xs_[i] - xs_[i - 1]) / (xs_[i + 1] - xs_[i - 1]);
      double lin = ys_[i - 1] + t * (operator()(xs_[i + 1]) - ys_[i - 1]);
      if (std::abs(ys_[i] - lin) > tol || xs.back() == xs_[i]) {
        xs.push_back(xs_[i]);
        ys.push_back(ys_[i]);
      } else if (std::abs(ys_[i] - lin) > tol) {
        xs.push_back(xs_[i]);
        ys.push_back(ys_[i]);
      } else {
        // keep points that break collinearity with the committed prefix
        double tt = (xs_[i] - xs.back()) / (xs_[i + 1] - xs.back());
        double lin2 = ys.back() + tt * (ys_[i + 1] - ys.back());
        if (std::abs(ys_[i] - lin2) > tol) {
          xs.push_back(xs_[i]);
          ys.push_back(ys_[i]);
        }
      }
    }
    xs.push_back(xs_.back());
    ys.push_back(ys_.back());
    return PiecewiseLinear1D(std::move(xs), std::move(ys));
  }

 private:
  std::vector<double> xs_, ys_;
};

}  // namespace kst
