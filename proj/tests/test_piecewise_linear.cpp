#include <doctest.h>

#include <random>

#include "kst/piecewise_linear.hpp"

using namespace kst;

TEST_CASE("evaluation and compact support") {
  PiecewiseLinear1D f({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
  CHECK(f(0.5) == 0.5);
  CHECK(f(1.0) == 1.0);
  CHECK(f(1.5) == 0.5);
  CHECK(f(-0.1) == 0.0);
  CHECK(f(2.1) == 0.0);
  CHECK(f.sup_abs() == 1.0);
  CHECK(f.lipschitz() == 1.0);
}

TEST_CASE("sum merges breakpoints and stays sorted") {
  PiecewiseLinear1D a({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
  PiecewiseLinear1D b({1.0, 2.0, 3.0}, {0.0, 2.0, 0.0});
  auto c = PiecewiseLinear1D::add(a, b);
  const auto& xs = c.breakpoints();
  CHECK(std::is_sorted(xs.begin(), xs.end()));
  CHECK(std::adjacent_find(xs.begin(), xs.end()) == xs.end());  // deduplicated
  CHECK(c(0.5) == 0.5);
  CHECK(c(1.5) == 1.5);
  CHECK(c(2.0) == 2.0);
  CHECK(c(2.5) == 1.0);
  CHECK(c(3.5) == 0.0);
}

TEST_CASE("pointwise-sum property on random pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> du(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto mk = [&](double lo) {
      std::vector<double> xs, ys;
      double x = lo;
      int m = 3 + int(du(rng) * 6);
      for (int i = 0; i < m; ++i) {
        xs.push_back(x);
        bool edge = (i == 0 || i == m - 1);
        ys.push_back(edge ? 0.0 : du(rng) * 2.0 - 1.0);  // continuous: zero ends
        x += 0.1 + du(rng);
      }
      return PiecewiseLinear1D(std::move(xs), std::move(ys));
    };
    PiecewiseLinear1D a = mk(du(rng)), b = mk(du(rng) - 0.5);
    auto c = PiecewiseLinear1D::add(a, b);
    for (double x = -1.0; x < 8.0; x += 0.037) {
      CHECK(c(x) == doctest::Approx(a(x) + b(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("simplify drops collinear points without changing the function") {
  PiecewiseLinear1D f({0.0, 0.5, 1.0, 2.0, 3.0}, {0.0, 0.5, 1.0, 1.0, 0.0});
  auto g = f.simplified(0.0);
  CHECK(g.size() < f.size());
  for (double x = -0.5; x <= 3.5; x += 0.01) CHECK(g(x) == doctest::Approx(f(x)).epsilon(1e-14));
}
