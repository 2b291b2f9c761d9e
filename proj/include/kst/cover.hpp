#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kst/exhaustion.hpp"

namespace kst {

// Deterministic Miller-Rabin, valid for all 64-bit inputs.
inline bool is_prime_u64(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  auto mulmod = [](uint64_t a, uint64_t b, uint64_t m) -> uint64_t {
    return static_cast<uint64_t>((__uint128_t)a * b % m);
  };
  auto powmod = [&](uint64_t a, uint64_t e, uint64_t m) -> uint64_t {
    uint64_t r = 1;
    a %= m;
    while (e) {
      if (e & 1) r = mulmod(r, a, m);
      a = mulmod(a, a, m);
      e >>= 1;
    }
    return r;
  };
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

inline uint64_t next_prime_above(uint64_t n) {
  uint64_t c = n + 1;
  if (c <= 2) return 2;
  if (c % 2 == 0) ++c;
  while (!is_prime_u64(c)) c += 2;
  return c;
}

// Hands out globally distinct primes in increasing order.
class PrimeSource {
 public:
  uint64_t next() {
    last_ = next_prime_above(last_);
    return last_;
  }
  // next unused prime >= floor
  uint64_t next_at_least(uint64_t floor_v) {
    if (floor_v > last_ + 1) last_ = floor_v - 1;
    return next();
  }
  uint64_t last() const { return last_; }

 private:
  uint64_t last_ = 1;
};

// Per-level cover parameters.  Cell geometry in units of u = 2^u_exp:
//   shift step 8u, gap 7u, period (2n+1)*8u, cell side (16n+1)*u.
// Gaps of distinct families are disjoint per axis, so every point misses at
// most one family per axis and is covered by at least n+1 families.
struct LevelParams {
  int n = 1;
  int k = 1;
  double gamma = 1.0;
  double eps = 1.0 / 64.0;
  int u_exp = -5;
  std::vector<uint64_t> primes;  // 2n+1 entries, distinct, increasing
  std::vector<double> eta;       // eta[m], buffer radius per shell; 0 = unset

  // value-grid regime for the ladder: exact multiples of 1/prime, or a
  // dyadic grid 2^-dyadic_q when the prime escalation exceeds resolution
  bool dyadic = false;
  int dyadic_q = 0;

  double u() const { return std::ldexp(1.0, u_exp); }
  int64_t period_u() const { return int64_t(8) * (2 * n + 1); }
  int64_t side_u() const { return int64_t(16) * n + 1; }
  int64_t gap_u() const { return 7; }
  int64_t shift_u() const { return 8; }
  double period() const { return double(period_u()) * u(); }
  double side() const { return double(side_u()) * u(); }
  double gap_width() const { return double(gap_u()) * u(); }

  double prime_product() const {
    double p = 1.0;
    for (uint64_t r : primes) p *= double(r);
    return p;
  }

  void check_invariants() const {
    if (int(primes.size()) != 2 * n + 1) throw std::logic_error("LevelParams: wrong family count");
    if (!(eps > 0.0) || !(gamma > 0.0)) throw std::logic_error("LevelParams: nonpositive eps/gamma");
    if (k == 1 && !(eps < 0.25)) throw std::logic_error("LevelParams: eps_1 must be < 1/4");
    if (!(eps < 1.0 / prime_product())) throw std::logic_error("LevelParams: eps violates prime-product bound");
    for (size_t i = 0; i + 1 < primes.size(); ++i)
      if (primes[i] >= primes[i + 1]) throw std::logic_error("LevelParams: primes not increasing");
    if (!(side() < gamma)) throw std::logic_error("LevelParams: cell diameter not below gamma");
  }
};

// plan_levels: geometric schedule gamma_k = 2^(1-k), primes in increasing
// order from the global sequence, eps halving capped by the prime-product
// bound.  The inner module escalates primes per level when value windows
// demand it and re-caps eps accordingly.
inline std::vector<LevelParams> plan_levels(int n, int k_max, PrimeSource* primes = nullptr) {
  if (n < 1) throw std::invalid_argument("plan_levels: n must be >= 1");
  if (k_max < 1) throw std::invalid_argument("plan_levels: k_max must be >= 1");
  PrimeSource local;
  PrimeSource& src = primes ? *primes : local;
  int c = 1;
  while ((1 << c) <= 16 * n + 1) ++c;  // smallest c with 2^c > 16n+1
  std::vector<LevelParams> out;
  double prev_eps = 0.5;
  for (int k = 1; k <= k_max; ++k) {
    LevelParams lp;
    lp.n = n;
    lp.k = k;
    lp.gamma = std::ldexp(1.0, 1 - k);
    lp.u_exp = 1 - k - c;
    for (int i = 0; i < 2 * n + 1; ++i) lp.primes.push_back(src.next());
    double prod = lp.prime_product();
    if (!(prod < std::ldexp(1.0, 62)))
      throw std::overflow_error("plan_levels: prime product exceeds representable range");
    int e = 1;
    while (std::ldexp(1.0, -e) * prod >= 1.0) ++e;  // 2^-e < 1/prod
    double cap = std::ldexp(1.0, -e - 1);
    double eps = std::min({prev_eps * 0.5, cap, 1.0 / 64.0});
    lp.eps = eps;
    prev_eps = eps;
    lp.eta.assign(size_t(k) + 2, 0.0);
    lp.check_invariants();
    out.push_back(std::move(lp));
  }
  return out;
}

// A cell: one open box of one family's shifted lattice.
struct Cell {
  int family = 0;  // 0-based
  int level = 1;
  std::vector<int64_t> lattice;

  bool operator==(const Cell& o) const {
    return family == o.family && level == o.level && lattice == o.lattice;
  }
  bool operator<(const Cell& o) const {
    if (family != o.family) return family < o.family;
    if (level != o.level) return level < o.level;
    return lattice < o.lattice;
  }
};

inline Box cell_box(const LevelParams& lp, const Cell& c) {
  Box b;
  int n = lp.n;
  b.lo.resize(n);
  b.hi.resize(n);
  for (int a = 0; a < n; ++a) {
    int64_t lo_u = lp.shift_u() * c.family + c.lattice[a] * lp.period_u();
    b.lo[a] = double(lo_u) * lp.u();
    b.hi[a] = double(lo_u + lp.side_u()) * lp.u();
  }
  return b;
}

// Locate the (unique) family cell whose open box contains x along every
// axis; nullopt when some coordinate falls in the family's gap slab.
inline std::optional<std::vector<int64_t>> locate_cell(const LevelParams& lp, int family, const Point& x) {
  int n = lp.n;
  std::vector<int64_t> j(n);
  const double u = lp.u();
  const int64_t P = lp.period_u(), L = lp.side_u(), S = lp.shift_u();
  for (int a = 0; a < n; ++a) {
    double tu = x[a] / u - double(S * family);  // exact for dyadic u
    double jf = std::floor(tu / double(P));
    int64_t jj = int64_t(jf);
    double off = tu - double(jj) * double(P);
    if (off < 0.0) {
      --jj;
      off += double(P);
    } else if (off >= double(P)) {
      ++jj;
      off -= double(P);
    }
    if (!(off > 0.0 && off < double(L))) return std::nullopt;
    j[a] = jj;
  }
  return j;
}

struct LevelCover {
  LevelParams params;
  // cells per family, in lattice raster order
  std::vector<std::vector<Cell>> families;
  // touched shells per cell, parallel to `families`
  std::vector<std::vector<std::vector<int>>> shells;

  const Cell* find(int family, const std::vector<int64_t>& lattice) const {
    const auto& v = families[family];
    Cell probe;
    probe.family = family;
    probe.level = params.k;
    probe.lattice = lattice;
    auto it = std::lower_bound(v.begin(), v.end(), probe);
    if (it != v.end() && it->lattice == lattice) return &*it;
    return nullptr;
  }
};

// Shells touched by a closed box: consecutive, at most two when the box
// diameter is below 1.
inline std::vector<int> touched_shells(const Exhaustion& ex, const Box& b) {
  std::vector<int> out;
  double lo = b.min_norm(), hi = b.max_norm_sup();
  int m_lo = std::max(1, int(std::ceil(lo)));
  if (lo == std::ceil(lo) && lo > 0.0) m_lo = int(lo);  // boundary belongs to both bands
  int m_hi = std::max(1, int(std::ceil(hi)));
  for (int m = m_lo; m <= m_hi; ++m) {
    Region h = ex.shell(m);
    if (!h.empty() && h.intersects_box_closed(b)) out.push_back(m);
  }
  return out;
}

// Enumerate all cells whose closure meets [-bound, bound]^n (intersected
// with the domain region when present).
inline LevelCover build_level(const Exhaustion& ex, const LevelParams& params, double bound) {
  LevelCover cover;
  cover.params = params;
  int n = params.n;
  int fam_count = 2 * n + 1;
  cover.families.resize(fam_count);
  cover.shells.resize(fam_count);
  const double u = params.u();
  const int64_t P = params.period_u(), L = params.side_u(), S = params.shift_u();
  Box window = Box::cube(n, -bound, bound);

  for (int f = 0; f < fam_count; ++f) {
    // lattice range per axis: closure [j*P + S*f, j*P + S*f + L]*u meets [-B, B]
    std::vector<int64_t> jmin(n), jmax(n);
    for (int a = 0; a < n; ++a) {
      double bu = bound / u;
      jmin[a] = int64_t(std::floor((-bu - double(S * f) - double(L)) / double(P)));
      jmax[a] = int64_t(std::ceil((bu - double(S * f)) / double(P)));
    }
    std::vector<std::pair<Cell, std::vector<int>>> found;
    std::vector<int64_t> j = jmin;
    while (true) {
      Cell c;
      c.family = f;
      c.level = params.k;
      c.lattice = j;
      Box b = cell_box(params, c);
      bool meets = Box::intersect_closed(b, window);
      if (meets && !ex.domain().full_space) meets = ex.domain().region.intersects_box_closed(b);
      if (meets) found.push_back({std::move(c), touched_shells(ex, b)});
      int a = 0;
      while (a < n) {
        if (++j[a] <= jmax[a]) break;
        j[a] = jmin[a];
        ++a;
      }
      if (a == n) break;
    }
    std::sort(found.begin(), found.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& [c, sh] : found) {
      cover.families[f].push_back(std::move(c));
      cover.shells[f].push_back(std::move(sh));
    }
  }
  return cover;
}

// All cells (across families) whose open box contains x; at most one per
// family, at least n+1 in total.
inline std::vector<Cell> covering_cells(const LevelCover& cover, const Point& x) {
  std::vector<Cell> out;
  for (int f = 0; f < int(cover.families.size()); ++f) {
    auto loc = locate_cell(cover.params, f, x);
    if (!loc) continue;
    const Cell* c = cover.find(f, *loc);
    if (c) out.push_back(*c);
  }
  return out;
}

// eta_k^m = min( half the distance from H_m to the nearest disjoint cell
// closure, one third of the separations d(H_{m-2},H_m) and d(H_m,H_{m+2}) ).
inline void pick_buffers(LevelCover& cover, const Exhaustion& ex, int m_max) {
  cover.params.eta.assign(size_t(m_max) + 2, 0.0);
  for (int m = 1; m <= m_max; ++m) {
    Region hm = ex.shell(m);
    if (hm.empty()) continue;
    double d_cells = std::numeric_limits<double>::infinity();
    for (int f = 0; f < int(cover.families.size()); ++f) {
      for (const Cell& c : cover.families[f]) {
        Box b = cell_box(cover.params, c);
        if (hm.intersects_box_closed(b)) continue;
        Region rb;
        rb.add(b);
        d_cells = std::min(d_cells, Region::distance(hm, rb));
      }
    }
    double guard = std::numeric_limits<double>::infinity();
    if (m >= 3) {
      Region a = ex.shell(m - 2);
      if (!a.empty()) guard = std::min(guard, Region::distance(a, hm));
    }
    Region b2 = ex.shell(m + 2);
    if (!b2.empty()) guard = std::min(guard, Region::distance(hm, b2));
    double eta = std::min(0.5 * d_cells, guard / 3.0);
    if (!std::isfinite(eta)) eta = cover.params.period();
    cover.params.eta[m] = eta;
  }
}

struct PropertyReport {
  struct Item {
    int index = 0;
    bool pass = false;
    std::string witness;  // empty when pass
  };
  std::vector<Item> items;
  bool all_pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& it : items) {
      os << "property " << it.index << ": " << (it.pass ? "pass" : "FAIL");
      if (!it.pass) os << "  [" << it.witness << "]";
      os << "\n";
    }
    return os.str();
  }
};

// The seven cover properties: discreteness, (n+1)-coverage, diameter,
// refinement of the open bands U_m, finiteness against K_m, and the two
// buffered-shell separations.
inline PropertyReport verify_cover(const LevelCover& cover, const Exhaustion& ex,
                                   const std::vector<Point>& samples) {
  PropertyReport rep;
  const LevelParams& lp = cover.params;
  int n = lp.n;
  auto fail = [&](int idx, const std::string& w) {
    rep.items.push_back({idx, false, w});
  };
  auto pass = [&](int idx) { rep.items.push_back({idx, true, ""}); };

  // (1) each family is discrete: distinct cells keep a positive gap
  {
    bool ok = true;
    std::string w;
    double min_gap = lp.gap_width();
    for (int f = 0; f < int(cover.families.size()) && ok; ++f) {
      const auto& cells = cover.families[f];
      for (size_t i = 0; i + 1 < cells.size() && ok; ++i) {
        // raster order: the next cell differs in some lattice coordinate
        Box a = cell_box(lp, cells[i]);
        Box b = cell_box(lp, cells[i + 1]);
        double d = Box::distance(a, b);
        if (cells[i].lattice == cells[i + 1].lattice || d < std::min(min_gap, lp.u())) {
          ok = false;
          std::ostringstream os;
          os << "family " << f + 1 << " cells " << i << "," << i + 1 << " gap " << d;
          w = os.str();
        }
      }
    }
    ok ? pass(1) : fail(1, w);
  }

  // (2) every sample point lies in at least n+1 cells
  {
    bool ok = true;
    std::string w;
    for (const Point& x : samples) {
      if (!ex.domain_contains(x)) continue;
      int cnt = int(covering_cells(cover, x).size());
      if (cnt < n + 1) {
        ok = false;
        std::ostringstream os;
        os << "point covered by " << cnt << " < " << n + 1 << " cells";
        w = os.str();
        break;
      }
    }
    ok ? pass(2) : fail(2, w);
  }

  // (3) diam S < gamma for every cell
  {
    bool ok = true;
    std::string w;
    for (int f = 0; f < int(cover.families.size()) && ok; ++f)
      for (const Cell& c : cover.families[f]) {
        double d = cell_box(lp, c).diameter();
        if (!(d < lp.gamma)) {
          ok = false;
          std::ostringstream os;
          os << "family " << f + 1 << " diam " << d << " >= gamma " << lp.gamma;
          w = os.str();
          break;
        }
      }
    ok ? pass(3) : fail(3, w);
  }

  // (4) every cell fits inside some U_m
  {
    bool ok = true;
    std::string w;
    for (int f = 0; f < int(cover.families.size()) && ok; ++f)
      for (const Cell& c : cover.families[f]) {
        Box b = cell_box(lp, c);
        double lo = b.min_norm(), hi = b.max_norm_sup();
        bool found = false;
        int m0 = std::max(0, int(std::floor(lo)));
        for (int m = m0; m <= m0 + 2 && !found; ++m) {
          bool above = (m == 0) ? true : lo > double(m - 1);
          if (above && hi < double(m + 1)) found = true;
        }
        if (!found) {
          ok = false;
          std::ostringstream os;
          os << "family " << f + 1 << " cell norm range [" << lo << "," << hi << "] fits no U_m";
          w = os.str();
          break;
        }
      }
    ok ? pass(4) : fail(4, w);
  }

  // (5) cells meeting K_m form a finite set (exact enumeration bound)
  {
    bool ok = true;
    std::string w;
    for (int m = 1; m <= lp.k && ok; ++m) {
      Region km = ex.compact(m);
      if (km.empty()) continue;
      size_t cnt = 0;
      for (int f = 0; f < int(cover.families.size()); ++f)
        for (const Cell& c : cover.families[f])
          if (km.intersects_box_closed(cell_box(lp, c))) ++cnt;
      double per_axis = 2.0 * double(m) / lp.period() + 2.0;
      double bound = double(2 * n + 1) * std::pow(per_axis, n);
      if (!(double(cnt) <= bound)) {
        ok = false;
        std::ostringstream os;
        os << "K_" << m << " meets " << cnt << " cells, bound " << bound;
        w = os.str();
      }
    }
    ok ? pass(5) : fail(5, w);
  }

  // (6) S(H_m, eta^m) misses every cell whose closure misses H_m
  {
    bool ok = true;
    std::string w;
    for (int m = 1; m + 1 < int(lp.eta.size()) + 0 && ok; ++m) {
      if (m >= int(lp.eta.size()) || lp.eta[m] <= 0.0) continue;
      Region hm = ex.shell(m);
      if (hm.empty()) continue;
      for (int f = 0; f < int(cover.families.size()) && ok; ++f)
        for (const Cell& c : cover.families[f]) {
          Box b = cell_box(lp, c);
          if (hm.intersects_box_closed(b)) continue;
          Region rb;
          rb.add(b);
          double d = Region::distance(hm, rb);
          if (!(d > lp.eta[m])) {
            ok = false;
            std::ostringstream os;
            os << "cell at distance " << d << " <= eta_" << m << " = " << lp.eta[m];
            w = os.str();
            break;
          }
        }
    }
    ok ? pass(6) : fail(6, w);
  }

  // (7) closed buffered shells two indices apart stay disjoint
  {
    bool ok = true;
    std::string w;
    for (int m = 2; m < int(lp.eta.size()) - 1 && ok; ++m) {
      Region a = ex.shell(m - 1), b = ex.shell(m + 1);
      if (a.empty() || b.empty()) continue;
      double ea = (m - 1 < int(lp.eta.size())) ? lp.eta[m - 1] : 0.0;
      double eb = (m + 1 < int(lp.eta.size())) ? lp.eta[m + 1] : 0.0;
      double d = Region::distance(a, b);
      if (!(d > ea + eb)) {
        ok = false;
        std::ostringstream os;
        os << "d(H_" << m - 1 << ",H_" << m + 1 << ") = " << d << " <= " << ea + eb;
        w = os.str();
      }
    }
    ok ? pass(7) : fail(7, w);
  }
  return rep;
}

// Deterministic sample cloud on K_m for coverage checks.  Offsets avoid
// shell boundaries, where the open bands U_m are not closed.
inline std::vector<Point> sample_points(const Exhaustion& ex, int m, size_t count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-double(m), double(m));
  std::vector<Point> pts;
  pts.reserve(count);
  while (pts.size() < count) {
    Point x(ex.dim());
    for (int a = 0; a < ex.dim(); ++a) x[a] = dist(rng);
    if (!ex.domain_contains(x)) continue;
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace kst
