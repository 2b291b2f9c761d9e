#pragma once

#include <cstring>
#include <map>
#include <optional>
#include <unordered_set>

#include "kst/cover.hpp"

namespace kst {

// Dense per-family numerator table for one materialized ladder level.
// value(cell) = slot / denom, an exact rational; SLOT_ABSENT marks lattice
// positions outside the built region.
struct FamilyValues {
  static constexpr int32_t SLOT_ABSENT = INT32_MIN;
  std::vector<int64_t> jmin, jmax;  // inclusive lattice ranges per axis
  std::vector<int32_t> slots;
  uint64_t denom = 2;

  int dim() const { return int(jmin.size()); }

  size_t index_of(const std::vector<int64_t>& j) const {
    size_t idx = 0, mul = 1;
    for (int a = 0; a < dim(); ++a) {
      idx += size_t(j[a] - jmin[a]) * mul;
      mul *= size_t(jmax[a] - jmin[a] + 1);
    }
    return idx;
  }

  bool in_range(const std::vector<int64_t>& j) const {
    for (int a = 0; a < dim(); ++a)
      if (j[a] < jmin[a] || j[a] > jmax[a]) return false;
    return true;
  }

  int32_t slot_at(const std::vector<int64_t>& j) const {
    if (!in_range(j)) return SLOT_ABSENT;
    return slots[index_of(j)];
  }

  // evaluation beyond the build bound clamps to the boundary cell
  int32_t slot_clamped(std::vector<int64_t> j) const {
    for (int a = 0; a < dim(); ++a) j[a] = std::clamp(j[a], jmin[a], jmax[a]);
    return slots[index_of(j)];
  }

  double value_of_slot(int32_t s) const { return double(s) / double(denom); }
};

struct LadderLevel {
  LevelParams params;
  std::vector<FamilyValues> fams;
};

// Per-axis location of x against one family's lattice.
struct AxisLoc {
  int64_t j = 0;      // containing cell (in_cell), else left cell of the gap
  bool in_cell = false;
  double frac = 0.0;  // gap fraction: 0 at the left cell's edge, 1 at the right's
};

// Exact for dyadic u: t = x * 2^-u_exp is an exact double, and the
// floor/offset correction below recovers the exact lattice residue.
inline AxisLoc axis_locate(double x, int family, const LevelParams& lp) {
  AxisLoc loc;
  const double P = double(lp.period_u());
  const double L = double(lp.side_u());
  const double S = double(lp.shift_u() * family);
  double t = std::ldexp(x, -lp.u_exp);
  int64_t j;
  double off;
  if (std::abs(t) >= 9007199254740992.0) {  // 2^53: t is integer-valued; use int64
    int64_t T = int64_t(t);
    int64_t rel = T - int64_t(lp.shift_u()) * family;
    int64_t Pi = lp.period_u();
    int64_t q = rel / Pi;
    if (rel % Pi < 0) --q;
    j = q;
    off = double(rel - q * Pi);
  } else {
    double rel = t - S;
    j = int64_t(std::floor(rel / P));
    off = rel - double(j) * P;
    while (off < 0.0) {
      --j;
      off += P;
    }
    while (off >= P) {
      ++j;
      off -= P;
    }
  }
  if (off > 0.0 && off < L) {
    loc.j = j;
    loc.in_cell = true;
  } else if (off == 0.0) {
    loc.j = j - 1;
    loc.frac = 1.0;
  } else {
    loc.j = j;
    loc.frac = (off - L) / (P - L);
  }
  return loc;
}

// Deep-level descriptor (lazy; dimension 1 only).  Values sit inside the
// level-2 corridors: in-parent cells at parent + eps2/8 + rank*2^(1-q),
// bridge cells at f2_max + 5*eps2/8 + tie*2^(1-q).
struct DeepLevelDesc {
  bool present = false;
  LevelParams params;
  int q = 82;
  double eps2 = 0.0;
};

class InnerLadder {
 public:
  struct Config {
    int n = 1;
    double build_bound = 5.5;  // values materialized for cells meeting [-B, B]^n
    int fine_u_exp = -17;      // level-2 cell unit exponent
    bool deep_level = true;    // request the lazy third level (n == 1 only)
  };

  InnerLadder(const Exhaustion& ex, const Config& cfg) : ex_(ex), cfg_(cfg) {
    if (cfg.n != ex.dim()) throw std::invalid_argument("InnerLadder: dimension mismatch");
    build();
  }

  int families() const { return 2 * cfg_.n + 1; }
  int levels() const { return int(levels_.size()) + (deep_.present ? 1 : 0); }
  int materialized_levels() const { return int(levels_.size()); }
  const LadderLevel& level(int k) const { return levels_.at(size_t(k) - 1); }
  const DeepLevelDesc& deep() const { return deep_; }
  const Exhaustion& exhaustion() const { return ex_; }
  const Config& config() const { return cfg_; }
  bool resolution_limited() const { return resolution_limited_; }
  const std::string& resolution_note() const { return resolution_note_; }

  double eps(int k) const {
    if (k <= materialized_levels()) return level(k).params.eps;
    if (deep_.present && k == materialized_levels() + 1) return deep_.params.eps;
    throw std::out_of_range("eps: level not built");
  }

  double eval_ladder(int k, int family, const Point& x) const {
    if (k <= materialized_levels()) return eval_grid(level(k), family, x);
    if (deep_.present && k == materialized_levels() + 1) {
      double base, delta;
      deep_eval(family, x[0], base, delta);
      return base + delta;
    }
    throw std::out_of_range("eval_ladder: level not built");
  }

  // f_3(x) - f_2(x), computed in offset space (meaningful far below the
  // double rounding floor of the absolute values)
  double deep_delta(int family, const Point& x) const {
    if (!deep_.present) throw std::logic_error("deep_delta: no deep level");
    double base, delta;
    deep_eval(family, x[0], base, delta);
    double f2 = eval_grid(levels_.back(), family, x);
    return (base - f2) + delta;
  }

  // The limit certificate |Phi - f_k| <= eps_k holds from level 2 up (deeper
  // values are corridor-confined within the level-2 image intervals).
  std::pair<double, double> eval_inner(int family, const Point& x, double tol) const {
    for (int k = 2; k <= materialized_levels(); ++k)
      if (eps(k) <= tol) return {eval_ladder(k, family, x), eps(k)};
    throw std::runtime_error("eval_inner: insufficient levels built for requested tolerance");
  }

  std::pair<double, double> image_interval(int k, int family, const std::vector<int64_t>& lattice) const {
    const LadderLevel& lv = level(k);
    int32_t s = lv.fams[family].slot_at(lattice);
    if (s == FamilyValues::SLOT_ABSENT) throw std::out_of_range("image_interval: unknown cell");
    double c = lv.fams[family].value_of_slot(s);
    return {c, c + lv.params.eps};
  }

  // ---- deep level internals (dimension 1, used by tests and eval) ----

  void deep_eval(int family, double x, double& base, double& delta) const {
    const LadderLevel& L2 = levels_.back();
    AxisLoc loc = axis_locate(x, family, deep_.params);
    double f2x = eval_grid(L2, family, {x});
    if (loc.in_cell) {
      deep_cell_value(family, loc.j, base, delta);
      return;
    }
    double bl, dl, br, dr;
    deep_cell_value(family, loc.j, bl, dl);
    deep_cell_value(family, loc.j + 1, br, dr);
    double v = (1.0 - loc.frac) * ((bl - f2x) + dl) + loc.frac * ((br - f2x) + dr);
    v = std::clamp(v, deep_.eps2 / 16.0, deep_.eps2 * 15.0 / 16.0);
    base = f2x;
    delta = v;
  }

  void deep_cell_value(int family, int64_t j, double& base, double& delta) const {
    const LadderLevel& L2 = levels_.back();
    const FamilyValues& fv = L2.fams[family];
    const int64_t P3 = deep_.params.period_u(), L3 = deep_.params.side_u(), S3 = deep_.params.shift_u();
    int shift = L2.params.u_exp - deep_.params.u_exp;  // u2 = u3 * 2^shift
    int64_t A = S3 * family + j * P3;                  // child closure [A, A+L3] in deep units
    int64_t P2 = L2.params.period_u() << shift;
    int64_t S2 = int64_t(L2.params.shift_u()) * family << shift;
    int64_t L2u = L2.params.side_u() << shift;
    int64_t rel = A - S2;
    int64_t j2 = rel / P2;
    if (rel % P2 < 0) --j2;
    int64_t off2 = rel - j2 * P2;
    double step = std::ldexp(1.0, 1 - deep_.q);
    if (off2 > 0 && off2 + L3 < L2u) {
      int32_t s = fv.slot_clamped({j2});
      base = fv.value_of_slot(s);
      int64_t rank = off2 / P3;
      delta = deep_.eps2 / 8.0 + double(rank) * step;
      return;
    }
    // bridge cell: f2 extrema over the closure sit at its endpoints
    double xa = std::ldexp(double(A), deep_.params.u_exp);
    double xb = std::ldexp(double(A + L3), deep_.params.u_exp);
    double fa = eval_grid(L2, family, {xa});
    double fb = eval_grid(L2, family, {xb});
    double f2max = std::max(fa, fb);
    int64_t gap_id = ((j2 % 1024) + 1024) % 1024 + 1;
    base = f2max;
    delta = deep_.eps2 * 5.0 / 8.0 + double(gap_id) * step;
  }

  double eval_grid(const LadderLevel& lv, int family, const Point& x) const {
    int n = cfg_.n;
    const FamilyValues& fv = lv.fams[family];
    AxisLoc loc[4];
    for (int a = 0; a < n; ++a) loc[a] = axis_locate(x[a], family, lv.params);
    double acc = 0.0;
    int corners = 1 << n;
    std::vector<int64_t> j(n);
    for (int cmask = 0; cmask < corners; ++cmask) {
      double wgt = 1.0;
      for (int a = 0; a < n && wgt != 0.0; ++a) {
        bool right = (cmask >> a) & 1;
        if (loc[a].in_cell) {
          if (right) wgt = 0.0;
          else j[a] = loc[a].j;
        } else {
          wgt *= right ? loc[a].frac : (1.0 - loc[a].frac);
          j[a] = loc[a].j + (right ? 1 : 0);
        }
      }
      if (wgt == 0.0) continue;
      acc += wgt * fv.value_of_slot(fv.slot_clamped(j));
    }
    return acc;
  }

 private:
  Exhaustion ex_;
  Config cfg_;
  std::vector<LadderLevel> levels_;
  DeepLevelDesc deep_;
  PrimeSource primes_;
  bool resolution_limited_ = false;
  std::string resolution_note_;

  void build() {
    int n = cfg_.n;
    int c = 1;
    while ((1 << c) <= 16 * n + 1) ++c;
    LevelParams lp1;
    lp1.n = n;
    lp1.k = 1;
    lp1.gamma = 1.0;
    lp1.u_exp = -c;
    assign_level(lp1, 1.0 / 64.0);

    LevelParams lp2;
    lp2.n = n;
    lp2.k = 2;
    lp2.u_exp = cfg_.fine_u_exp;
    lp2.gamma = std::ldexp(double(2 * (16 * n + 1)), lp2.u_exp);
    assign_level(lp2, levels_[0].params.eps * 0.5);

    if (cfg_.deep_level && n == 1) {
      deep_.present = true;
      deep_.params.n = 1;
      deep_.params.k = 3;
      deep_.params.u_exp = -54;
      deep_.params.gamma = std::ldexp(34.0, -54);
      deep_.q = 85;
      deep_.eps2 = levels_[1].params.eps;
      deep_.params.eps = std::ldexp(1.0, -88);
      for (int i = 0; i < families(); ++i) deep_.params.primes.push_back(primes_.next());
      deep_.params.check_invariants();
      double slope = measured_max_bridge_slope(levels_[1]);
      double osc = slope * std::ldexp(17.0, -54);
      if (!(osc < deep_.eps2 * 3.0 / 16.0)) {
        deep_.present = false;
        resolution_limited_ = true;
        resolution_note_ = "level 3 corridor narrower than the level-2 bridge oscillation";
      }
    } else if (cfg_.deep_level) {
      resolution_limited_ = true;
      resolution_note_ =
          "level 3 denominators are resolution-limited: corridor widths fall below the "
          "double-precision value grid";
    }
  }

  // window with integer endpoints: intersection of the (m-1, m+1) ranges of
  // every shell within one gap width of the cell box
  static std::pair<int, int> shell_window(const Exhaustion& ex, const Box& b, double w) {
    Box infl = b.inflated(w);
    double lo_n = infl.min_norm(), hi_n = infl.max_norm_sup();
    int lo_w = INT32_MIN, hi_w = INT32_MAX;
    int m_start = std::max(1, int(std::floor(lo_n)));
    for (int m = m_start; double(m - 1) <= hi_n; ++m) {
      Region h = ex.shell(m);
      if (h.empty()) {
        if (double(m) > hi_n) break;
        continue;
      }
      if (h.intersects_box_closed(infl)) {
        lo_w = std::max(lo_w, m - 1);
        hi_w = std::min(hi_w, m + 1);
      }
    }
    if (lo_w == INT32_MIN) {
      int m = std::max(1, int(std::ceil(lo_n)));
      lo_w = m - 1;
      hi_w = m + 1;
    }
    return {lo_w, hi_w};
  }

  void assign_level(LevelParams lp, double eps_cap) {
    int n = cfg_.n;
    LevelCover cover = build_level(ex_, lp, cfg_.build_bound);
    double w = lp.gap_width();

    LadderLevel out;
    for (int f = 0; f < families(); ++f) {
      const auto& cells = cover.families[f];
      std::vector<size_t> order(cells.size());
      std::vector<std::pair<int, int>> win(cells.size());
      std::vector<double> target(cells.size());
      for (size_t ci = 0; ci < cells.size(); ++ci) {
        Box b = cell_box(lp, cells[ci]);
        win[ci] = shell_window(ex_, b, w);
        Point c = b.center();
        // norm-tracking target keeps value steps between spatial neighbors
        // at slot scale; in dimension 1 the two branches of the norm get
        // disjoint value bands so image intervals never interleave across
        // the origin
        double t = max_norm(c) + 0.5;
        if (n == 1) {
          double sep = 0.2 * std::min(1.0, max_norm(c) / 0.5);
          t += (c[0] < 0.0) ? -sep : sep;
        }
        target[ci] = t;
        order[ci] = ci;
      }
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (target[a] != target[b]) return target[a] < target[b];
        return cells[a].lattice < cells[b].lattice;
      });

      uint64_t r = primes_.next();
      std::vector<int32_t> assigned;
      while (!try_assign_family(cells, order, win, target, r, assigned)) {
        r = primes_.next_at_least(2 * r);
        if (r > (uint64_t(1) << 31))
          throw std::overflow_error("assign_level: prime escalation exceeds the slot range");
      }
      lp.primes.push_back(r);

      FamilyValues fv;
      fv.denom = r;
      fv.jmin.assign(n, INT64_MAX);
      fv.jmax.assign(n, INT64_MIN);
      for (const Cell& cc : cells)
        for (int a = 0; a < n; ++a) {
          fv.jmin[a] = std::min(fv.jmin[a], cc.lattice[a]);
          fv.jmax[a] = std::max(fv.jmax[a], cc.lattice[a]);
        }
      size_t total = 1;
      for (int a = 0; a < n; ++a) total *= size_t(fv.jmax[a] - fv.jmin[a] + 1);
      fv.slots.assign(total, FamilyValues::SLOT_ABSENT);
      for (size_t ci = 0; ci < cells.size(); ++ci)
        fv.slots[fv.index_of(cells[ci].lattice)] = assigned[ci];
      out.fams.push_back(std::move(fv));
    }

    double log2prod = 0.0;
    for (uint64_t r : lp.primes) log2prod += std::log2(double(r));
    double cap_b = std::ldexp(1.0, -(int(std::floor(log2prod)) + 2));
    lp.eps = std::min(eps_cap, cap_b);
    lp.check_invariants();
    out.params = lp;
    levels_.push_back(std::move(out));
  }

  // Each cell takes the free multiple of 1/r nearest its target value,
  // clamped into the shell window (ties toward the window floor).
  static bool try_assign_family(const std::vector<Cell>& cells, const std::vector<size_t>& order,
                                const std::vector<std::pair<int, int>>& win,
                                const std::vector<double>& target, uint64_t r,
                                std::vector<int32_t>& assigned) {
    assigned.assign(cells.size(), 0);
    std::unordered_set<int64_t> used;
    used.reserve(cells.size() * 2);
    for (size_t oi = 0; oi < order.size(); ++oi) {
      size_t ci = order[oi];
      int64_t t_lo = int64_t(win[ci].first) * int64_t(r) + 1;
      int64_t t_hi = int64_t(win[ci].second) * int64_t(r) - 1;
      if (t_lo > t_hi) return false;
      int64_t t0 = std::clamp(int64_t(std::llround(target[ci] * double(r))), t_lo, t_hi);
      int64_t found = -1;
      for (int64_t d = 0;; ++d) {
        int64_t down = t0 - d, up = t0 + d;
        bool down_ok = down >= t_lo, up_ok = up <= t_hi;
        if (!down_ok && !up_ok) break;
        if (down_ok && !used.count(down)) {
          found = down;
          break;
        }
        if (d > 0 && up_ok && !used.count(up)) {
          found = up;
          break;
        }
      }
      if (found < 0) return false;
      used.insert(found);
      if (found > INT32_MAX) return false;
      assigned[ci] = int32_t(found);
    }
    return true;
  }

  double measured_max_bridge_slope(const LadderLevel& lv) const {
    double max_step = 0.0;
    for (int f = 0; f < families(); ++f) {
      const FamilyValues& fv = lv.fams[f];
      int n = fv.dim();
      std::vector<int64_t> j(fv.jmin), jn(n);
      while (true) {
        int32_t s = fv.slot_at(j);
        if (s != FamilyValues::SLOT_ABSENT) {
          for (int a = 0; a < n; ++a) {
            jn = j;
            jn[a] += 1;
            int32_t s2 = fv.slot_at(jn);
            if (s2 != FamilyValues::SLOT_ABSENT)
              max_step = std::max(max_step, std::abs(double(s2) - double(s)) / double(fv.denom));
          }
        }
        int a = 0;
        while (a < n) {
          if (++j[a] <= fv.jmax[a]) break;
          j[a] = fv.jmin[a];
          ++a;
        }
        if (a == n) break;
      }
    }
    return max_step / lv.params.gap_width();
  }
};

}  // namespace kst
