#pragma once

#include <thread>

#include "kst/annulus.hpp"
#include "kst/ladder.hpp"
#include "kst/piecewise_linear.hpp"

namespace kst {

struct SweepConfig {
  double delta = 0.1;          // oscillation budget, fraction of the residual sup
  double theta_commit = 0.71;  // commit bound on the measured per-sweep ratio
  int max_sweeps = 60;
  double tol = 1e-3;           // stop threshold on the residual sup
  bool sequential = true;      // family updates see earlier families' increments
  bool bridge_nodes = true;    // shape the increment between image intervals
  int threads = 2;

  double theta_target(int n) const {
    return double(n) / double(n + 1) + double(2 * n + 1) * delta / double(n + 1);
  }
};

struct SweepRecord {
  int sweep = 0;
  double residual_sup = 0.0;
  double ratio = 0.0;
};

struct AnnulusSolution {
  int s = 1;
  std::vector<PiecewiseLinear1D> g;
  std::vector<SweepRecord> history;
  double residual_sup = 0.0;
  bool reached_tol = false;
  std::string note;
};

namespace detail {

// Value-axis support of one family's increment: the active cells' image
// interval anchors plus interior nodes between consecutive anchors.  The
// increment is linear between consecutive positions and tapers to zero half
// a slot beyond the extremes.
struct ActiveFamily {
  // one entry per breakpoint position, in increasing value order
  std::vector<double> pos;       // value-axis positions
  std::vector<int32_t> kind;     // >= 0: rank of the anchored cell, -1: node
  std::vector<int32_t> rank_to_entry;  // anchor entry per active cell rank

  // per active cell (rank order = increasing slot)
  std::vector<int32_t> slots_sorted;
  std::vector<size_t> flat_of_sorted;
  std::vector<Point> center_of_sorted;
  double denom = 2.0;

  size_t cells() const { return slots_sorted.size(); }
  double value(size_t rank) const { return double(slots_sorted[rank]) / denom; }
};

inline ActiveFamily build_active(const LadderLevel& lv, int family, double bound, int nodes_per_gap) {
  const FamilyValues& fv = lv.fams[family];
  int n = fv.dim();
  ActiveFamily af;
  af.denom = double(fv.denom);
  const double u = lv.params.u();
  const int64_t P = lv.params.period_u(), L = lv.params.side_u(), S = lv.params.shift_u();
  std::vector<int64_t> lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    double bu = bound / u;
    lo[a] = std::max(int64_t(std::floor((-bu - double(S * family) - double(L)) / double(P))), fv.jmin[a]);
    hi[a] = std::min(int64_t(std::ceil((bu - double(S * family)) / double(P))), fv.jmax[a]);
  }
  std::vector<std::pair<int32_t, size_t>> tmp;
  std::vector<int64_t> j(lo);
  bool any = n > 0;
  for (int a = 0; a < n; ++a) any = any && lo[a] <= hi[a];
  if (any) {
    while (true) {
      size_t flat = fv.index_of(j);
      if (fv.slots[flat] != FamilyValues::SLOT_ABSENT) tmp.push_back({fv.slots[flat], flat});
      int a = 0;
      while (a < n) {
        if (++j[a] <= hi[a]) break;
        j[a] = lo[a];
        ++a;
      }
      if (a == n) break;
    }
  }
  std::sort(tmp.begin(), tmp.end());
  size_t m = tmp.size();
  af.slots_sorted.resize(m);
  af.flat_of_sorted.resize(m);
  af.center_of_sorted.resize(m);
  for (size_t r = 0; r < m; ++r) {
    af.slots_sorted[r] = tmp[r].first;
    af.flat_of_sorted[r] = tmp[r].second;
    std::vector<int64_t> jj(n);
    size_t rem = tmp[r].second;
    for (int a = 0; a < n; ++a) {
      size_t dim = size_t(fv.jmax[a] - fv.jmin[a] + 1);
      jj[a] = fv.jmin[a] + int64_t(rem % dim);
      rem /= dim;
    }
    Point c(n);
    for (int a = 0; a < n; ++a) c[a] = (double(S * family + jj[a] * P) + 0.5 * double(L)) * u;
    af.center_of_sorted[r] = std::move(c);
  }
  // breakpoint skeleton: anchors at slot values, nodes between
  af.rank_to_entry.assign(m, -1);
  for (size_t r = 0; r < m; ++r) {
    double v = af.value(r);
    if (r > 0 && nodes_per_gap > 0) {
      double v0 = af.value(r - 1);
      for (int q = 1; q <= nodes_per_gap; ++q) {
        double t = double(q) / double(nodes_per_gap + 1);
        double nv = v0 + t * (v - v0);
        if (nv > af.pos.back() && nv < v) {
          af.pos.push_back(nv);
          af.kind.push_back(-1);
        }
      }
    }
    af.rank_to_entry[r] = int32_t(af.pos.size());
    af.pos.push_back(v);
    af.kind.push_back(int32_t(r));
  }
  return af;
}

// increment function: w over the breakpoint skeleton, zero taper outside
inline double eval_active_pl(const ActiveFamily& af, const std::vector<double>& w, double v) {
  const auto& pos = af.pos;
  if (pos.empty()) return 0.0;
  double tap = 0.5 / af.denom;
  if (v <= pos.front()) {
    double d = pos.front() - v;
    return d >= tap ? 0.0 : w.front() * (1.0 - d / tap);
  }
  if (v >= pos.back()) {
    double d = v - pos.back();
    return d >= tap ? 0.0 : w.back() * (1.0 - d / tap);
  }
  size_t hi = size_t(std::upper_bound(pos.begin(), pos.end(), v) - pos.begin());
  size_t lo = hi - 1;
  double frac = (v - pos[lo]) / (pos[hi] - pos[lo]);
  return w[lo] + frac * (w[hi] - w[lo]);
}

struct Grid {
  int n = 1;
  double lo = 0.0, pitch = 1.0;
  int64_t per_axis = 0;
  std::vector<double> values;

  size_t size() const { return values.size(); }
  Point point(size_t idx) const {
    Point x(n);
    for (int a = 0; a < n; ++a) {
      x[a] = lo + double(idx % size_t(per_axis)) * pitch;
      idx /= size_t(per_axis);
    }
    return x;
  }
};

template <typename F>
inline void parallel_chunks(size_t total, int threads, F&& fn) {
  if (threads <= 1 || total < 8192) {
    fn(0, size_t(0), total);
    return;
  }
  size_t chunk = (total + size_t(threads) - 1) / size_t(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    size_t b = size_t(t) * chunk, e = std::min(total, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, t, b, e] { fn(t, b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

class AnnulusSolver {
 public:
  AnnulusSolver(const InnerLadder& ladder, const AnnulusProblem& problem, const SweepConfig& cfg)
      : ladder_(ladder), prob_(problem), cfg_(cfg), n_(ladder.config().n) {
    level_ = ladder.materialized_levels();
    fams_ = ladder_.families();
    const LadderLevel& lv = ladder_.level(level_);
    int nodes = cfg_.bridge_nodes ? 3 : 0;
    for (int f = 0; f < fams_; ++f)
      active_.push_back(detail::build_active(lv, f, prob_.window_bound, nodes));
    inc_.assign(size_t(fams_), {});
    for (int f = 0; f < fams_; ++f) inc_[f].assign(active_[f].pos.size(), 0.0);
    init_grid();
  }

  double residual_at(const Point& x) const {
    double v = prob_.f_s(x);
    for (int f = 0; f < fams_; ++f) {
      double phi = ladder_.eval_ladder(level_, f, x);
      v -= detail::eval_active_pl(active_[f], inc_[f], phi);
    }
    return v;
  }

  // One tentative sweep (applied to the state); returns the measured ratio.
  double tentative_sweep(std::vector<std::vector<double>>& delta) {
    double R = sup_;
    double clamp_v = R / double(n_ + 1);
    delta.assign(size_t(fams_), {});
    if (cfg_.sequential) {
      for (int f = 0; f < fams_; ++f) {
        compute_family_delta(f, clamp_v, delta[f]);
        apply_family(f, delta[f], +1.0);
      }
    } else {
      for (int f = 0; f < fams_; ++f) compute_family_delta(f, clamp_v, delta[f]);
      for (int f = 0; f < fams_; ++f) apply_family(f, delta[f], +1.0);
    }
    double Rp = grid_sup();
    return (R > 0.0) ? Rp / R : 0.0;
  }

  void rollback(const std::vector<std::vector<double>>& delta) {
    for (int f = 0; f < fams_; ++f) apply_family(f, delta[f], -1.0);
    sup_ = grid_sup();
  }

  AnnulusSolution solve() {
    AnnulusSolution out;
    out.s = prob_.s;
    int sweep = 0;
    while (sup_ > cfg_.tol) {
      if (sweep >= cfg_.max_sweeps) {
        out.note = "sweep budget exhausted";
        break;
      }
      std::vector<std::vector<double>> delta;
      double ratio = tentative_sweep(delta);
      if (!(ratio <= cfg_.theta_commit)) {
        rollback(delta);
        out.note = "resolution-limited stall (no finer level to raise to)";
        break;
      }
      sup_ = grid_sup();
      ++sweep;
      out.history.push_back({sweep, sup_, ratio});
    }
    out.residual_sup = sup_;
    out.reached_tol = sup_ <= cfg_.tol;
    out.g = build_pls();
    return out;
  }

  double residual_sup() const { return sup_; }
  int level_used() const { return level_; }
  const detail::Grid& grid() const { return grid_; }

  double sampled_osc(size_t samples_per_family = 256) const {
    double osc = 0.0;
    double off = ladder_.level(level_).params.side() * 0.375;
    for (int f = 0; f < fams_; ++f) {
      const auto& af = active_[f];
      if (af.cells() == 0) continue;
      size_t step = std::max<size_t>(1, af.cells() / samples_per_family);
      for (size_t r = 0; r < af.cells(); r += step) {
        Point c = af.center_of_sorted[r], c2 = c;
        c2[0] += off;
        osc = std::max(osc, std::abs(residual_at(c) - residual_at(c2)));
      }
    }
    return osc;
  }

 private:
  const InnerLadder& ladder_;
  AnnulusProblem prob_;
  SweepConfig cfg_;
  int n_, fams_, level_;
  std::vector<detail::ActiveFamily> active_;
  std::vector<std::vector<double>> inc_;  // per family, per breakpoint entry
  detail::Grid grid_;
  double sup_ = 0.0;

  void init_grid() {
    const LadderLevel& lv = ladder_.level(level_);
    double target = lv.params.side() / 3.0;
    int e = 0;
    while (std::ldexp(1.0, -e) > target) ++e;
    grid_.n = n_;
    grid_.pitch = std::ldexp(1.0, -e);
    grid_.lo = -prob_.window_bound;
    grid_.per_axis = int64_t(std::floor(2.0 * prob_.window_bound / grid_.pitch)) + 1;
    size_t total = 1;
    for (int a = 0; a < n_; ++a) total *= size_t(grid_.per_axis);
    grid_.values.resize(total);
    detail::parallel_chunks(total, cfg_.threads, [&](int, size_t b, size_t e2) {
      for (size_t i = b; i < e2; ++i) grid_.values[i] = prob_.f_s(grid_.point(i));
    });
    sup_ = grid_sup();
  }

  // cell anchors from center samples, interior nodes from bridge samples
  void compute_family_delta(int f, double clamp_v, std::vector<double>& out) {
    const auto& af = active_[f];
    out.assign(af.pos.size(), 0.0);
    detail::parallel_chunks(af.cells(), cfg_.threads, [&](int, size_t b, size_t e) {
      for (size_t r = b; r < e; ++r) {
        double rc = residual_at(af.center_of_sorted[r]);
        out[size_t(af.rank_to_entry[r])] = std::clamp(rc / double(n_ + 1), -clamp_v, clamp_v);
      }
    });
    if (cfg_.bridge_nodes) bridge_node_pass(f, clamp_v, out);
  }

  // For every pair of axis-adjacent active cells, the bridge between them
  // sweeps the value stretch between their anchors; interior nodes in that
  // stretch take the residual sampled at the bridge preimages of their
  // values.  Demands are averaged when several bridges cross one node.
  void bridge_node_pass(int f, double clamp_v, std::vector<double>& out) {
    const auto& af = active_[f];
    const LadderLevel& lv = ladder_.level(level_);
    const FamilyValues& fv = lv.fams[f];
    int n = fv.dim();
    const double u = lv.params.u();
    const int64_t P = lv.params.period_u(), L = lv.params.side_u(), S = lv.params.shift_u();
    std::vector<double> sum(af.pos.size(), 0.0);
    std::vector<int> cnt(af.pos.size(), 0);
    std::vector<int64_t> jj(n);
    for (size_t r = 0; r < af.cells(); ++r) {
      size_t rem = af.flat_of_sorted[r];
      for (int a = 0; a < n; ++a) {
        size_t dim = size_t(fv.jmax[a] - fv.jmin[a] + 1);
        jj[a] = fv.jmin[a] + int64_t(rem % dim);
        rem /= dim;
      }
      double v0 = af.value(r);
      for (int a = 0; a < n; ++a) {
        std::vector<int64_t> jn = jj;
        jn[a] += 1;
        if (!fv.in_range(jn)) continue;
        int32_t s2 = fv.slot_at(jn);
        if (s2 == FamilyValues::SLOT_ABSENT) continue;
        double v1 = double(s2) / af.denom;
        double vlo = std::min(v0, v1), vhi = std::max(v0, v1);
        // entries strictly inside (vlo, vhi)
        size_t b = size_t(std::upper_bound(af.pos.begin(), af.pos.end(), vlo) - af.pos.begin());
        size_t e = size_t(std::lower_bound(af.pos.begin(), af.pos.end(), vhi) - af.pos.begin());
        if (e <= b) continue;
        // bridge gap along axis a: x from cell end to next cell start
        double gap_start = (double(S * f + jj[a] * P) + double(L)) * u;
        double gap_w = double(P - L) * u;
        Point x = af.center_of_sorted[r];
        for (size_t t = b; t < e; ++t) {
          if (af.kind[t] >= 0) continue;  // cell anchors keep center samples
          double frac = (af.pos[t] - v0) / (v1 - v0);
          if (!(frac > 0.0 && frac < 1.0)) continue;
          x[a] = gap_start + frac * gap_w;
          double rc = residual_at(x);
          sum[t] += std::clamp(rc / double(n_ + 1), -clamp_v, clamp_v);
          cnt[t] += 1;
        }
        x[a] = af.center_of_sorted[r][a];
      }
    }
    for (size_t t = 0; t < af.pos.size(); ++t)
      if (cnt[t] > 0) out[t] = sum[t] / double(cnt[t]);
  }

  void apply_family(int f, const std::vector<double>& delta, double sign) {
    for (size_t r = 0; r < delta.size(); ++r) inc_[f][r] += sign * delta[r];
    const auto& af = active_[f];
    detail::parallel_chunks(grid_.size(), cfg_.threads, [&](int, size_t b, size_t e) {
      for (size_t i = b; i < e; ++i) {
        Point x = grid_.point(i);
        double phi = ladder_.eval_ladder(level_, f, x);
        grid_.values[i] -= sign * detail::eval_active_pl(af, delta, phi);
      }
    });
  }

  double grid_sup() const {
    size_t total = grid_.size();
    int threads = std::max(1, cfg_.threads);
    std::vector<double> partial(size_t(threads), 0.0);
    detail::parallel_chunks(total, threads, [&](int t, size_t b, size_t e) {
      double m = 0.0;
      for (size_t i = b; i < e; ++i) m = std::max(m, std::abs(grid_.values[i]));
      partial[size_t(t)] = m;
    });
    double m = 0.0;
    for (double v : partial) m = std::max(m, v);
    return m;
  }

  // Final coordinate increment per family: the accumulated breakpoint values
  // with zero-run trimming; all breakpoints inside [s-2, s+2+1/4].
  std::vector<PiecewiseLinear1D> build_pls() const {
    std::vector<PiecewiseLinear1D> out;
    const double lo_bound = double(prob_.s) - 2.0;
    const double hi_bound = double(prob_.s) + 2.0 + 0.25;
    for (int f = 0; f < fams_; ++f) {
      const auto& af = active_[f];
      const auto& w = inc_[f];
      size_t first = af.pos.size(), last = 0;
      for (size_t t = 0; t < af.pos.size(); ++t)
        if (w[t] != 0.0) {
          first = std::min(first, t);
          last = std::max(last, t);
        }
      if (first == af.pos.size()) {
        out.emplace_back();
        continue;
      }
      double tap = 0.5 / af.denom;
      std::vector<double> xs, ys;
      size_t begin = (first > 0) ? first - 1 : first;
      size_t end = std::min(last + 1, af.pos.size() - 1);
      if (first == begin) {  // taper stub before the first nonzero entry
        double head = std::max(af.pos[first] - tap, lo_bound);
        if (head < af.pos[first]) {
          xs.push_back(head);
          ys.push_back(0.0);
        }
      }
      for (size_t t = begin; t <= end; ++t) {
        if (!xs.empty() && !(af.pos[t] > xs.back())) continue;
        xs.push_back(af.pos[t]);
        ys.push_back((t < first || t > last) ? 0.0 : w[t]);
      }
      if (last == end) {  // taper stub after the last nonzero entry
        double tail = std::min(af.pos[last] + tap, hi_bound);
        if (tail > xs.back()) {
          xs.push_back(tail);
          ys.push_back(0.0);
        }
      }
      out.emplace_back(std::move(xs), std::move(ys));
      out.back() = out.back().simplified(0.0);
    }
    return out;
  }
};

inline AnnulusSolution solve_annulus(const InnerLadder& ladder, const AnnulusProblem& problem,
                                     const SweepConfig& cfg) {
  AnnulusSolver solver(ladder, problem, cfg);
  return solver.solve();
}

inline std::vector<PiecewiseLinear1D> assemble(const std::vector<AnnulusSolution>& parts, int families) {
  std::vector<PiecewiseLinear1D> out(static_cast<size_t>(families));
  for (const auto& part : parts)
    for (int f = 0; f < families; ++f) out[f] = PiecewiseLinear1D::add(out[f], part.g[f]);
  return out;
}

}  // namespace kst
