#pragma once

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "kst/sweep.hpp"

namespace kst {

inline std::string hexf(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double unhexf(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

// The superposition bundle: 2n+1 inner functions (as the built ladder) and
// 2n+1 coordinate functions, plus measured error certificates.
class SuperpositionModel {
 public:
  struct CertEntry {
    double bound = 0.0;  // certified window [-bound, bound]^n
    double pitch = 0.0;
    double error = 0.0;
  };

  SuperpositionModel(std::shared_ptr<InnerLadder> ladder, std::vector<PiecewiseLinear1D> coords,
                     nlohmann::ordered_json build_config)
      : ladder_(std::move(ladder)), coords_(std::move(coords)), config_(std::move(build_config)) {
    if (int(coords_.size()) != ladder_->families())
      throw std::invalid_argument("SuperpositionModel: expected 2n+1 coordinate functions");
  }

  int n() const { return ladder_->config().n; }
  int families() const { return ladder_->families(); }
  const InnerLadder& ladder() const { return *ladder_; }
  const std::vector<PiecewiseLinear1D>& coords() const { return coords_; }
  const std::vector<CertEntry>& certs() const { return certs_; }
  const nlohmann::ordered_json& config() const { return config_; }

  double certified_bound() const {
    double b = 0.0;
    for (const auto& c : certs_) b = std::max(b, c.bound);
    return b;
  }

  // F(x) = sum_i g_i(Phi_i(x)); evaluation at the tolerance-selected level
  double reconstruct(const Point& x, double tol) const {
    int level = pick_level(tol);
    double acc = 0.0;
    for (int f = 0; f < families(); ++f)
      acc += coords_[f](ladder_->eval_ladder(level, f, x));
    return acc;
  }

  int pick_level(double tol) const {
    double lip = 1.0;
    for (const auto& g : coords_) lip = std::max(lip, g.lipschitz());
    double budget = tol / (double(families()) * lip);
    for (int k = 1; k <= ladder_->materialized_levels(); ++k)
      if (ladder_->eps(k) <= budget) return k;
    return ladder_->materialized_levels();
  }

  // max |f - F| over the pitch grid of [-bound, bound]^n
  double certify(const ScalarField& f, double bound, double pitch, double tol, int threads = 2) {
    int level = pick_level(tol);
    int64_t per_axis = int64_t(std::floor(2.0 * bound / pitch)) + 1;
    size_t total = 1;
    for (int a = 0; a < n(); ++a) total *= size_t(per_axis);
    int nt = std::max(1, threads);
    std::vector<double> partial(size_t(nt), 0.0);
    detail::parallel_chunks(total, nt, [&](int t, size_t b, size_t e) {
      double m = 0.0;
      Point x(size_t(n()), 0.0);
      for (size_t i = b; i < e; ++i) {
        size_t idx = i;
        for (int a = 0; a < n(); ++a) {
          x[a] = -bound + double(idx % size_t(per_axis)) * pitch;
          idx /= size_t(per_axis);
        }
        double acc = 0.0;
        for (int fam = 0; fam < families(); ++fam)
          acc += coords_[fam](ladder_->eval_ladder(level, fam, x));
        m = std::max(m, std::abs(f(x) - acc));
      }
      partial[size_t(t)] = m;
    });
    double err = 0.0;
    for (double v : partial) err = std::max(err, v);
    certs_.push_back({bound, pitch, err});
    return err;
  }

  void push_cert(const CertEntry& c) { certs_.push_back(c); }

  // ---- serialization (hex-float numerics, byte-stable) ----

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n();
    j["config"] = config_;
    j["config_hash"] = config_hash();
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (int k = 1; k <= ladder_->materialized_levels(); ++k) {
      const LevelParams& lp = ladder_->level(k).params;
      nlohmann::ordered_json lj;
      lj["k"] = lp.k;
      lj["u_exp"] = lp.u_exp;
      lj["gamma"] = hexf(lp.gamma);
      lj["eps"] = hexf(lp.eps);
      lj["primes"] = lp.primes;
      levels.push_back(lj);
    }
    j["levels"] = levels;
    nlohmann::ordered_json inner = nlohmann::ordered_json::array();
    for (int f = 0; f < families(); ++f) {
      nlohmann::ordered_json fj;
      fj["family"] = f + 1;
      nlohmann::ordered_json lvls = nlohmann::ordered_json::array();
      for (int k = 1; k <= ladder_->materialized_levels(); ++k) {
        const FamilyValues& fv = ladder_->level(k).fams[f];
        nlohmann::ordered_json vj;
        vj["k"] = k;
        vj["denom"] = fv.denom;
        vj["jmin"] = fv.jmin;
        vj["jmax"] = fv.jmax;
        vj["cells"] = count_present(fv);
        lvls.push_back(vj);
      }
      fj["levels"] = lvls;
      inner.push_back(fj);
    }
    j["inner"] = inner;
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    for (int f = 0; f < families(); ++f) {
      nlohmann::ordered_json cj;
      cj["family"] = f + 1;
      nlohmann::ordered_json bx = nlohmann::ordered_json::array(), by = nlohmann::ordered_json::array();
      for (double v : coords_[f].breakpoints()) bx.push_back(hexf(v));
      for (double v : coords_[f].values()) by.push_back(hexf(v));
      cj["breakpoints"] = bx;
      cj["values"] = by;
      coords.push_back(cj);
    }
    j["coords"] = coords;
    nlohmann::ordered_json certs = nlohmann::ordered_json::array();
    for (const auto& c : certs_) {
      nlohmann::ordered_json cj;
      cj["bound"] = hexf(c.bound);
      cj["pitch"] = hexf(c.pitch);
      cj["error"] = hexf(c.error);
      certs.push_back(cj);
    }
    j["cert"] = certs;
    return j;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save: cannot open " + path);
    os << to_json().dump(1) << "\n";
  }

  // The inner ladder is rebuilt deterministically from the stored config and
  // revalidated against the stored level/inner summaries.
  static SuperpositionModel load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load: cannot open " + path);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(is);
    int n = j.at("n").get<int>();
    auto cfgj = j.at("config");
    InnerLadder::Config cfg;
    cfg.n = n;
    cfg.build_bound = unhexf(cfgj.at("build_bound").get<std::string>());
    cfg.fine_u_exp = cfgj.at("fine_u_exp").get<int>();
    cfg.deep_level = cfgj.at("deep_level").get<bool>();
    DomainSpec spec;
    spec.n = n;
    auto ladder = std::make_shared<InnerLadder>(build_exhaustion(spec), cfg);

    auto inner = j.at("inner");
    if (int(inner.size()) != 2 * n + 1)
      throw std::runtime_error("load: model must carry exactly 2n+1 inner functions");
    for (int f = 0; f < 2 * n + 1; ++f) {
      auto lvls = inner.at(size_t(f)).at("levels");
      for (auto& vj : lvls) {
        int k = vj.at("k").get<int>();
        const FamilyValues& fv = ladder->level(k).fams[size_t(f)];
        if (vj.at("denom").get<uint64_t>() != fv.denom ||
            vj.at("cells").get<uint64_t>() != count_present(fv))
          throw std::runtime_error("load: inner-function tables do not match the stored summary");
      }
    }

    auto coordsj = j.at("coords");
    if (int(coordsj.size()) != 2 * n + 1)
      throw std::runtime_error("load: model must carry exactly 2n+1 coordinate functions");
    std::vector<PiecewiseLinear1D> coords;
    for (auto& cj : coordsj) {
      std::vector<double> xs, ys;
      for (auto& v : cj.at("breakpoints")) xs.push_back(unhexf(v.get<std::string>()));
      for (auto& v : cj.at("values")) ys.push_back(unhexf(v.get<std::string>()));
      coords.emplace_back(std::move(xs), std::move(ys));
    }
    SuperpositionModel m(ladder, std::move(coords), cfgj);
    for (auto& cj : j.at("cert")) {
      CertEntry c;
      c.bound = unhexf(cj.at("bound").get<std::string>());
      c.pitch = unhexf(cj.at("pitch").get<std::string>());
      c.error = unhexf(cj.at("error").get<std::string>());
      m.certs_.push_back(c);
    }
    return m;
  }

  std::string config_hash() const {
    // FNV-1a over the canonical config dump
    std::string s = config_.dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  static uint64_t count_present(const FamilyValues& fv) {
    uint64_t c = 0;
    for (int32_t s : fv.slots)
      if (s != FamilyValues::SLOT_ABSENT) ++c;
    return c;
  }

  std::shared_ptr<InnerLadder> ladder_;
  std::vector<PiecewiseLinear1D> coords_;
  std::vector<CertEntry> certs_;
  nlohmann::ordered_json config_;
};

}  // namespace kst
