#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "kst/model.hpp"
#include "kst/registry.hpp"

using namespace kst;

namespace {
SuperpositionModel build_ramp_model() {
  DomainSpec spec;
  spec.n = 1;
  InnerLadder::Config cfg;
  cfg.n = 1;
  cfg.build_bound = 5.5;
  cfg.fine_u_exp = -17;
  auto ladder = std::make_shared<InnerLadder>(build_exhaustion(spec), cfg);
  auto f = make_registry_function("ramp", {}, 1);
  auto parts = annulus_decompose(f, ladder->exhaustion(), 3);
  SweepConfig scfg;
  scfg.tol = 5e-4;
  scfg.theta_commit = 0.71;
  std::vector<AnnulusSolution> sols;
  for (auto& p : parts) sols.push_back(solve_annulus(*ladder, p, scfg));
  auto coords = assemble(sols, ladder->families());
  nlohmann::ordered_json config;
  config["fn"] = "ramp";
  config["n"] = 1;
  config["build_bound"] = hexf(cfg.build_bound);
  config["fine_u_exp"] = cfg.fine_u_exp;
  config["deep_level"] = cfg.deep_level;
  config["s_max"] = 3;
  config["tol"] = hexf(scfg.tol);
  return SuperpositionModel(ladder, std::move(coords), config);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}
}  // namespace

TEST_CASE("model: family count, reconstruction, certification") {
  SuperpositionModel m = build_ramp_model();
  CHECK(m.families() == 3);
  CHECK(int(m.coords().size()) == 3);
  auto f = make_registry_function("ramp", {}, 1);
  double err = m.certify(f, 3.0, 1.0 / 256.0, 1e-3);
  CHECK(err <= 2e-3);
  CHECK(std::abs(m.reconstruct({1.5}, 1e-3) - 1.5) <= 2e-3);

  // zero model reconstructs zero
  std::vector<PiecewiseLinear1D> zs(3);
  DomainSpec spec;
  spec.n = 1;
  InnerLadder::Config cfg;
  cfg.n = 1;
  auto lad = std::make_shared<InnerLadder>(build_exhaustion(spec), cfg);
  nlohmann::ordered_json jc;
  jc["fn"] = "zero";
  SuperpositionModel zm(lad, std::move(zs), jc);
  CHECK(zm.reconstruct({0.7}, 1e-3) == 0.0);
  auto fz = make_registry_function("zero", {}, 1);
  CHECK(zm.certify(fz, 3.0, 0.125, 1e-3) == 0.0);
}

TEST_CASE("save/load round trip is byte-identical and revalidated") {
  SuperpositionModel m = build_ramp_model();
  auto f = make_registry_function("ramp", {}, 1);
  double err = m.certify(f, 3.0, 1.0 / 128.0, 1e-3);
  std::string p1 = "model_rt1.json", p2 = "model_rt2.json";
  m.save(p1);
  SuperpositionModel m2 = SuperpositionModel::load(p1);
  m2.save(p2);
  CHECK(slurp(p1) == slurp(p2));
  // cert re-check after load matches the stored value exactly
  double err2 = m2.certify(f, 3.0, 1.0 / 128.0, 1e-3);
  CHECK(err2 == err);
  // reconstruction agrees
  for (double x = -2.5; x <= 2.5; x += 0.375)
    CHECK(m.reconstruct({x}, 1e-3) == m2.reconstruct({x}, 1e-3));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("tampered family count is rejected on load") {
  SuperpositionModel m = build_ramp_model();
  std::string p = "model_tamper.json";
  m.save(p);
  auto j = nlohmann::ordered_json::parse(std::ifstream(p));
  j["coords"].erase(2);  // 2n instead of 2n+1
  std::ofstream(p) << j.dump(1) << "\n";
  CHECK_THROWS(SuperpositionModel::load(p));
  std::remove(p.c_str());
}

TEST_CASE("separation: gamma_1-separated points differ in some inner value") {
  SuperpositionModel m = build_ramp_model();
  const InnerLadder& L = m.ladder();
  double gamma1 = L.level(1).params.gamma;
  double eps = L.eps(2);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-2.5, 2.5);
  for (int i = 0; i < 500; ++i) {
    Point x{dist(rng)}, y{dist(rng)};
    if (std::abs(x[0] - y[0]) < gamma1) continue;
    bool separated = false;
    for (int fam = 0; fam < 3 && !separated; ++fam)
      if (std::abs(L.eval_ladder(2, fam, x) - L.eval_ladder(2, fam, y)) > 2.0 * eps) separated = true;
    CHECK(separated);
  }
}
