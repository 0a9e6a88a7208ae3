#include "doctest.h"
#include "msgfem/error.hpp"
#include "msgfem/experiment.hpp"
#include "test_support.hpp"

#include <cstdio>
#include <string>

using namespace msgfem;
using namespace msgfem::testing;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c = skyscraper_config(24, 2, 1, 2, 4, 1e6);
  c.coefficient.blocks_x = c.coefficient.blocks_y = 6;
  return c;
}

std::string config_error(const json& j) {
  try {
    (void)config_from_json(j);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  return "";
}

json without_timings(json report) {
  report.erase("timings");
  return report;
}

} // namespace

TEST_CASE("defaults are the desk instance") {
  const ExperimentConfig c;
  CHECK(c.grid.nx == 64);
  CHECK(c.coefficient.contrast == 1e6);
  CHECK(c.decomposition == DecompositionConfig{4, 4, 2, 4});
  CHECK(c.modes == std::vector<Index>{10});
  CHECK(c.scheme == Scheme::hybrid_ras);
  CHECK(c.solver.target_reduction == 1e-10);
  CHECK(c.solver.maxit == 200);
  CHECK(config_from_json(json::object()) == c);
}

TEST_CASE("config json round trip") {
  ExperimentConfig c = small_config();
  c.scheme = Scheme::as2_geneo;
  c.modes = {3, 4, 5, 6};
  c.boundary.top = {"dirichlet", 2.5};
  c.solver.driver = "richardson";
  c.output.prefix = "x";
  c.seed = 99;
  CHECK(config_from_json(to_json(c)) == c);

  const std::string path = "test_config_tmp.json";
  save_config(path, c);
  CHECK(load_config(path) == c);
  std::remove(path.c_str());

  json j = json::object();
  j["modes"] = 7;
  CHECK(config_from_json(j).modes == std::vector<Index>{7});
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error({{"grid", {{"nx", "sixty"}}}}).find("grid.nx") != std::string::npos);
  CHECK(config_error({{"scheme", "bddc"}}).find("scheme") != std::string::npos);
  CHECK(config_error({{"decomposition", {{"overlap", 0}}}}).find("decomposition.overlap") != std::string::npos);
  CHECK(config_error({{"modes", {1, 2, 3}}}).find("modes") != std::string::npos);
  CHECK(config_error({{"solver", {{"driver", "cg"}}}}).find("solver.driver") != std::string::npos);
  CHECK(config_error({{"boundary",
                       {{"left", {{"type", "neumann"}}}, {"right", {{"type", "neumann"}}}}}})
            .find("dirichlet") != std::string::npos);
  CHECK(config_error({{"grid", 3}}).find("grid") != std::string::npos);
  CHECK_THROWS_AS((void)load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("run_single is deterministic apart from timings") {
  const ExperimentConfig c = small_config();
  const RunOutcome a = run_single(c);
  const RunOutcome b = run_single(c, Exec::serial);
  CHECK(a.result.converged());
  CHECK(without_timings(a.report) == without_timings(b.report));
  CHECK(a.result.solution == b.result.solution);
  CHECK(a.report["relative_error_a"].get<double>() < 1e-8);
  for (const char* key : {"assembly_ms", "eigensolve_ms", "local_factorization_ms", "krylov_ms"}) {
    CHECK(a.report["timings"].contains(key));
  }
}

TEST_CASE("a single subdomain is an exact solve") {
  ExperimentConfig c = small_config();
  c.decomposition.px = c.decomposition.py = 1;
  for (const char* driver : {"gmres", "richardson"}) {
    c.solver.driver = driver;
    const RunOutcome r = run_single(c);
    CHECK(r.result.converged());
    CHECK(r.result.iterations == 1);
    CHECK(r.report["coarse_dimension"] == 0);
  }
}

TEST_CASE("comparison shares setups and ranks hybrid RAS first") {
  const ExperimentConfig c = small_config();
  const ComparisonReport rep =
      run_comparison(c, {Scheme::hybrid_ras, Scheme::ras, Scheme::as, Scheme::hybrid_as, Scheme::as2_geneo});
  REQUIRE(rep.schemes.size() == 5);
  for (const auto& s : rep.schemes) {
    CAPTURE(to_string(s.scheme));
    CHECK(s.ok);
    CHECK(s.result.converged());
    CHECK(rep.schemes[0].result.iterations <= s.result.iterations);
  }
  CHECK(rep.summary["schemes"].size() == 5);
  CHECK_THROWS_AS((void)run_comparison(c, {}), Error);
}

TEST_CASE("sweep marks failing cells and keeps going") {
  const ExperimentConfig c = small_config();
  const SweepReport rep = run_sweep(c, {1, 2}, {2, 4, 100000});
  REQUIRE(rep.cells.size() == 6);
  CHECK(rep.at(0, 0).ok);
  CHECK(rep.at(1, 1).ok);
  CHECK_FALSE(rep.at(1, 2).ok);
  CHECK(rep.at(1, 2).failure.find("TooManyModes") != std::string::npos);
  CHECK(rep.at(0, 1).iterations <= rep.at(0, 0).iterations);
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("ovsp,modes,iters,lambda,setup_ms,solve_ms\n", 0) == 0);
  CHECK(csv.find("\n2,100000,FAIL:TooManyModes") != std::string::npos);
}

TEST_CASE("spectrum export follows the scheme's coarse-space kind") {
  ExperimentConfig c = small_config();
  const auto ms = run_spectrum(c);
  c.scheme = Scheme::as2_geneo;
  const auto ge = run_spectrum(c);
  REQUIRE(ms.size() == 4);
  REQUIRE(ge.size() == 4);
  CHECK(ms[0].kind == BasisKind::msgfem);
  CHECK(ge[0].kind == BasisKind::geneo);
  CHECK(ms[0].dofs.size() > ge[0].dofs.size());
  CHECK(max_relative_gap(ms[0].eigenvalues, ge[0].eigenvalues, 4) > 1e-3);
}
