#include "msgfem/experiment.hpp"
#include "msgfem/error.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msgfem {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename T>
void read_key(const json& obj, const char* key, T& dst, const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path + key + ": " + e.what());
  }
}

const json& section(const json& j, const char* key, const json& empty) {
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw Error(ErrorKind::Config, std::string(key) + ": expected an object");
  return j.at(key);
}

json side_json(const SideConfig& s) { return {{"type", s.type}, {"value", s.value}}; }

SideConfig side_from(const json& j, const std::string& path, SideConfig s) {
  if (!j.is_object()) throw Error(ErrorKind::Config, path + ": expected an object");
  read_key(j, "type", s.type, path + ".");
  read_key(j, "value", s.value, path + ".");
  return s;
}

SideCondition to_condition(const SideConfig& s) {
  return s.type == "neumann" ? SideCondition::neumann(s.value) : SideCondition::dirichlet(s.value);
}

double relative_a_error(const SparseSym& a, const Vector& u, const Vector& ref) {
  const double den = std::sqrt(std::max(a.energy(ref), 0.0));
  const double num = std::sqrt(std::max(a.energy(u - ref), 0.0));
  return den > 0.0 ? num / den : num;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

json to_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"lx", c.grid.lx}, {"ly", c.grid.ly}};
  j["coefficient"] = {{"type", c.coefficient.type},         {"value", c.coefficient.value},
                      {"contrast", c.coefficient.contrast}, {"blocks_x", c.coefficient.blocks_x},
                      {"blocks_y", c.coefficient.blocks_y}, {"fraction", c.coefficient.fraction},
                      {"path", c.coefficient.path}};
  j["boundary"] = {{"left", side_json(c.boundary.left)},
                   {"right", side_json(c.boundary.right)},
                   {"bottom", side_json(c.boundary.bottom)},
                   {"top", side_json(c.boundary.top)}};
  j["source"] = {{"type", c.source.type}, {"value", c.source.value}};
  j["decomposition"] = {{"px", c.decomposition.px},
                        {"py", c.decomposition.py},
                        {"overlap", c.decomposition.overlap},
                        {"oversampling", c.decomposition.oversampling}};
  j["modes"] = c.modes;
  j["scheme"] = std::string(to_string(c.scheme));
  j["solver"] = {{"driver", c.solver.driver},
                 {"target_reduction", c.solver.target_reduction},
                 {"maxit", c.solver.maxit}};
  j["output"] = {{"dir", c.output.dir}, {"prefix", c.output.prefix}};
  j["seed"] = c.seed;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "configuration must be a JSON object");
  static const json empty = json::object();
  ExperimentConfig c;

  const json& g = section(j, "grid", empty);
  read_key(g, "nx", c.grid.nx, "grid.");
  read_key(g, "ny", c.grid.ny, "grid.");
  read_key(g, "lx", c.grid.lx, "grid.");
  read_key(g, "ly", c.grid.ly, "grid.");

  const json& k = section(j, "coefficient", empty);
  read_key(k, "type", c.coefficient.type, "coefficient.");
  read_key(k, "value", c.coefficient.value, "coefficient.");
  read_key(k, "contrast", c.coefficient.contrast, "coefficient.");
  read_key(k, "blocks_x", c.coefficient.blocks_x, "coefficient.");
  read_key(k, "blocks_y", c.coefficient.blocks_y, "coefficient.");
  read_key(k, "fraction", c.coefficient.fraction, "coefficient.");
  read_key(k, "path", c.coefficient.path, "coefficient.");

  const json& b = section(j, "boundary", empty);
  if (b.contains("left")) c.boundary.left = side_from(b.at("left"), "boundary.left", c.boundary.left);
  if (b.contains("right")) c.boundary.right = side_from(b.at("right"), "boundary.right", c.boundary.right);
  if (b.contains("bottom")) c.boundary.bottom = side_from(b.at("bottom"), "boundary.bottom", c.boundary.bottom);
  if (b.contains("top")) c.boundary.top = side_from(b.at("top"), "boundary.top", c.boundary.top);

  const json& s = section(j, "source", empty);
  read_key(s, "type", c.source.type, "source.");
  read_key(s, "value", c.source.value, "source.");

  const json& d = section(j, "decomposition", empty);
  read_key(d, "px", c.decomposition.px, "decomposition.");
  read_key(d, "py", c.decomposition.py, "decomposition.");
  read_key(d, "overlap", c.decomposition.overlap, "decomposition.");
  read_key(d, "oversampling", c.decomposition.oversampling, "decomposition.");

  if (j.contains("modes")) {
    const json& m = j.at("modes");
    if (m.is_number_integer()) {
      c.modes = {m.get<Index>()};
    } else {
      read_key(j, "modes", c.modes, "");
    }
  }
  if (j.contains("scheme")) {
    std::string name;
    read_key(j, "scheme", name, "");
    try {
      c.scheme = scheme_from_string(name);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, std::string("scheme: ") + e.what());
    }
  }

  const json& sv = section(j, "solver", empty);
  read_key(sv, "driver", c.solver.driver, "solver.");
  read_key(sv, "target_reduction", c.solver.target_reduction, "solver.");
  read_key(sv, "maxit", c.solver.maxit, "solver.");

  const json& o = section(j, "output", empty);
  read_key(o, "dir", c.output.dir, "output.");
  read_key(o, "prefix", c.output.prefix, "output.");

  read_key(j, "seed", c.seed, "");
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Config, "cannot open config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  os << to_json(cfg).dump(2) << '\n';
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
  if (c.grid.nx < 2 || c.grid.ny < 2) fail("grid.nx, grid.ny: need at least 2 cells per direction");
  if (!(c.grid.lx > 0.0) || !(c.grid.ly > 0.0)) fail("grid.lx, grid.ly: must be positive");

  const auto& k = c.coefficient;
  if (k.type == "constant") {
    if (!(k.value > 0.0)) fail("coefficient.value: must be positive");
  } else if (k.type == "skyscraper") {
    if (!(k.contrast > 0.0)) fail("coefficient.contrast: must be positive");
    if (k.blocks_x < 1 || k.blocks_y < 1 || k.blocks_x > c.grid.nx || k.blocks_y > c.grid.ny) {
      fail("coefficient.blocks_x, coefficient.blocks_y: must lie in [1, grid size]");
    }
    if (!(k.fraction >= 0.0 && k.fraction <= 1.0)) fail("coefficient.fraction: must lie in [0, 1]");
  } else if (k.type == "raster") {
    if (k.path.empty()) fail("coefficient.path: required for a raster coefficient");
  } else {
    fail("coefficient.type: expected constant, skyscraper or raster");
  }

  bool any_dirichlet = false;
  for (const auto* s : {&c.boundary.left, &c.boundary.right, &c.boundary.bottom, &c.boundary.top}) {
    if (s->type != "dirichlet" && s->type != "neumann") fail("boundary: side type must be dirichlet or neumann");
    any_dirichlet = any_dirichlet || s->type == "dirichlet";
  }
  if (!any_dirichlet) fail("boundary: at least one side must be dirichlet");

  if (c.source.type != "example1" && c.source.type != "constant") {
    fail("source.type: expected example1 or constant");
  }

  const auto& d = c.decomposition;
  if (d.px < 1 || d.py < 1) fail("decomposition.px, decomposition.py: must be >= 1");
  if (d.px > c.grid.nx || d.py > c.grid.ny) fail("decomposition.px, decomposition.py: exceed the grid size");
  if (d.overlap < 1) fail("decomposition.overlap: must be >= 1");
  if (d.oversampling < 1) fail("decomposition.oversampling: must be >= 1");

  if (c.modes.empty()) fail("modes: must not be empty");
  if (c.modes.size() != 1 && c.modes.size() != static_cast<std::size_t>(d.px * d.py)) {
    fail("modes: give one value or one per subdomain");
  }
  for (Index m : c.modes) {
    if (m < 0) fail("modes: must be >= 0");
  }

  if (c.solver.driver != "gmres" && c.solver.driver != "richardson") {
    fail("solver.driver: expected gmres or richardson");
  }
  if (!(c.solver.target_reduction > 0.0 && c.solver.target_reduction < 1.0)) {
    fail("solver.target_reduction: must lie in (0, 1)");
  }
  if (c.solver.maxit < 1) fail("solver.maxit: must be >= 1");
}

// ---------------------------------------------------------------------------
// Pipeline stages

Problem build_problem(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = Clock::now();
  const CartesianGrid grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly);
  CoefficientField coeff;
  const auto& k = cfg.coefficient;
  if (k.type == "constant") {
    coeff = CoefficientField::constant(grid, k.value);
  } else if (k.type == "skyscraper") {
    coeff = skyscraper_coefficient(grid, k.contrast, k.blocks_x, k.blocks_y, k.fraction, cfg.seed);
  } else {
    coeff = CoefficientField::from_raster(grid, k.path);
  }

  BoundarySpec bc;
  bc[Side::left] = to_condition(cfg.boundary.left);
  bc[Side::right] = to_condition(cfg.boundary.right);
  bc[Side::bottom] = to_condition(cfg.boundary.bottom);
  bc[Side::top] = to_condition(cfg.boundary.top);

  ScalarFunction source;
  if (cfg.source.type == "example1") {
    source = source_example1;
  } else {
    const double v = cfg.source.value;
    source = [v](double, double) { return v; };
  }

  Problem p{assemble(grid, coeff, bc, source), {}, 0.0, 0.0};
  p.assembly_ms = ms_since(t0);
  const auto t1 = Clock::now();
  p.reference = solve_refined(p.system.a_free, factorize(p.system.a_free), p.system.f_free);
  p.direct_ms = ms_since(t1);
  return p;
}

TwoLevelSetup build_setup(const Problem& problem, const ExperimentConfig& cfg, BasisKind kind, Exec exec) {
  TwoLevelSetup s;
  const auto& d = cfg.decomposition;
  auto t = Clock::now();
  s.decomp = build_decomposition(problem.system, d.px, d.py, d.overlap, d.oversampling);
  s.pu = build_partition_of_unity(s.decomp);
  s.decomposition_ms = ms_since(t);
  if (s.decomp.size() == 1) return s;  // one-level solve is exact

  t = Clock::now();
  const auto spectra = compute_spectra(problem.system, s.decomp, s.pu, kind, exec);
  s.eigensolve_ms = ms_since(t);
  t = Clock::now();
  const auto bases = select_all(spectra, cfg.modes);
  s.coarse = std::make_shared<CoarseSpace>(build_coarse_space(problem.system, s.decomp, s.pu, bases));
  s.coarse_ms = ms_since(t);
  return s;
}

SolveResult run_driver(const ExperimentConfig& cfg, const Preconditioner& b, const Problem& problem) {
  SolveOptions opts;
  opts.target_reduction = cfg.solver.target_reduction;
  opts.maxit = cfg.solver.maxit;
  opts.reference = problem.reference;
  const Vector u0 = Vector::Zero(problem.system.free_count());
  return cfg.solver.driver == "richardson" ? richardson(b, problem.system, u0, opts)
                                           : gmres(b, problem.system, u0, opts);
}

RunOutcome run_single(const ExperimentConfig& cfg, Exec exec) {
  const Problem problem = build_problem(cfg);
  const TwoLevelSetup setup = build_setup(problem, cfg, coarse_kind(cfg.scheme), exec);

  auto t = Clock::now();
  const Preconditioner b =
      Preconditioner::build(problem.system, setup.decomp, setup.pu, cfg.scheme, setup.coarse, exec);
  const double factor_ms = ms_since(t);
  t = Clock::now();
  RunOutcome out;
  out.result = run_driver(cfg, b, problem);
  const double krylov_ms = ms_since(t);

  const CoarseSpace* cs = setup.coarse.get();
  out.lambda = cs ? cs->lambda : 0.0;
  const auto& recs = out.result.history.records;
  const double r0 = recs.front().res_b;
  const double rn = recs.back().res_b;

  json& r = out.report;
  r["config"] = to_json(cfg);
  r["scheme"] = std::string(to_string(cfg.scheme));
  r["driver"] = cfg.solver.driver;
  r["status"] = std::string(to_string(out.result.status));
  r["converged"] = out.result.converged();
  r["iterations"] = out.result.iterations;
  r["free_dofs"] = problem.system.free_count();
  r["subdomains"] = setup.decomp.size();
  r["xi"] = setup.decomp.xi;
  r["xi_star"] = setup.decomp.xi_star;
  r["coarse_dimension"] = cs ? cs->dimension() : 0;
  r["coarse_dropped"] = cs ? cs->dropped : 0;
  r["max_next_eigenvalue"] = cs ? cs->max_next_eigenvalue : 0.0;
  r["lambda"] = out.lambda;
  if (cs && cs->kind == BasisKind::geneo) r["kappa_bound"] = cs->kappa_bound;
  r["initial_residual"] = r0;
  r["final_residual"] = rn;
  r["relative_residual"] = r0 > 0.0 ? rn / r0 : 0.0;
  r["relative_error_a"] = relative_a_error(problem.system.a_free, out.result.solution, problem.reference);
  r["timings"] = {{"assembly_ms", problem.assembly_ms},
                  {"direct_solve_ms", problem.direct_ms},
                  {"decomposition_ms", setup.decomposition_ms},
                  {"eigensolve_ms", setup.eigensolve_ms},
                  {"coarse_ms", setup.coarse_ms},
                  {"local_factorization_ms", factor_ms},
                  {"krylov_ms", krylov_ms}};
  return out;
}

ComparisonReport run_comparison(const ExperimentConfig& cfg, const std::vector<Scheme>& schemes, Exec exec) {
  if (schemes.empty()) throw Error(ErrorKind::Config, "schemes: list must not be empty");
  const Problem problem = build_problem(cfg);

  std::shared_ptr<const TwoLevelSetup> setups[2];
  std::string setup_errors[2];
  auto setup_for = [&](BasisKind kind) -> const TwoLevelSetup* {
    const auto slot = static_cast<std::size_t>(kind);
    if (!setups[slot] && setup_errors[slot].empty()) {
      try {
        setups[slot] = std::make_shared<TwoLevelSetup>(build_setup(problem, cfg, kind, exec));
      } catch (const std::exception& e) {
        setup_errors[slot] = e.what();
      }
    }
    return setups[slot].get();
  };

  ComparisonReport rep;
  json& sum = rep.summary;
  sum["config"] = to_json(cfg);
  sum["schemes"] = json::array();
  for (Scheme scheme : schemes) {
    SchemeOutcome so;
    so.scheme = scheme;
    const BasisKind kind = coarse_kind(scheme);
    const TwoLevelSetup* s = setup_for(kind);
    if (!s) {
      so.error = setup_errors[static_cast<std::size_t>(kind)];
    } else {
      try {
        auto t = Clock::now();
        const Preconditioner b = Preconditioner::build(problem.system, s->decomp, s->pu, scheme, s->coarse, exec);
        so.setup_ms = s->decomposition_ms + s->eigensolve_ms + s->coarse_ms + ms_since(t);
        t = Clock::now();
        so.result = run_driver(cfg, b, problem);
        so.solve_ms = ms_since(t);
        so.lambda = s->coarse ? s->coarse->lambda : 0.0;
        so.ok = true;
      } catch (const std::exception& e) {
        so.error = e.what();
      }
    }
    json entry = {{"scheme", std::string(to_string(scheme))}, {"ok", so.ok}};
    if (so.ok) {
      entry["status"] = std::string(to_string(so.result.status));
      entry["iterations"] = so.result.iterations;
      entry["lambda"] = so.lambda;
      entry["relative_error_a"] =
          relative_a_error(problem.system.a_free, so.result.solution, problem.reference);
      entry["timings"] = {{"setup_ms", so.setup_ms}, {"solve_ms", so.solve_ms}};
    } else {
      entry["error"] = so.error;
    }
    sum["schemes"].push_back(entry);
    rep.schemes.push_back(std::move(so));
  }
  return rep;
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "ovsp,modes,iters,lambda,setup_ms,solve_ms\n";
  for (const auto& c : cells) {
    os << c.ovsp << ',' << c.modes << ',';
    if (c.ok) {
      os << c.iterations << ',' << c.lambda << ',' << c.setup_ms << ',' << c.solve_ms << '\n';
    } else {
      std::string reason = c.failure;
      for (char& ch : reason) {
        if (ch == ',' || ch == '\n') ch = ' ';
      }
      os << "FAIL:" << reason << ",,,\n";
    }
  }
  return os.str();
}

SweepReport run_sweep(const ExperimentConfig& cfg, const std::vector<Index>& ovsp_list,
                      const std::vector<Index>& modes_list, Exec exec) {
  if (ovsp_list.empty() || modes_list.empty()) {
    throw Error(ErrorKind::Config, "sweep: oversampling and mode lists must not be empty");
  }
  const Problem problem = build_problem(cfg);
  const BasisKind kind = coarse_kind(cfg.scheme);
  SweepReport rep;
  rep.ovsp = ovsp_list;
  rep.modes = modes_list;

  for (Index s : ovsp_list) {
    ExperimentConfig c = cfg;
    c.decomposition.oversampling = s;
    Decomposition decomp;
    PartitionOfUnity pu;
    std::vector<LocalSpectrum> spectra;
    std::string shared_error;
    double shared_ms = 0.0;
    try {
      auto t = Clock::now();
      decomp = build_decomposition(problem.system, c.decomposition.px, c.decomposition.py,
                                   c.decomposition.overlap, s);
      pu = build_partition_of_unity(decomp);
      if (decomp.size() > 1) spectra = compute_spectra(problem.system, decomp, pu, kind, exec);
      shared_ms = ms_since(t);
    } catch (const std::exception& e) {
      shared_error = e.what();
    }

    for (Index m : modes_list) {
      SweepCell cell;
      cell.ovsp = s;
      cell.modes = m;
      if (!shared_error.empty()) {
        cell.failure = shared_error;
        rep.cells.push_back(cell);
        continue;
      }
      try {
        c.modes = {m};
        validate(c);
        auto t = Clock::now();
        std::shared_ptr<const CoarseSpace> coarse;
        if (decomp.size() > 1) {
          coarse = std::make_shared<CoarseSpace>(
              build_coarse_space(problem.system, decomp, pu, select_all(spectra, c.modes)));
        }
        const Preconditioner b = Preconditioner::build(problem.system, decomp, pu, c.scheme, coarse, exec);
        cell.setup_ms = shared_ms + ms_since(t);
        t = Clock::now();
        const SolveResult res = run_driver(c, b, problem);
        cell.solve_ms = ms_since(t);
        cell.iterations = res.iterations;
        cell.lambda = coarse ? coarse->lambda : 0.0;
        cell.ok = res.converged();
        if (!cell.ok) cell.failure = std::string(to_string(res.status));
      } catch (const std::exception& e) {
        cell.failure = e.what();
      }
      rep.cells.push_back(cell);
    }
  }
  return rep;
}

std::vector<LocalSpectrum> run_spectrum(const ExperimentConfig& cfg, Exec exec) {
  const Problem problem = build_problem(cfg);
  const auto& d = cfg.decomposition;
  const Decomposition decomp = build_decomposition(problem.system, d.px, d.py, d.overlap, d.oversampling);
  const PartitionOfUnity pu = build_partition_of_unity(decomp);
  return compute_spectra(problem.system, decomp, pu, coarse_kind(cfg.scheme), exec);
}

} // namespace msgfem
