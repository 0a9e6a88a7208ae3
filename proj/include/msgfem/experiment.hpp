#pragma once

#include "msgfem/decomposition.hpp"
#include "msgfem/exec.hpp"
#include "msgfem/fem_grid.hpp"
#include "msgfem/krylov.hpp"
#include "msgfem/schwarz.hpp"
#include "msgfem/spectral_basis.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace msgfem {

struct GridConfig {
  Index nx = 64, ny = 64;
  double lx = 1.0, ly = 1.0;
  bool operator==(const GridConfig&) const = default;
};

/// type: "constant" (value), "skyscraper" (contrast, blocks_x, blocks_y,
/// fraction; seeded by the experiment seed) or "raster" (path).
struct CoefficientConfig {
  std::string type = "skyscraper";
  double value = 1.0;
  double contrast = 1e6;
  Index blocks_x = 8, blocks_y = 8;
  double fraction = 0.3;
  std::string path;
  bool operator==(const CoefficientConfig&) const = default;
};

/// type: "dirichlet" (value = g) or "neumann" (value = flux).
struct SideConfig {
  std::string type = "dirichlet";
  double value = 0.0;
  bool operator==(const SideConfig&) const = default;
};

struct BoundaryConfig {
  SideConfig left{"dirichlet", 10.0};
  SideConfig right{"dirichlet", -10.0};
  SideConfig bottom{"neumann", -1.0};
  SideConfig top{"neumann", 1.0};
  bool operator==(const BoundaryConfig&) const = default;
};

/// type: "example1" or "constant" (value).
struct SourceConfig {
  std::string type = "example1";
  double value = 0.0;
  bool operator==(const SourceConfig&) const = default;
};

struct DecompositionConfig {
  Index px = 4, py = 4;
  Index overlap = 2;
  Index oversampling = 4;
  bool operator==(const DecompositionConfig&) const = default;
};

struct SolverConfig {
  std::string driver = "gmres";  // "gmres" or "richardson"
  double target_reduction = 1e-10;
  Index maxit = 200;
  bool operator==(const SolverConfig&) const = default;
};

struct OutputConfig {
  std::string dir = ".";
  std::string prefix = "run";
  bool operator==(const OutputConfig&) const = default;
};

/// One experiment. The defaults are the desk-scale skyscraper instance.
struct ExperimentConfig {
  GridConfig grid;
  CoefficientConfig coefficient;
  BoundaryConfig boundary;
  SourceConfig source;
  DecompositionConfig decomposition;
  std::vector<Index> modes{10};  // one entry (uniform) or one per subdomain
  Scheme scheme = Scheme::hybrid_ras;
  SolverConfig solver;
  OutputConfig output;
  std::uint64_t seed = 7;
  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; errors name the offending key path.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);
/// Throws Config naming the first invalid field.
void validate(const ExperimentConfig& cfg);

/// Assembled system plus the sparse direct solution used as reference.
struct Problem {
  AssembledSystem system;
  Vector reference;
  double assembly_ms = 0.0;
  double direct_ms = 0.0;
};

Problem build_problem(const ExperimentConfig& cfg);

/// Decomposition, PU and coarse space for one (oversampling, modes) choice.
struct TwoLevelSetup {
  Decomposition decomp;
  PartitionOfUnity pu;
  std::shared_ptr<const CoarseSpace> coarse;  // null for a single subdomain
  double decomposition_ms = 0.0;
  double eigensolve_ms = 0.0;
  double coarse_ms = 0.0;
};

TwoLevelSetup build_setup(const Problem& problem, const ExperimentConfig& cfg, BasisKind kind,
                          Exec exec = Exec::parallel);

SolveResult run_driver(const ExperimentConfig& cfg, const Preconditioner& b, const Problem& problem);

struct RunOutcome {
  nlohmann::json report;
  SolveResult result;
  double lambda = 0.0;
};

/// Full pipeline for the configured scheme and driver.
RunOutcome run_single(const ExperimentConfig& cfg, Exec exec = Exec::parallel);

struct SchemeOutcome {
  Scheme scheme = Scheme::hybrid_ras;
  bool ok = false;
  std::string error;
  SolveResult result;
  double lambda = 0.0;
  double setup_ms = 0.0;
  double solve_ms = 0.0;
};

struct ComparisonReport {
  std::vector<SchemeOutcome> schemes;
  nlohmann::json summary;
};

/// Shared assembly, decomposition and one eigensolve per coarse-space kind.
ComparisonReport run_comparison(const ExperimentConfig& cfg, const std::vector<Scheme>& schemes,
                                Exec exec = Exec::parallel);

struct SweepCell {
  Index ovsp = 0;
  Index modes = 0;
  bool ok = false;
  std::string failure;
  Index iterations = 0;
  double lambda = 0.0;
  double setup_ms = 0.0;
  double solve_ms = 0.0;
};

struct SweepReport {
  std::vector<Index> ovsp;
  std::vector<Index> modes;
  std::vector<SweepCell> cells;  // ovsp-major

  const SweepCell& at(std::size_t io, std::size_t im) const { return cells[io * modes.size() + im]; }
  /// CSV "ovsp,modes,iters,lambda,setup_ms,solve_ms"; failed cells carry
  /// "FAIL:<reason>" in the iters column.
  std::string to_csv() const;
};

/// One eigensolve per oversampling value, reused across the mode counts.
SweepReport run_sweep(const ExperimentConfig& cfg, const std::vector<Index>& ovsp_list,
                      const std::vector<Index>& modes_list, Exec exec = Exec::parallel);

/// Local spectra of the coarse-space kind used by the configured scheme.
std::vector<LocalSpectrum> run_spectrum(const ExperimentConfig& cfg, Exec exec = Exec::parallel);

} // namespace msgfem
