// Command-line experiment runner: solve, compare, sweep, spectrum.

#include "msgfem/error.hpp"
#include "msgfem/experiment.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace msgfem;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNotConverged = 2;

fs::path output_path(const ExperimentConfig& cfg, const std::string& suffix) {
  fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  return dir / (cfg.output.prefix + suffix);
}

// Write to a temporary name first so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw Error(ErrorKind::Io, "cannot open " + tmp.string());
    os << text;
  }
  fs::rename(tmp, path);
}

int cmd_solve(const ExperimentConfig& cfg, Exec exec) {
  const RunOutcome out = run_single(cfg, exec);
  write_atomic(output_path(cfg, "_report.json"), out.report.dump(2) + "\n");
  write_atomic(output_path(cfg, "_history.csv"), out.result.history.to_csv());
  std::cout << to_string(cfg.scheme) << " " << cfg.solver.driver << ": " << to_string(out.result.status)
            << " after " << out.result.iterations << " iterations, Lambda = " << out.lambda
            << ", relative a-norm error = " << out.report["relative_error_a"].get<double>() << "\n";
  return out.result.converged() ? kExitConverged : kExitNotConverged;
}

int cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& names, Exec exec) {
  std::vector<Scheme> schemes;
  for (const auto& n : names) schemes.push_back(scheme_from_string(n));
  const ComparisonReport rep = run_comparison(cfg, schemes, exec);
  bool all = true;
  std::cout << "scheme        iters  status\n";
  for (const auto& s : rep.schemes) {
    const std::string name(to_string(s.scheme));
    if (s.ok) {
      write_atomic(output_path(cfg, "_" + name + "_history.csv"), s.result.history.to_csv());
      std::cout << name << std::string(14 - name.size(), ' ') << s.result.iterations << "  "
                << to_string(s.result.status) << "\n";
    } else {
      std::cout << name << std::string(14 - name.size(), ' ') << "-  " << s.error << "\n";
    }
    all = all && s.ok && s.result.converged();
  }
  write_atomic(output_path(cfg, "_compare.json"), rep.summary.dump(2) + "\n");
  return all ? kExitConverged : kExitNotConverged;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<Index>& ovsp, const std::vector<Index>& modes,
              Exec exec) {
  const SweepReport rep = run_sweep(cfg, ovsp, modes, exec);
  const std::string csv = rep.to_csv();
  write_atomic(output_path(cfg, "_sweep.csv"), csv);
  std::cout << csv;
  bool all = true;
  for (const auto& c : rep.cells) all = all && c.ok;
  return all ? kExitConverged : kExitNotConverged;
}

int cmd_spectrum(const ExperimentConfig& cfg, Exec exec) {
  const auto spectra = run_spectrum(cfg, exec);
  const fs::path path = output_path(cfg, "_spectrum.csv");
  write_spectrum_csv(path.string(), spectra);
  std::cout << "wrote " << path.string() << "\n";
  return kExitConverged;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"MS-GFEM two-level Schwarz solver for 2D heterogeneous diffusion"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "Run the serial reference kernels");

  std::string config_path;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "Override output.dir");
  };

  auto* solve = app.add_subcommand("solve", "Run one configured solve");
  add_common(solve);

  std::vector<std::string> schemes{"hybrid_ras", "ras", "as", "hybrid_as", "as2_geneo"};
  auto* compare = app.add_subcommand("compare", "Compare preconditioner schemes on one instance");
  add_common(compare);
  compare->add_option("--schemes", schemes, "Schemes to run");

  std::vector<Index> ovsp{1, 2, 4, 6}, modes{4, 8, 12, 16};
  auto* sweep = app.add_subcommand("sweep", "Oversampling x mode-count sweep");
  add_common(sweep);
  sweep->add_option("--ovsp", ovsp, "Oversampling layer counts");
  sweep->add_option("--modes", modes, "Modes per subdomain");

  auto* spectrum = app.add_subcommand("spectrum", "Export local eigenvalue decay");
  add_common(spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  const Exec exec = serial ? Exec::serial : Exec::parallel;
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output.dir = out_dir;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(cfg, exec);
    if (*compare) return cmd_compare(cfg, schemes, exec);
    if (*sweep) return cmd_sweep(cfg, ovsp, modes, exec);
    return cmd_spectrum(cfg, exec);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool config_like = e.kind() == ErrorKind::Config || e.kind() == ErrorKind::InvalidArgument ||
                             e.kind() == ErrorKind::TooManyModes || e.kind() == ErrorKind::GridTooSmall;
    return config_like ? kExitConfig : kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNotConverged;
  }
}
