// Command-line front end. Talks to the library only through gtopo.h.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gtopo/gtopo.h"

namespace {

int report(gtopo_status s) {
  std::fprintf(stderr, "error [%s]: %s\n", gtopo_status_name(s),
               gtopo_last_error());
  return static_cast<int>(s);
}

struct ConfigHandle {
  gtopo_config* p = nullptr;
  ~ConfigHandle() { gtopo_config_free(p); }
};

struct ArtifactsHandle {
  gtopo_artifacts* p = nullptr;
  ~ArtifactsHandle() { gtopo_artifacts_free(p); }
};

gtopo_status open_config(const std::string& path,
                         const std::vector<std::string>& overrides,
                         ConfigHandle& cfg) {
  gtopo_status s = gtopo_config_load(path.c_str(), &cfg.p);
  if (s != GTOPO_OK) return s;
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : kv.substr(eq + 1);
    s = gtopo_config_set(cfg.p, key.c_str(), value.c_str());
    if (s != GTOPO_OK) return s;
  }
  return GTOPO_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-based graph topology inference: simulation and theory"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "override a config key (key=value)");
  };

  auto* run = app.add_subcommand("run", "simulate the ensemble and theory");
  add_config(run);
  std::string out_dir;
  int runs = 0;
  std::string seed;
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--runs", runs, "number of Monte-Carlo runs")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "master seed");

  auto* moments = app.add_subcommand("moments", "compute or cache moments");
  add_config(moments);

  auto* solve = app.add_subcommand("solve-gamma", "solve for gamma*");
  add_config(solve);

  auto* compare = app.add_subcommand("compare", "dB gap between two curves");
  std::string path_a, path_b, col_a = "msd_emp", col_b = "msd_theo";
  long burn_in = -1;
  compare->add_option("--a", path_a, "first CSV")->required()->check(
      CLI::ExistingFile);
  compare->add_option("--b", path_b, "second CSV")->required()->check(
      CLI::ExistingFile);
  compare->add_option("--col-a", col_a, "column of the first CSV")
      ->capture_default_str();
  compare->add_option("--col-b", col_b, "column of the second CSV")
      ->capture_default_str();
  compare->add_option("--burn-in", burn_in,
                      "points skipped at the start (default: length / 10)");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    if (!out_dir.empty()) overrides.push_back("out=" + out_dir);
    if (runs > 0) overrides.push_back("runs=" + std::to_string(runs));
    if (!seed.empty()) overrides.push_back("seed=" + seed);
    ConfigHandle cfg;
    gtopo_status s = open_config(config_path, overrides, cfg);
    if (s != GTOPO_OK) return report(s);
    ArtifactsHandle art;
    s = gtopo_run(cfg.p, &art.p);
    if (s != GTOPO_OK) return report(s);
    s = gtopo_artifacts_write(art.p, nullptr);
    if (s != GTOPO_OK) return report(s);
    gtopo_run_summary sum{};
    gtopo_artifacts_summary(art.p, &sum);
    std::printf("runs completed     %d / %d (%d diverged)\n",
                sum.completed_runs, sum.runs, sum.diverged_runs);
    std::printf("step size          %.6g (bound %.6g)\n", sum.mu,
                sum.stability_bound);
    std::printf("final MSD          emp %.6g  theo %.6g\n", sum.msd_emp_final,
                sum.msd_theo_final);
    if (!std::isnan(sum.msd_ss)) {
      std::printf("steady-state MSD   %.6g\n", sum.msd_ss);
    }
    if (!std::isnan(sum.msd_max_gap_db)) {
      std::printf("max MSD gap        %.3f dB after burn-in\n",
                  sum.msd_max_gap_db);
    }
    std::printf("outputs            %s\n", gtopo_artifacts_dir(art.p));
    return 0;
  }

  if (*moments) {
    ConfigHandle cfg;
    gtopo_status s = open_config(config_path, overrides, cfg);
    if (s != GTOPO_OK) return report(s);
    gtopo_moments_info info{};
    s = gtopo_moments(cfg.p, &info);
    if (s != GTOPO_OK) return report(s);
    std::printf("nodes %d, dictionary %d, k_s %d\n", info.nodes,
                info.dictionary_size, info.feature_size);
    std::printf("lambda(R_ss)  [%.6g, %.6g]\n", info.lambda_min,
                info.lambda_max);
    std::printf("mu bound      %.9g\n", info.stability_bound);
    std::printf("E{y^2}        %.9g\n", info.r_yy);
    return 0;
  }

  if (*solve) {
    ConfigHandle cfg;
    gtopo_status s = open_config(config_path, overrides, cfg);
    if (s != GTOPO_OK) return report(s);
    gtopo_solve_info info{};
    s = gtopo_solve_gamma(cfg.p, nullptr, 0, &info);
    if (s != GTOPO_OK) return report(s);
    std::vector<double> gamma(info.feature_size);
    s = gtopo_solve_gamma(cfg.p, gamma.data(), gamma.size(), &info);
    if (s != GTOPO_OK) return report(s);
    std::printf("# iterations %ld, residual %.3g, objective %.17g\n",
                info.iterations, info.residual, info.objective);
    for (double g : gamma) std::printf("%.17g\n", g);
    return 0;
  }

  gtopo_compare_report rep{};
  gtopo_status s = gtopo_compare_csv(path_a.c_str(), col_a.c_str(),
                                     path_b.c_str(), col_b.c_str(), burn_in,
                                     &rep);
  if (s != GTOPO_OK) return report(s);
  std::printf("max gap %.6f dB at row %ld (burn-in %ld, compared %ld, "
              "excluded %ld)\n",
              rep.max_gap_db, rep.max_gap_index, rep.burn_in, rep.compared,
              rep.excluded);
  return 0;
}
