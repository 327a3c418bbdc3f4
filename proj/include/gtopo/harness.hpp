#ifndef GTOPO_HARNESS_HPP
#define GTOPO_HARNESS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtopo/config.hpp"
#include "gtopo/gaussian_moments.hpp"
#include "gtopo/kernel.hpp"

namespace gtopo {

/// Everything the experiment needs before any run starts.
struct PreparedExperiment {
  ExperimentConfig config;
  Eigen::MatrixXd node_covariance;  // full R_yy (estimated for nonlinear)
  Eigen::MatrixXd covariance;       // [inputs; target] ordering
  Dictionary dictionary;
  MomentSet moments;
  double stability_bound = 0.0;
  double mu = 0.0;
  Eigen::VectorXd gamma_star;
  double gamma_residual = 0.0;
  std::string gamma_method;
};

/// With solve_gamma false the result stops after the moments and step size.
PreparedExperiment prepare_experiment(const ExperimentConfig& cfg,
                                      bool solve_gamma = true);

struct RunArtifacts {
  PreparedExperiment setup;
  // Row i holds the value after i + 1 updates.
  Eigen::MatrixXd gamma_emp;     // horizon x ks
  Eigen::MatrixXd gamma_emp_se;  // standard error of the ensemble mean
  Eigen::MatrixXd gamma_theo;
  Eigen::VectorXd msd_emp;
  Eigen::VectorXd msd_emp_se;
  Eigen::VectorXd msd_theo;
  double msd_ss = 0.0;  // NaN unless eta = 0 and a steady state exists
  double ss_spectral_radius = 0.0;
  std::string ss_note;
  Eigen::MatrixXd final_delta;      // runs x N, NaN rows for diverged runs
  Eigen::MatrixXi final_rows;       // runs x N, largest-gap readout per run
  Eigen::VectorXd mean_final_delta;
  Eigen::VectorXi topology_row;     // largest-gap readout of the mean
  double topology_threshold = 0.0;
  std::vector<long> diverged_at;    // per run, -1 when the run stayed finite
  int completed_runs = 0;
};

RunArtifacts run_experiment(const ExperimentConfig& cfg);

struct CurveComparison {
  double max_gap_db = 0.0;
  long max_gap_index = -1;
  long burn_in = 0;
  long compared = 0;
  long excluded = 0;  // nonpositive or non-finite points after burn-in
  std::vector<double> segment_max_db;
};

/// |10 log10(a) - 10 log10(b)| over i >= burn_in. burn_in < 0 selects
/// size / 10.
CurveComparison compare_curves(const Eigen::VectorXd& empirical,
                               const Eigen::VectorXd& theoretical,
                               long burn_in = -1, int segments = 10);

/// Writes mean_curves.csv, msd.csv, topology.csv, run_topology.csv,
/// config.txt and plot.py into `dir`.
void emit_outputs(const RunArtifacts& art, const std::string& dir);

std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  Eigen::VectorXd values(int col) const;
};
CsvTable read_csv(const std::string& path);

}  // namespace gtopo

#endif  // GTOPO_HARNESS_HPP
