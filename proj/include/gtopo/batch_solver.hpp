#ifndef GTOPO_BATCH_SOLVER_HPP
#define GTOPO_BATCH_SOLVER_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtopo/gaussian_moments.hpp"

namespace gtopo {

/// Symmetric PSD square root, eigenvalues floored at zero.
Eigen::MatrixXd factor_Rtt(const Eigen::MatrixXd& r_tt);

/// min 1/2 g^T R_ss g - g^T r_sy + eta sum_m ||C_m^T g||
struct BatchProblem {
  Eigen::MatrixXd r_ss;
  Eigen::VectorXd r_sy;
  double eta = 0.0;
  std::vector<Eigen::MatrixXd> c;

  static BatchProblem from_moments(const MomentSet& m, double eta);
  int size() const { return static_cast<int>(r_sy.size()); }
};

double objective(const BatchProblem& p, const Eigen::VectorXd& gamma);

/// Norm of the minimum-norm element of the subdifferential. Groups with
/// ||C_m^T g|| <= group_zero_tol contribute their whole unit ball.
double kkt_residual(const BatchProblem& p, const Eigen::VectorXd& gamma,
                    double group_zero_tol = 1e-10);

struct SolverOptions {
  double tol = 1e-9;  // on residual / (1 + ||r_sy||)
  int max_iter = 2000;
  // Take the iterative path even when eta = 0.
  bool force_iterative = false;
};

struct SolveReport {
  Eigen::VectorXd gamma;
  bool converged = false;
  long iterations = 0;
  double residual = 0.0;  // raw KKT residual
  double objective = 0.0;
  std::string method;
};

/// eta = 0: direct solve (ridge 1e-10 lambda_max when R_ss is numerically
/// singular). eta > 0: smoothed Newton continuation on the group norms,
/// stopped on the exact KKT residual.
SolveReport solve_gamma_star(const BatchProblem& p,
                             const SolverOptions& opt = {});

/// Slow independent solver (ADMM on w_m = C_m^T g) used as a cross-check.
SolveReport solve_gamma_star_reference(const BatchProblem& p, double tol,
                                       long max_iter);

}  // namespace gtopo

#endif  // GTOPO_BATCH_SOLVER_HPP
