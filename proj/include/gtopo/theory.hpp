#ifndef GTOPO_THEORY_HPP
#define GTOPO_THEORY_HPP

#include <Eigen/Dense>

#include "gtopo/gaussian_moments.hpp"

namespace gtopo {

/// 2 / lambda_max(R_ss); +infinity when R_ss has no positive eigenvalue.
double stability_bound(const Eigen::MatrixXd& r_ss);

struct OptimalErrorMoments {
  Eigen::VectorXd p;   // r_sy - R_ss gamma*
  Eigen::MatrixXd q5;  // E{s s^T e0^2}
};
OptimalErrorMoments optimal_error_moments(const MomentSet& moments,
                                          const Eigen::VectorXd& gamma_star);

/// R mu / sqrt(Tr{R Sigma} + mu^T R mu), zero when the root is below 1e-14.
Eigen::VectorXd regularizer_mean_term(const Eigen::MatrixXd& r_tt,
                                      const Eigen::VectorXd& mu_vec,
                                      const Eigen::MatrixXd& sigma);

struct TheoryState {
  Eigen::VectorXd mean_v;  // E{v}
  Eigen::MatrixXd v;       // E{v v^T}
  long iteration = 0;
};

inline constexpr double kTinyDenominator = 1e-14;

/// Mean and mean-square recursions for one configuration. Tables derived from
/// the moment set are precomputed once.
class TheoryModel {
 public:
  TheoryModel(const MomentSet& moments, Eigen::VectorXd gamma_star, double mu,
              double eta);

  /// gamma_hat(0) = 0, so E{v(0)} = -gamma* and V(0) = gamma* gamma*^T.
  TheoryState initial_state() const;

  Eigen::VectorXd next_mean(const TheoryState& s) const;
  Eigen::MatrixXd next_mean_square(const TheoryState& s) const;
  /// Advances both recursions from the same time index.
  void step(TheoryState& s) const;

  const Eigen::VectorXd& gamma_star() const { return gamma_star_; }
  const OptimalErrorMoments& error_moments() const { return err_; }

 private:
  const MomentSet* m_;
  Eigen::VectorXd gamma_star_;
  double mu_;
  double eta_;
  OptimalErrorMoments err_;
  Eigen::MatrixXd g_;  // (u + ks v, a) -> E{s_u s_a s_v e0}
};

Eigen::VectorXd mean_step(const TheoryState& s, const MomentSet& moments,
                          const Eigen::VectorXd& gamma_star, double mu,
                          double eta);
Eigen::MatrixXd mean_square_step(const TheoryState& s,
                                 const MomentSet& moments,
                                 const Eigen::VectorXd& gamma_star, double mu,
                                 double eta);

double msd(const TheoryState& s);

struct SteadyState {
  double msd = 0.0;
  double spectral_radius = 0.0;  // of F0
};
/// eta = 0 steady state. Throws kInstability when F0 has spectral radius
/// >= 1.
SteadyState steady_state_msd(const MomentSet& moments,
                             const Eigen::VectorXd& gamma_star, double mu);

}  // namespace gtopo

#endif  // GTOPO_THEORY_HPP
