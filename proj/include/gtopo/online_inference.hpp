#ifndef GTOPO_ONLINE_INFERENCE_HPP
#define GTOPO_ONLINE_INFERENCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gtopo {

struct EstimatorDims {
  int nodes = 0;       // N, number of candidate input nodes
  int dictionary = 0;  // |D|

  int feature_size() const { return (nodes + 1) * dictionary; }
};

struct EstimatorState {
  EstimatorDims dims;
  Eigen::VectorXd gamma_hat;            // [beta; alpha]
  std::vector<Eigen::MatrixXd> r_tt_hat;  // one per input node
  double mu = 0.0;
  double eta = 0.0;
  double forgetting = 0.0;
  std::uint64_t iteration = 0;
};

inline constexpr double kCovarianceInit = 1e-8;

/// gamma0 empty means zero start.
EstimatorState init_state(EstimatorDims dims, double mu, double eta,
                          double forgetting,
                          const Eigen::VectorXd& gamma0 = Eigen::VectorXd());

/// R_m <- a R_m + (1 - a) t_m t_m^T, column m of `t` holding t_m.
void update_covariance(EstimatorState& state,
                       const Eigen::Ref<const Eigen::MatrixXd>& t);

/// sqrt(gamma^T R gamma), negative round-off clamped to zero.
double delta(const Eigen::Ref<const Eigen::VectorXd>& gamma,
             const Eigen::Ref<const Eigen::MatrixXd>& r);
double delta(const EstimatorState& state, int m);
Eigen::VectorXd deltas(const EstimatorState& state);

/// One subgradient step using the state's own R_tt estimates.
void step(EstimatorState& state, const Eigen::Ref<const Eigen::VectorXd>& s,
          double y_n);
/// Same step with externally supplied regularizer matrices (the exact R_tt).
void step(EstimatorState& state, const Eigen::Ref<const Eigen::VectorXd>& s,
          double y_n, const std::vector<Eigen::MatrixXd>& r_tt);

struct TopologyEstimate {
  Eigen::VectorXd delta;
  Eigen::VectorXi adjacency_row;
  Eigen::VectorXd thresholds;
};

TopologyEstimate read_topology(const Eigen::VectorXd& delta,
                               const Eigen::VectorXd& thresholds);
TopologyEstimate read_topology(const EstimatorState& state,
                               const Eigen::VectorXd& thresholds);

/// Threshold in the middle of the widest gap between consecutive sorted
/// values, so that everything above the gap reads as an edge.
double largest_gap_threshold(const Eigen::VectorXd& delta);

/// gamma_hat and iteration counter, as text.
void save_snapshot(const EstimatorState& state, const std::string& path);
void load_snapshot(EstimatorState& state, const std::string& path);

}  // namespace gtopo

#endif  // GTOPO_ONLINE_INFERENCE_HPP
