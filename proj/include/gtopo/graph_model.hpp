#ifndef GTOPO_GRAPH_MODEL_HPP
#define GTOPO_GRAPH_MODEL_HPP

#include <cstdint>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "gtopo/random.hpp"

namespace gtopo {

/// Binary adjacency matrix with zero diagonal. Entry (n, m) is 1 when node m
/// drives node n.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(Eigen::MatrixXd entries);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(int n, int m) const { return entries_(n, m); }

  /// Row `node` restricted to the other nodes, in increasing node order.
  Eigen::VectorXd parents_of(int node) const;

 private:
  Eigen::MatrixXd entries_;
};

/// The 5-node adjacency used in the linear validation experiments.
AdjacencyMatrix reference_adjacency_5();
/// The 3-node adjacency of the nonlinear validation experiment.
AdjacencyMatrix reference_adjacency_3();

/// y = A y + v with v ~ N(0, noise_std^2 I). `coupling` may be weighted but
/// must have a zero diagonal and I - A must be invertible.
struct LinearSignalModel {
  Eigen::MatrixXd coupling;
  double noise_std = 0.0;
  Eigen::MatrixXd covariance;   // R_yy = (I-A)^-1 R_vv (I-A)^-T
  Eigen::MatrixXd chol_factor;  // lower Cholesky factor of R_yy

  int dim() const { return static_cast<int>(coupling.rows()); }
};

LinearSignalModel build_linear_model(const Eigen::MatrixXd& coupling,
                                     double noise_std);

/// Streams i.i.d. N(0, R_yy) graph signals.
class LinearSampler {
 public:
  LinearSampler(const LinearSignalModel& model, std::uint64_t seed);
  void next(Eigen::Ref<Eigen::VectorXd> out);

 private:
  const LinearSignalModel* model_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  Eigen::VectorXd draw_;
};

/// Row i holds sample y(i).
Eigen::MatrixXd sample_linear(const LinearSignalModel& model,
                              std::uint64_t seed, int count);

/// Three-node implicit model y = f(y) + rho with rho ~ N(0, I).
struct NonlinearSignalModel {
  AdjacencyMatrix adjacency = reference_adjacency_3();
  double k1 = 8000.0;
  double k2 = 27.0;
  int max_iterations = 500;
  double tolerance = 1e-10;  // relative to 1 + ||y||
  // Noise draws whose solution has |y1| below this are rejected.
  double singular_guard = 1e-8;

  Eigen::Vector3d map(const Eigen::Vector3d& y) const;
  /// y - f(y) - rho
  Eigen::Vector3d residual(const Eigen::Vector3d& y,
                           const Eigen::Vector3d& noise) const;
  /// Solves (id - f)(y) = noise. Returns nullopt when the solution falls in
  /// the singular region |y1| < singular_guard; throws kSampling when the
  /// root-finder does not reach `tolerance`.
  std::optional<Eigen::Vector3d> invert(const Eigen::Vector3d& noise) const;
};

class NonlinearSampler {
 public:
  NonlinearSampler(const NonlinearSignalModel& model, std::uint64_t seed);
  void next(Eigen::Ref<Eigen::VectorXd> out);
  /// Noise of the most recent accepted draw.
  const Eigen::Vector3d& last_noise() const { return noise_; }

 private:
  const NonlinearSignalModel* model_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  Eigen::Vector3d noise_ = Eigen::Vector3d::Zero();
  std::uint64_t draws_ = 0;
};

Eigen::MatrixXd sample_nonlinear(const NonlinearSignalModel& model,
                                 std::uint64_t seed, int count);

/// Uncentred second-moment matrix of the rows of `samples`.
Eigen::MatrixXd second_moment(const Eigen::MatrixXd& samples);

/// Permutes a covariance over nodes 0..N so that `node` comes last, giving
/// the covariance of [inputs; y_node].
Eigen::MatrixXd target_last(const Eigen::MatrixXd& covariance, int node);

}  // namespace gtopo

#endif  // GTOPO_GRAPH_MODEL_HPP
