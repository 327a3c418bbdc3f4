#ifndef GTOPO_GAUSSIAN_MOMENTS_HPP
#define GTOPO_GAUSSIAN_MOMENTS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtopo/kernel.hpp"

namespace gtopo {

/// E{prod_k x_{idx[k]}} for x ~ N(mean, cov), at most 4 indices.
double gaussian_product_moment(const Eigen::Ref<const Eigen::VectorXd>& mean,
                               const Eigen::Ref<const Eigen::MatrixXd>& cov,
                               const std::vector<int>& idx);

/// Arguments of the generic Gaussian integral
///   E{ prod_k (y~_{h_k} - x4_{x_k})^{iota_k} prod_j kappa(y, omega_j) }
/// with y~ = [y; y_n] ~ N(0, R). Atoms fill slots p, q, r, s in order; the
/// slot count is 1 + c1 + c2 + c3. x4 stacks the active atoms, so x4 index
/// slot * N + dim refers to component dim of the atom in that slot.
struct NuParameters {
  struct Factor {
    int h = -1;  // index into y~; -1 marks the factor inactive
    int x = -1;  // index into x4; -1 means no offset
  };
  std::array<int, 3> c{0, 0, 0};  // c1, c2, c3
  std::array<int, 4> atoms{-1, -1, -1, -1};
  std::array<Factor, 4> factors{};

  int active_atoms() const { return 1 + c[0] + c[1] + c[2]; }
};

class MomentContext {
 public:
  /// `covariance` is the covariance of [y; y_n] with the target node last,
  /// so it is (N+1) x (N+1) for a dictionary of dimension N.
  MomentContext(Eigen::MatrixXd covariance, double sigma, Dictionary dict);

  int nodes() const { return n_; }
  int dictionary_size() const { return dict_.size(); }
  int feature_size() const { return (n_ + 1) * dict_.size(); }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Dictionary& dictionary() const { return dict_; }

  double nu(const NuParameters& p) const;

  // Regime-level quantities, indexed by the number of active atoms (1..4).
  struct Regime {
    Eigen::MatrixXd sigma_post;  // [c4 B0 + R^-1]^-1
    Eigen::MatrixXd mean_map;    // -sigma_post B4, (N+1) x 4N
    Eigen::MatrixXd quad;        // Q4 + B4^T sigma_post B4, 4N x 4N
    double det_factor = 0.0;     // det(R)^-1/2 det(sigma_post)^1/2
    double condition = 0.0;      // of c4 B0 + R^-1
  };
  const Regime& regime(int atoms) const { return regimes_[atoms - 1]; }

 private:
  Eigen::MatrixXd cov_;
  double sigma_;
  Dictionary dict_;
  int n_;
  std::array<Regime, 4> regimes_;
};

inline constexpr double kMaxInnerCondition = 1e12;

struct MomentSet {
  int nodes = 0;
  int dictionary = 0;
  Eigen::MatrixXd r_ss;
  Eigen::VectorXd r_sy;
  std::vector<Eigen::MatrixXd> r_tt;
  double r_yy = 0.0;  // E{y_n^2}
  // Fourth-order tables; empty unless requested.
  Eigen::MatrixXd f1;      // (u + ks v, a + ks b) -> E{s_u s_v s_a s_b}
  Eigen::MatrixXd t_sssy;  // (u, a + ks b) -> E{s_u s_a s_b y_n}
  Eigen::MatrixXd t_ssyy;  // (u, v) -> E{s_u s_v y_n^2}
  Eigen::VectorXd gamma_star;  // optional, stored with cached sets

  int feature_size() const { return (nodes + 1) * dictionary; }
  bool has_fourth_order() const { return f1.size() > 0; }
};

Eigen::MatrixXd compute_R_tt(const MomentContext& ctx, int m);
Eigen::MatrixXd compute_R_ss(const MomentContext& ctx);
Eigen::VectorXd compute_r_sy(const MomentContext& ctx);

struct FourthOrderTables {
  Eigen::MatrixXd f1;
  Eigen::MatrixXd t_sssy;
  Eigen::MatrixXd t_ssyy;
};
FourthOrderTables compute_fourth_order(const MomentContext& ctx);

MomentSet compute_moments(const MomentContext& ctx, bool fourth_order = true);

/// Sample averages of the same quantities over the rows of `samples`, each
/// row holding the N inputs followed by the target.
MomentSet estimate_moments(const GaussianKernel& kernel, const Dictionary& dict,
                           const Eigen::Ref<const Eigen::MatrixXd>& samples,
                           bool fourth_order = true);

/// Generic expectation of a product of features, optionally times y_n^power.
/// Each feature is identified by kind and stacked index.
enum class FeatureKind { kS, kT };
struct FeatureRef {
  FeatureKind kind = FeatureKind::kS;
  int index = 0;
  int node = 0;  // m, only for kT
};
double feature_moment(const MomentContext& ctx,
                      const std::vector<FeatureRef>& features, int y_power);

/// FNV-1a hash of covariance, dictionary and bandwidth.
std::uint64_t moment_key(const MomentContext& ctx);
std::uint64_t moment_key(const Eigen::MatrixXd& samples, const Dictionary& dict,
                         double sigma);

void save_moments(const MomentSet& set, std::uint64_t key,
                  const std::string& path);
/// Returns false when the file is missing or its key differs.
bool load_moments(MomentSet& set, std::uint64_t key, const std::string& path);

}  // namespace gtopo

#endif  // GTOPO_GAUSSIAN_MOMENTS_HPP
