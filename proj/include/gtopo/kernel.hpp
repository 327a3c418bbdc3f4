#ifndef GTOPO_KERNEL_HPP
#define GTOPO_KERNEL_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gtopo {

// Component and node indices are 0-based throughout the library. The stacked
// index of (node m, atom q) in z, zeta and ell is m * |D| + q.

class GaussianKernel {
 public:
  explicit GaussianKernel(double bandwidth);

  double bandwidth() const { return sigma_; }

  double eval(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b) const;
  /// d kappa(a, b) / d a_m
  double grad_first_arg(const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b,
                        int m) const;
  /// d^2 kappa(a, b) / d a_m1 d b_m2
  double second_cross(const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& b, int m1,
                      int m2) const;

 private:
  double sigma_;
};

enum class DictionaryMode { kGrid, kCoherence };

class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(int dim, DictionaryMode mode, double coherence_threshold = 0.0);
  /// Fixed dictionary from the rows of `elements`.
  explicit Dictionary(const Eigen::MatrixXd& elements);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(elements_.size()); }
  bool empty() const { return elements_.empty(); }
  DictionaryMode mode() const { return mode_; }
  double coherence_threshold() const { return threshold_; }
  const Eigen::VectorXd& operator[](int q) const { return elements_[q]; }
  /// Elements as rows.
  Eigen::MatrixXd matrix() const;

  /// Coherence rule: admits the candidate iff its largest kernel value
  /// against the stored elements is at most the threshold.
  bool admit(const Eigen::Ref<const Eigen::VectorXd>& candidate,
             const GaussianKernel& kernel);

  void write(std::ostream& os) const;
  static Dictionary read(std::istream& is);
  void save(const std::string& path) const;
  static Dictionary load(const std::string& path);

 private:
  int dim_ = 0;
  DictionaryMode mode_ = DictionaryMode::kGrid;
  double threshold_ = 0.0;
  std::vector<Eigen::VectorXd> elements_;
};

/// `count` points uniform in [lo, hi]^dim.
Dictionary dictionary_grid(int dim, int count, double lo, double hi,
                           std::uint64_t seed);

struct FeatureVectors {
  Eigen::VectorXd k;     // |D|
  Eigen::VectorXd z;     // N|D|
  Eigen::VectorXd zeta;  // N|D|
  // ell[m] stacks ell_{m', m} over m' = 0..N-1, each block over atoms.
  std::vector<Eigen::VectorXd> ell;

  Eigen::VectorXd s() const;
  Eigen::VectorXd t(int m) const;
};

FeatureVectors compute_features(const GaussianKernel& kernel,
                                const Dictionary& dict,
                                const Eigen::Ref<const Eigen::VectorXd>& y);

/// Writes s and all t_m directly into preallocated storage: s has length
/// (N+1)|D|, t is (N+1)|D| x N with column m holding t_m.
void compute_features_into(const GaussianKernel& kernel,
                           const Dictionary& dict,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           Eigen::Ref<Eigen::VectorXd> s,
                           Eigen::Ref<Eigen::MatrixXd> t);

}  // namespace gtopo

#endif  // GTOPO_KERNEL_HPP
