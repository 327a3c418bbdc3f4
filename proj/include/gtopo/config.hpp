#ifndef GTOPO_CONFIG_HPP
#define GTOPO_CONFIG_HPP

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace gtopo {

enum class ModelKind { kLinear, kNonlinear, kCustom };

// Closed-form Gaussian moments or sample averages over covariance_samples
// draws of the model. Auto picks closed form except for the nonlinear model.
enum class MomentSource { kAuto, kClosedForm, kSample };

/// Experiment configuration. Text form is one `key = value` per line, `#`
/// starts a comment; see README for the key list.
struct ExperimentConfig {
  ModelKind model = ModelKind::kLinear;
  // Rows separated by ';', entries by ',' or spaces. Empty selects the
  // reference graph of the chosen model.
  Eigen::MatrixXd adjacency;
  double noise_std = 0.05;
  double k1 = 8000.0;
  double k2 = 27.0;
  long covariance_samples = 1000000;
  MomentSource moments = MomentSource::kAuto;

  double kernel_sigma = 1.0;
  int dictionary_count = 6;
  double dictionary_low = -1.0;
  double dictionary_high = 1.0;
  bool has_dictionary_seed = false;
  std::uint64_t dictionary_seed = 0;
  std::string dictionary_file;

  // Exactly one of mu and mu_scale is used; mu_scale multiplies 2/lambda_max.
  double mu = 0.0;
  double mu_scale = 0.0;
  double eta = 0.0;
  double forgetting = 0.99;
  bool use_exact_rtt = true;

  int runs = 100;
  long horizon = 5000;
  int node = 1;  // 1-based
  std::uint64_t seed = 1;
  int threads = 1;
  bool allow_divergence = false;
  double divergence_norm = 1e6;
  bool theory = true;
  double solver_tol = 1e-9;

  std::string out = "out";
  std::string cache;  // moment cache file, empty disables caching

  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Applies one key/value pair; throws kParse on unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value);
std::string config_to_string(const ExperimentConfig& cfg);

}  // namespace gtopo

#endif  // GTOPO_CONFIG_HPP
