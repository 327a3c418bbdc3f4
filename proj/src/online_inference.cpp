#include "gtopo/online_inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "gtopo/error.hpp"

namespace gtopo {

EstimatorState init_state(EstimatorDims dims, double mu, double eta,
                          double forgetting, const Eigen::VectorXd& gamma0) {
  require(dims.nodes >= 1 && dims.dictionary >= 1,
          ErrorCode::kInvalidArgument, "estimator dimensions must be >= 1");
  require(mu > 0.0 && std::isfinite(mu), ErrorCode::kInvalidArgument,
          "mu must be positive");
  require(eta >= 0.0 && std::isfinite(eta), ErrorCode::kInvalidArgument,
          "eta must be nonnegative");
  require(forgetting >= 0.0 && forgetting < 1.0, ErrorCode::kInvalidArgument,
          "forgetting factor must lie in [0, 1)");
  const int ks = dims.feature_size();
  EstimatorState st;
  st.dims = dims;
  st.mu = mu;
  st.eta = eta;
  st.forgetting = forgetting;
  if (gamma0.size() == 0) {
    st.gamma_hat = Eigen::VectorXd::Zero(ks);
  } else {
    require(gamma0.size() == ks, ErrorCode::kDimensionMismatch,
            "gamma0 has wrong length");
    require(gamma0.allFinite(), ErrorCode::kInvalidArgument,
            "gamma0 must be finite");
    st.gamma_hat = gamma0;
  }
  st.r_tt_hat.assign(dims.nodes,
                     kCovarianceInit * Eigen::MatrixXd::Identity(ks, ks));
  return st;
}

void update_covariance(EstimatorState& state,
                       const Eigen::Ref<const Eigen::MatrixXd>& t) {
  const int ks = state.dims.feature_size();
  require(t.rows() == ks && t.cols() == state.dims.nodes,
          ErrorCode::kDimensionMismatch, "t has wrong shape");
  const double a = state.forgetting;
  for (int m = 0; m < state.dims.nodes; ++m) {
    Eigen::MatrixXd& r = state.r_tt_hat[m];
    r *= a;
    r.selfadjointView<Eigen::Lower>().rankUpdate(t.col(m), 1.0 - a);
    r.triangularView<Eigen::StrictlyUpper>() = r.transpose();
  }
}

double delta(const Eigen::Ref<const Eigen::VectorXd>& gamma,
             const Eigen::Ref<const Eigen::MatrixXd>& r) {
  require(r.rows() == gamma.size() && r.cols() == gamma.size(),
          ErrorCode::kDimensionMismatch, "delta: shape mismatch");
  const double q = gamma.dot(r * gamma);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

double delta(const EstimatorState& state, int m) {
  require(m >= 0 && m < state.dims.nodes, ErrorCode::kInvalidArgument,
          "node index out of range");
  return delta(state.gamma_hat, state.r_tt_hat[m]);
}

Eigen::VectorXd deltas(const EstimatorState& state) {
  Eigen::VectorXd d(state.dims.nodes);
  for (int m = 0; m < state.dims.nodes; ++m) d(m) = delta(state, m);
  return d;
}

void step(EstimatorState& state, const Eigen::Ref<const Eigen::VectorXd>& s,
          double y_n, const std::vector<Eigen::MatrixXd>& r_tt) {
  const int ks = state.dims.feature_size();
  require(s.size() == ks, ErrorCode::kDimensionMismatch, "s has wrong length");
  require(static_cast<int>(r_tt.size()) == state.dims.nodes,
          ErrorCode::kDimensionMismatch, "need one R_tt per node");
  Eigen::VectorXd& g = state.gamma_hat;
  const double err = y_n - s.dot(g);
  Eigen::VectorXd update = (state.mu * err) * s;
  if (state.eta > 0.0) {
    Eigen::VectorXd rg(ks);
    for (int m = 0; m < state.dims.nodes; ++m) {
      rg.noalias() = r_tt[m] * g;
      const double q = g.dot(rg);
      if (q > 0.0) update -= (state.mu * state.eta / std::sqrt(q)) * rg;
    }
  }
  g += update;
  ++state.iteration;
  if (!g.allFinite()) {
    fail(ErrorCode::kDivergence,
         "estimate diverged at iteration " + std::to_string(state.iteration));
  }
}

void step(EstimatorState& state, const Eigen::Ref<const Eigen::VectorXd>& s,
          double y_n) {
  step(state, s, y_n, state.r_tt_hat);
}

TopologyEstimate read_topology(const Eigen::VectorXd& delta,
                               const Eigen::VectorXd& thresholds) {
  require(delta.size() == thresholds.size(), ErrorCode::kDimensionMismatch,
          "one threshold per node required");
  require((thresholds.array() >= 0.0).all(), ErrorCode::kInvalidArgument,
          "thresholds must be nonnegative");
  TopologyEstimate out;
  out.delta = delta;
  out.thresholds = thresholds;
  out.adjacency_row = (delta.array() >= thresholds.array()).cast<int>();
  return out;
}

TopologyEstimate read_topology(const EstimatorState& state,
                               const Eigen::VectorXd& thresholds) {
  return read_topology(deltas(state), thresholds);
}

double largest_gap_threshold(const Eigen::VectorXd& delta) {
  require(delta.size() >= 1, ErrorCode::kInvalidArgument, "no delta values");
  std::vector<double> v(delta.data(), delta.data() + delta.size());
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return 0.5 * v[0];
  std::size_t best = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i + 1] - v[i] > v[best + 1] - v[best]) best = i;
  }
  return 0.5 * (v[best] + v[best + 1]);
}

void save_snapshot(const EstimatorState& state, const std::string& path) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot write " + path);
  os << "iteration " << state.iteration << '\n'
     << "size " << state.gamma_hat.size() << '\n'
     << std::setprecision(17);
  for (Eigen::Index i = 0; i < state.gamma_hat.size(); ++i) {
    os << state.gamma_hat(i) << '\n';
  }
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + path);
}

void load_snapshot(EstimatorState& state, const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot read " + path);
  std::string key1, key2;
  std::uint64_t iteration = 0;
  Eigen::Index n = 0;
  is >> key1 >> iteration >> key2 >> n;
  require(is && key1 == "iteration" && key2 == "size", ErrorCode::kParse,
          "bad snapshot header in " + path);
  require(n == state.dims.feature_size(), ErrorCode::kDimensionMismatch,
          "snapshot size does not match estimator");
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(static_cast<bool>(is >> g(i)), ErrorCode::kParse,
            "truncated snapshot " + path);
  }
  state.gamma_hat = g;
  state.iteration = iteration;
}

}  // namespace gtopo
