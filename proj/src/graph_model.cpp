#include "gtopo/graph_model.hpp"

#include <cmath>
#include <sstream>

#include "gtopo/error.hpp"

namespace gtopo {

AdjacencyMatrix::AdjacencyMatrix(Eigen::MatrixXd entries)
    : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols() && entries_.rows() > 0,
          ErrorCode::kInvalidArgument, "adjacency matrix must be square");
  for (int i = 0; i < entries_.rows(); ++i) {
    for (int j = 0; j < entries_.cols(); ++j) {
      const double a = entries_(i, j);
      require(a == 0.0 || a == 1.0, ErrorCode::kInvalidArgument,
              "adjacency entries must be 0 or 1");
    }
    require(entries_(i, i) == 0.0, ErrorCode::kInvalidArgument,
            "adjacency matrix must not contain self-loops");
  }
}

Eigen::VectorXd AdjacencyMatrix::parents_of(int node) const {
  require(node >= 0 && node < size(), ErrorCode::kInvalidArgument,
          "node index out of range");
  Eigen::VectorXd row(size() - 1);
  for (int m = 0, k = 0; m < size(); ++m) {
    if (m != node) row(k++) = entries_(node, m);
  }
  return row;
}

AdjacencyMatrix reference_adjacency_5() {
  Eigen::MatrixXd a(5, 5);
  a << 0, 1, 0, 1, 1,
       1, 0, 1, 0, 1,
       1, 0, 0, 1, 0,
       0, 1, 1, 0, 1,
       1, 0, 1, 1, 0;
  return AdjacencyMatrix(a);
}

AdjacencyMatrix reference_adjacency_3() {
  Eigen::MatrixXd a(3, 3);
  a << 0, 0, 1,
       1, 0, 1,
       1, 0, 0;
  return AdjacencyMatrix(a);
}

LinearSignalModel build_linear_model(const Eigen::MatrixXd& coupling,
                                     double noise_std) {
  require(coupling.rows() == coupling.cols() && coupling.rows() > 0,
          ErrorCode::kModelConstruction, "coupling matrix must be square");
  require(noise_std > 0.0 && std::isfinite(noise_std),
          ErrorCode::kModelConstruction, "noise_std must be positive");
  for (int i = 0; i < coupling.rows(); ++i) {
    require(coupling(i, i) == 0.0, ErrorCode::kModelConstruction,
            "coupling matrix must have a zero diagonal");
  }
  const int n = static_cast<int>(coupling.rows());
  const Eigen::MatrixXd i_minus_a =
      Eigen::MatrixXd::Identity(n, n) - coupling;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(i_minus_a);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    fail(ErrorCode::kModelConstruction, "I - A is singular");
  }
  const Eigen::MatrixXd inv = lu.inverse();

  LinearSignalModel model;
  model.coupling = coupling;
  model.noise_std = noise_std;
  model.covariance = noise_std * noise_std * inv * inv.transpose();
  model.covariance = 0.5 * (model.covariance + model.covariance.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
  require(llt.info() == Eigen::Success, ErrorCode::kModelConstruction,
          "input covariance is not positive definite");
  model.chol_factor = llt.matrixL();
  return model;
}

LinearSampler::LinearSampler(const LinearSignalModel& model,
                             std::uint64_t seed)
    : model_(&model), rng_(seed), draw_(model.dim()) {}

void LinearSampler::next(Eigen::Ref<Eigen::VectorXd> out) {
  for (int k = 0; k < draw_.size(); ++k) draw_(k) = normal_(rng_);
  out.noalias() = model_->chol_factor.triangularView<Eigen::Lower>() * draw_;
}

Eigen::MatrixXd sample_linear(const LinearSignalModel& model,
                              std::uint64_t seed, int count) {
  require(count >= 1, ErrorCode::kInvalidArgument, "count must be >= 1");
  LinearSampler sampler(model, seed);
  Eigen::MatrixXd out(count, model.dim());
  Eigen::VectorXd y(model.dim());
  for (int i = 0; i < count; ++i) {
    sampler.next(y);
    out.row(i) = y.transpose();
  }
  return out;
}

namespace {

double coupling_term(const NonlinearSignalModel& m, const Eigen::Vector3d& y) {
  const double s = y(2) + y(0);
  return m.k1 * s * s * s / (m.k2 * y(0));
}

double squash_denominator(double c) {
  return std::pow(0.5 + std::exp(c), 5.0) + 1.0;
}

}  // namespace

Eigen::Vector3d NonlinearSignalModel::map(const Eigen::Vector3d& y) const {
  const double c = coupling_term(*this, y);
  return {y(0) - c,
          y(1) + (y(1) - c) / squash_denominator(c),
          y(2) + y(0) + c};
}

Eigen::Vector3d NonlinearSignalModel::residual(
    const Eigen::Vector3d& y, const Eigen::Vector3d& noise) const {
  return y - map(y) - noise;
}

std::optional<Eigen::Vector3d> NonlinearSignalModel::invert(
    const Eigen::Vector3d& noise) const {
  // (id - f)(y) = [c(y); -(y2 - c)/D(c); -y1 - c] is triangular in
  // (c, y1, y3, y2), which gives the starting point; Newton then drives the
  // full residual below tolerance.
  Eigen::Vector3d y;
  y(0) = -noise(2) - noise(0);
  if (std::abs(y(0)) < singular_guard) return std::nullopt;
  y(2) = -y(0) + std::cbrt(noise(0) * k2 * y(0) / k1);
  y(1) = noise(0) - noise(1) * squash_denominator(noise(0));

  Eigen::Vector3d r = residual(y, noise);
  double norm = r.norm();
  auto done = [&] { return norm <= tolerance * (1.0 + y.norm()); };
  for (int it = 0; it < max_iterations && !done(); ++it) {
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(y(j)));
      Eigen::Vector3d yp = y, ym = y;
      yp(j) += h;
      ym(j) -= h;
      jac.col(j) = (residual(yp, noise) - residual(ym, noise)) / (2.0 * h);
    }
    const Eigen::Vector3d step = jac.partialPivLu().solve(-r);
    double t = 1.0;
    bool improved = false;
    for (int b = 0; b < 60; ++b, t *= 0.5) {
      const Eigen::Vector3d trial = y + t * step;
      if (std::abs(trial(0)) < singular_guard) continue;
      const Eigen::Vector3d rt = residual(trial, noise);
      if (rt.allFinite() && rt.norm() < norm) {
        y = trial;
        r = rt;
        norm = rt.norm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!done() || !y.allFinite()) {
    std::ostringstream os;
    os.precision(17);
    os << "nonlinear sampler did not converge for noise [" << noise(0) << ", "
       << noise(1) << ", " << noise(2) << "], residual " << norm;
    fail(ErrorCode::kSampling, os.str());
  }
  if (std::abs(y(0)) < singular_guard) return std::nullopt;
  return y;
}

NonlinearSampler::NonlinearSampler(const NonlinearSignalModel& model,
                                   std::uint64_t seed)
    : model_(&model), rng_(seed) {}

void NonlinearSampler::next(Eigen::Ref<Eigen::VectorXd> out) {
  require(out.size() == 3, ErrorCode::kDimensionMismatch,
          "nonlinear model produces 3-node signals");
  for (;;) {
    for (int k = 0; k < 3; ++k) noise_(k) = normal_(rng_);
    ++draws_;
    try {
      if (auto y = model_->invert(noise_)) {
        out = *y;
        return;
      }
    } catch (const Error& e) {
      fail(ErrorCode::kSampling,
           "draw " + std::to_string(draws_) + ": " + e.what());
    }
  }
}

Eigen::MatrixXd sample_nonlinear(const NonlinearSignalModel& model,
                                 std::uint64_t seed, int count) {
  require(count >= 1, ErrorCode::kInvalidArgument, "count must be >= 1");
  NonlinearSampler sampler(model, seed);
  Eigen::MatrixXd out(count, 3);
  Eigen::VectorXd y(3);
  for (int i = 0; i < count; ++i) {
    sampler.next(y);
    out.row(i) = y.transpose();
  }
  return out;
}

Eigen::MatrixXd second_moment(const Eigen::MatrixXd& samples) {
  require(samples.rows() >= 1, ErrorCode::kInvalidArgument, "no samples");
  Eigen::MatrixXd m = samples.transpose() * samples /
                      static_cast<double>(samples.rows());
  return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd target_last(const Eigen::MatrixXd& covariance, int node) {
  const int n = static_cast<int>(covariance.rows());
  require(node >= 0 && node < n, ErrorCode::kInvalidArgument,
          "node index out of range");
  std::vector<int> order;
  for (int m = 0; m < n; ++m) {
    if (m != node) order.push_back(m);
  }
  order.push_back(node);
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = covariance(order[i], order[j]);
  }
  return out;
}

}  // namespace gtopo
