#include "gtopo/theory.hpp"

#include <cmath>
#include <sstream>

#include "gtopo/error.hpp"

namespace gtopo {

namespace {

void check_fourth_order(const MomentSet& m) {
  require(m.has_fourth_order(), ErrorCode::kInvalidArgument,
          "fourth-order moment tables are required");
}

void check_gamma(const MomentSet& m, const Eigen::VectorXd& g) {
  require(g.size() == m.feature_size(), ErrorCode::kDimensionMismatch,
          "gamma* has wrong length");
}

Eigen::MatrixXd sym(const Eigen::MatrixXd& x) { return x + x.transpose(); }

Eigen::Map<const Eigen::VectorXd> vec(const Eigen::MatrixXd& x) {
  return {x.data(), x.size()};
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& x, int n) {
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

double checked_radicand(double r) {
  if (r < -1e-10) {
    std::ostringstream os;
    os << "negative radicand " << r << " in regularizer approximation";
    fail(ErrorCode::kNumerical, os.str());
  }
  return r;
}

}  // namespace

double stability_bound(const Eigen::MatrixXd& r_ss) {
  require(r_ss.rows() == r_ss.cols() && r_ss.rows() > 0,
          ErrorCode::kInvalidArgument, "R_ss must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r_ss,
                                                     Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  return lmax > 0.0 ? 2.0 / lmax : INFINITY;
}

OptimalErrorMoments optimal_error_moments(const MomentSet& moments,
                                          const Eigen::VectorXd& gamma_star) {
  check_fourth_order(moments);
  check_gamma(moments, gamma_star);
  const int ks = moments.feature_size();
  OptimalErrorMoments out;
  out.p = moments.r_sy - moments.r_ss * gamma_star;
  const Eigen::MatrixXd gg = gamma_star * gamma_star.transpose();
  Eigen::VectorXd q5 = vec(moments.t_ssyy) -
                       2.0 * moments.t_sssy.transpose() * gamma_star +
                       moments.f1 * vec(gg);
  out.q5 = unvec(q5, ks);
  out.q5 = 0.5 * (out.q5 + out.q5.transpose());
  return out;
}

Eigen::VectorXd regularizer_mean_term(const Eigen::MatrixXd& r_tt,
                                      const Eigen::VectorXd& mu_vec,
                                      const Eigen::MatrixXd& sigma) {
  require(r_tt.rows() == mu_vec.size() && sigma.rows() == mu_vec.size(),
          ErrorCode::kDimensionMismatch, "regularizer term: shape mismatch");
  const Eigen::VectorXd rmu = r_tt * mu_vec;
  const double rad = checked_radicand(
      (r_tt.cwiseProduct(sigma.transpose())).sum() + mu_vec.dot(rmu));
  const double den = rad > 0.0 ? std::sqrt(rad) : 0.0;
  if (den < kTinyDenominator) return Eigen::VectorXd::Zero(mu_vec.size());
  return rmu / den;
}

TheoryModel::TheoryModel(const MomentSet& moments, Eigen::VectorXd gamma_star,
                         double mu, double eta)
    : m_(&moments), gamma_star_(std::move(gamma_star)), mu_(mu), eta_(eta) {
  check_fourth_order(moments);
  check_gamma(moments, gamma_star_);
  require(mu >= 0.0 && std::isfinite(mu), ErrorCode::kInvalidArgument,
          "mu must be nonnegative");
  require(eta >= 0.0 && std::isfinite(eta), ErrorCode::kInvalidArgument,
          "eta must be nonnegative");
  const int ks = moments.feature_size();
  err_ = optimal_error_moments(moments, gamma_star_);
  // E{s_u s_a s_v e0} = E{s_u s_a s_v y_n} - sum_b E{s_u s_a s_v s_b} g*_b
  g_ = moments.t_sssy.transpose();
  for (int b = 0; b < ks; ++b) {
    g_.noalias() -= gamma_star_(b) * moments.f1.middleCols(ks * b, ks);
  }
}

TheoryState TheoryModel::initial_state() const {
  TheoryState s;
  s.mean_v = -gamma_star_;
  s.v = gamma_star_ * gamma_star_.transpose();
  return s;
}

Eigen::VectorXd TheoryModel::next_mean(const TheoryState& s) const {
  const MomentSet& m = *m_;
  Eigen::VectorXd out =
      s.mean_v - mu_ * (m.r_ss * s.mean_v) + mu_ * err_.p;
  if (eta_ > 0.0) {
    const Eigen::VectorXd mu_vec = s.mean_v + gamma_star_;
    const Eigen::MatrixXd sigma = s.v - s.mean_v * s.mean_v.transpose();
    for (const auto& r : m.r_tt) {
      out -= mu_ * eta_ * regularizer_mean_term(r, mu_vec, sigma);
    }
  }
  return out;
}

Eigen::MatrixXd TheoryModel::next_mean_square(const TheoryState& s) const {
  const MomentSet& m = *m_;
  const int ks = m.feature_size();
  const double mu = mu_;
  const double eta = eta_;
  const Eigen::MatrixXd& v = s.v;

  const Eigen::MatrixXd q3 = s.mean_v * err_.p.transpose();
  const Eigen::MatrixXd q4 = unvec(g_ * s.mean_v, ks);
  const Eigen::MatrixXd q6 = unvec(m.f1 * vec(v), ks);

  Eigen::MatrixXd out = v - mu * sym(v * m.r_ss) + mu * sym(q3) -
                        mu * mu * sym(q4) + mu * mu * q6 + mu * mu * err_.q5;

  if (eta > 0.0) {
    const Eigen::VectorXd mu_vec = s.mean_v + gamma_star_;
    const Eigen::MatrixXd sigma = v - s.mean_v * s.mean_v.transpose();
    const Eigen::MatrixXd second = sigma + mu_vec * mu_vec.transpose();
    const Eigen::MatrixXd q7_left =
        sigma + (mu_vec - gamma_star_) * mu_vec.transpose();
    const int n = static_cast<int>(m.r_tt.size());

    std::vector<double> quad(n), tr(n), den(n);
    std::vector<Eigen::MatrixXd> rs(n);
    std::vector<Eigen::VectorXd> rmu(n);
    Eigen::MatrixXd q7 = Eigen::MatrixXd::Zero(ks, ks);
    Eigen::VectorXd reg = Eigen::VectorXd::Zero(ks);
    for (int a = 0; a < n; ++a) {
      const Eigen::MatrixXd& r = m.r_tt[a];
      rs[a] = r * sigma;
      rmu[a] = r * mu_vec;
      quad[a] = mu_vec.dot(rmu[a]);
      tr[a] = rs[a].trace();
      const double rad = checked_radicand(tr[a] + quad[a]);
      den[a] = rad > 0.0 ? std::sqrt(rad) : 0.0;
      if (den[a] >= kTinyDenominator) {
        q7 += q7_left * r / den[a];
        reg += rmu[a] / den[a];
      }
    }
    const Eigen::MatrixXd q9 = err_.p * reg.transpose();

    Eigen::MatrixXd q10 = Eigen::MatrixXd::Zero(ks, ks);
    for (int a = 0; a < n; ++a) {
      const Eigen::MatrixXd left = m.r_tt[a] * second;
      for (int b = 0; b < n; ++b) {
        const double e4 = 4.0 * rmu[a].dot(sigma * rmu[b]) +
                          2.0 * (rs[a].cwiseProduct(rs[b].transpose())).sum() +
                          (quad[a] + tr[a]) * (quad[b] + tr[b]);
        const double d = std::sqrt(std::max(checked_radicand(e4), 0.0));
        if (d >= kTinyDenominator) q10 += left * m.r_tt[b] / d;
      }
    }

    out += -mu * eta * sym(q7) + mu * mu * eta * eta * q10 +
           mu * mu * eta * sym(m.r_ss * q7) - mu * mu * eta * sym(q9);
  }
  out = 0.5 * (out + out.transpose());
  return out;
}

void TheoryModel::step(TheoryState& s) const {
  Eigen::VectorXd mean = next_mean(s);
  Eigen::MatrixXd v = next_mean_square(s);
  if (!mean.allFinite() || !v.allFinite()) {
    fail(ErrorCode::kDivergence, "theory recursion diverged at iteration " +
                                     std::to_string(s.iteration + 1));
  }
  s.mean_v = std::move(mean);
  s.v = std::move(v);
  ++s.iteration;
}

Eigen::VectorXd mean_step(const TheoryState& s, const MomentSet& moments,
                          const Eigen::VectorXd& gamma_star, double mu,
                          double eta) {
  return TheoryModel(moments, gamma_star, mu, eta).next_mean(s);
}

Eigen::MatrixXd mean_square_step(const TheoryState& s,
                                 const MomentSet& moments,
                                 const Eigen::VectorXd& gamma_star, double mu,
                                 double eta) {
  return TheoryModel(moments, gamma_star, mu, eta).next_mean_square(s);
}

double msd(const TheoryState& s) {
  const double t = s.v.trace();
  if (t >= 0.0) return t;
  require(t >= -1e-12 * s.v.norm(), ErrorCode::kNumerical,
          "negative trace of V beyond round-off");
  return 0.0;
}

SteadyState steady_state_msd(const MomentSet& moments,
                             const Eigen::VectorXd& gamma_star, double mu) {
  check_fourth_order(moments);
  check_gamma(moments, gamma_star);
  require(mu > 0.0, ErrorCode::kInvalidArgument, "mu must be positive");
  const int ks = moments.feature_size();
  const int k2 = ks * ks;
  const Eigen::MatrixXd& r = moments.r_ss;
  // I2 - F0 = mu (I (x) R + R (x) I) - mu^2 F1
  Eigen::MatrixXd a = -mu * mu * moments.f1;
  for (int v = 0; v < ks; ++v) {
    for (int u = 0; u < ks; ++u) {
      const int row = u + ks * v;
      for (int w = 0; w < ks; ++w) {
        a(row, w + ks * v) += mu * r(u, w);
        a(row, u + ks * w) += mu * r(v, w);
      }
    }
  }
  a = 0.5 * (a + a.transpose());

  SteadyState out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      Eigen::MatrixXd::Identity(k2, k2) - a, Eigen::EigenvaluesOnly);
  out.spectral_radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(out.spectral_radius < 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "F0 has spectral radius " << out.spectral_radius
       << " >= 1; no steady state";
    fail(ErrorCode::kInstability, os.str());
  }
  const OptimalErrorMoments err = optimal_error_moments(moments, gamma_star);
  const Eigen::VectorXd rhs = mu * mu * vec(err.q5);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd x = lu.solve(rhs);
  require(x.allFinite(), ErrorCode::kNumerical,
          "steady-state linear solve failed");
  out.msd = std::max(0.0, unvec(x, ks).trace());
  return out;
}

}  // namespace gtopo
