#include "gtopo/batch_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gtopo/error.hpp"

namespace gtopo {

Eigen::MatrixXd factor_Rtt(const Eigen::MatrixXd& r_tt) {
  require(r_tt.rows() == r_tt.cols() && r_tt.rows() > 0,
          ErrorCode::kInvalidArgument, "R_tt must be square");
  const double asym = (r_tt - r_tt.transpose()).norm();
  require(asym <= 1e-10 * std::max(1.0, r_tt.norm()),
          ErrorCode::kInvalidArgument, "R_tt must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (r_tt + r_tt.transpose()));
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double lmax = std::max(ev.maxCoeff(), 0.0);
  if (ev.minCoeff() < -1e-8 * lmax) {
    std::ostringstream os;
    os << "R_tt is not PSD (smallest eigenvalue " << ev.minCoeff()
       << ", largest " << lmax << ")";
    fail(ErrorCode::kNumerical, os.str());
  }
  const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() *
         eig.eigenvectors().transpose();
}

BatchProblem BatchProblem::from_moments(const MomentSet& m, double eta) {
  require(eta >= 0.0 && std::isfinite(eta), ErrorCode::kInvalidArgument,
          "eta must be nonnegative");
  BatchProblem p;
  p.r_ss = m.r_ss;
  p.r_sy = m.r_sy;
  p.eta = eta;
  for (const auto& r : m.r_tt) p.c.push_back(factor_Rtt(r));
  return p;
}

double objective(const BatchProblem& p, const Eigen::VectorXd& gamma) {
  double f = 0.5 * gamma.dot(p.r_ss * gamma) - gamma.dot(p.r_sy);
  for (const auto& c : p.c) f += p.eta * (c.transpose() * gamma).norm();
  return f;
}

namespace {

void check_problem(const BatchProblem& p) {
  const int k = p.size();
  require(k > 0 && p.r_ss.rows() == k && p.r_ss.cols() == k,
          ErrorCode::kDimensionMismatch, "R_ss and r_sy disagree");
  require(p.eta >= 0.0, ErrorCode::kInvalidArgument, "eta must be >= 0");
  for (const auto& c : p.c) {
    require(c.rows() == k, ErrorCode::kDimensionMismatch,
            "C_m has wrong row count");
  }
}

// min || g0 + eta sum_{m in idle} C_m u_m ||, ||u_m|| <= 1, by accelerated
// projected gradient.
double min_norm_subgradient(const BatchProblem& p, const Eigen::VectorXd& g0,
                            const std::vector<int>& idle) {
  if (idle.empty() || p.eta == 0.0) return g0.norm();
  const int k = p.size();
  const int ni = static_cast<int>(idle.size());
  Eigen::MatrixXd a(k, 0);
  std::vector<Eigen::Index> widths;
  for (int m : idle) {
    a.conservativeResize(k, a.cols() + p.c[m].cols());
    a.rightCols(p.c[m].cols()) = p.eta * p.c[m];
    widths.push_back(p.c[m].cols());
  }
  const double lip = std::max(
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.transpose() * a,
                                                     Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff(),
      1e-300);
  auto project = [&](Eigen::VectorXd& u) {
    Eigen::Index off = 0;
    for (int j = 0; j < ni; ++j) {
      auto blk = u.segment(off, widths[j]);
      const double n = blk.norm();
      if (n > 1.0) blk /= n;
      off += widths[j];
    }
  };
  Eigen::VectorXd u = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd y = u, prev = u;
  double t = 1.0;
  double best = g0.norm();
  for (int it = 0; it < 20000; ++it) {
    const Eigen::VectorXd res = g0 + a * y;
    Eigen::VectorXd next = y - a.transpose() * res / lip;
    project(next);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / tn) * (next - u);
    prev = u;
    u = next;
    t = tn;
    const double val = (g0 + a * u).norm();
    if (val < best) best = val;
    if ((u - prev).norm() <= 1e-15 * std::max(1.0, u.norm())) break;
  }
  return best;
}

}  // namespace

double kkt_residual(const BatchProblem& p, const Eigen::VectorXd& gamma,
                    double group_zero_tol) {
  check_problem(p);
  Eigen::VectorXd g = p.r_ss * gamma - p.r_sy;
  std::vector<int> idle;
  for (int m = 0; m < static_cast<int>(p.c.size()); ++m) {
    const Eigen::VectorXd w = p.c[m].transpose() * gamma;
    const double n = w.norm();
    if (n > group_zero_tol) {
      g += (p.eta / n) * (p.c[m] * w);
    } else {
      idle.push_back(m);
    }
  }
  return min_norm_subgradient(p, g, idle);
}

namespace {

SolveReport direct_solve(const BatchProblem& p) {
  const int k = p.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.r_ss,
                                                     Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  require(lmax > 0.0, ErrorCode::kNumerical, "R_ss is zero");
  const double eps = std::numeric_limits<double>::epsilon();
  Eigen::MatrixXd a = p.r_ss;
  SolveReport rep;
  rep.method = "direct";
  if (lmin <= k * eps * lmax) {
    a.diagonal().array() += 1e-10 * lmax;
    rep.method = "direct-ridge";
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  require(ldlt.info() == Eigen::Success, ErrorCode::kNumerical,
          "R_ss factorization failed");
  Eigen::VectorXd g = ldlt.solve(p.r_sy);
  // One step of iterative refinement.
  g += ldlt.solve(p.r_sy - a * g);
  rep.gamma = g;
  rep.iterations = 1;
  rep.residual = (p.r_ss * g - p.r_sy).norm();
  rep.converged = g.allFinite();
  rep.objective = objective(p, g);
  return rep;
}

}  // namespace

SolveReport solve_gamma_star(const BatchProblem& p, const SolverOptions& opt) {
  check_problem(p);
  require(opt.tol > 0.0 && opt.max_iter >= 1, ErrorCode::kInvalidArgument,
          "invalid solver options");
  if (p.eta == 0.0 && !opt.force_iterative) return direct_solve(p);

  const int k = p.size();
  const int ng = static_cast<int>(p.c.size());
  std::vector<Eigen::MatrixXd> rm(ng);
  for (int m = 0; m < ng; ++m) rm[m] = p.c[m] * p.c[m].transpose();
  const double target = opt.tol * (1.0 + p.r_sy.norm());

  auto smooth_value = [&](const Eigen::VectorXd& g, double eps) {
    double f = 0.5 * g.dot(p.r_ss * g) - g.dot(p.r_sy);
    for (int m = 0; m < ng; ++m) {
      f += p.eta * std::sqrt(g.dot(rm[m] * g) + eps * eps);
    }
    return f;
  };

  auto smooth_grad = [&](const Eigen::VectorXd& g, double eps) {
    Eigen::VectorXd grad = p.r_ss * g - p.r_sy;
    for (int m = 0; m < ng; ++m) {
      const Eigen::VectorXd rg = rm[m] * g;
      grad += (p.eta / std::sqrt(g.dot(rg) + eps * eps)) * rg;
    }
    return grad;
  };

  SolveReport rep;
  rep.method = "smoothed-newton";
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  long iters = 0;
  double eps = 1.0;
  for (int stage = 0; stage < 40 && iters < opt.max_iter; ++stage) {
    for (int it = 0; it < 100 && iters < opt.max_iter; ++it, ++iters) {
      Eigen::VectorXd grad = p.r_ss * g - p.r_sy;
      Eigen::MatrixXd hess = p.r_ss;
      for (int m = 0; m < ng; ++m) {
        const Eigen::VectorXd rg = rm[m] * g;
        const double rho = std::sqrt(g.dot(rg) + eps * eps);
        grad += (p.eta / rho) * rg;
        hess += (p.eta / rho) * rm[m];
        hess.noalias() -= (p.eta / (rho * rho * rho)) * rg * rg.transpose();
      }
      if (grad.norm() <= 1e-2 * target) break;
      hess = 0.5 * (hess + hess.transpose());
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      Eigen::VectorXd d = -ldlt.solve(grad);
      if (ldlt.info() != Eigen::Success || !d.allFinite() ||
          d.dot(grad) >= 0.0) {
        Eigen::MatrixXd h2 = hess;
        h2.diagonal().array() += 1e-12 * std::max(1.0, hess.trace());
        d = -h2.ldlt().solve(grad);
      }
      const double f0 = smooth_value(g, eps);
      const double slope = d.dot(grad);
      const double gnorm = grad.norm();
      const double noise =
          1e3 * std::numeric_limits<double>::epsilon() *
          (1.0 + std::abs(0.5 * g.dot(p.r_ss * g)) + std::abs(g.dot(p.r_sy)));
      double t = 1.0;
      bool moved = false;
      for (int b = 0; b < 60; ++b, t *= 0.5) {
        const Eigen::VectorXd trial = g + t * d;
        const double ft = smooth_value(trial, eps);
        // Near the optimum the objective decrease drops below its rounding
        // error, so a drop in the gradient norm is accepted as well.
        if (ft <= f0 + 1e-4 * t * slope ||
            (std::abs(ft - f0) <= noise &&
             smooth_grad(trial, eps).norm() <= (1.0 - 1e-4 * t) * gnorm)) {
          moved = (trial - g).norm() > 0.0;
          g = trial;
          break;
        }
      }
      if (!moved || (t * d).norm() <= 1e-15 * std::max(1.0, g.norm())) break;
    }
    rep.residual = kkt_residual(p, g);
    if (rep.residual <= target) break;
    eps *= 0.1;
    if (eps < 1e-300) break;
  }
  rep.gamma = g;
  rep.iterations = iters;
  rep.residual = kkt_residual(p, g);
  rep.converged = rep.residual <= target && g.allFinite();
  rep.objective = objective(p, g);
  return rep;
}

SolveReport solve_gamma_star_reference(const BatchProblem& p, double tol,
                                       long max_iter) {
  check_problem(p);
  require(tol > 0.0 && max_iter >= 1, ErrorCode::kInvalidArgument,
          "invalid solver options");
  const int k = p.size();
  const int ng = static_cast<int>(p.c.size());
  Eigen::MatrixXd sum_rm = Eigen::MatrixXd::Zero(k, k);
  for (const auto& c : p.c) sum_rm += c * c.transpose();

  double rho = std::max(1e-12, p.r_ss.trace() /
                                   std::max(sum_rm.trace(), 1e-300));
  auto factor = [&](double r) {
    Eigen::MatrixXd a = p.r_ss + r * sum_rm;
    a.diagonal().array() += 1e-14 * std::max(1.0, a.trace());
    return Eigen::LDLT<Eigen::MatrixXd>(a);
  };
  Eigen::LDLT<Eigen::MatrixXd> ldlt = factor(rho);

  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  std::vector<Eigen::VectorXd> w(ng), u(ng), w_old(ng);
  for (int m = 0; m < ng; ++m) {
    w[m] = Eigen::VectorXd::Zero(p.c[m].cols());
    u[m] = w[m];
  }
  const double target = tol * (1.0 + p.r_sy.norm());
  SolveReport rep;
  rep.method = "admm";
  long it = 0;
  for (; it < max_iter; ++it) {
    Eigen::VectorXd rhs = p.r_sy;
    for (int m = 0; m < ng; ++m) rhs += rho * (p.c[m] * (w[m] - u[m]));
    g = ldlt.solve(rhs);
    double r_pri = 0.0, r_dual = 0.0;
    Eigen::VectorXd dual = Eigen::VectorXd::Zero(k);
    for (int m = 0; m < ng; ++m) {
      const Eigen::VectorXd cg = p.c[m].transpose() * g;
      const Eigen::VectorXd v = cg + u[m];
      const double n = v.norm();
      const double shrink = p.eta / rho;
      w_old[m] = w[m];
      w[m] = (n > shrink ? (n - shrink) / n : 0.0) * v;
      u[m] += cg - w[m];
      r_pri += (cg - w[m]).squaredNorm();
      dual += p.c[m] * (w[m] - w_old[m]);
    }
    r_pri = std::sqrt(r_pri);
    r_dual = rho * dual.norm();
    if ((it + 1) % 1000 == 0) {
      if (kkt_residual(p, g) <= target && r_pri <= target) {
        ++it;
        break;
      }
      double scale = 1.0;
      if (r_pri > 10.0 * r_dual) scale = 2.0;
      if (r_dual > 10.0 * r_pri) scale = 0.5;
      if (scale != 1.0) {
        rho *= scale;
        for (auto& um : u) um /= scale;
        ldlt = factor(rho);
      }
    }
  }
  rep.gamma = g;
  rep.iterations = it;
  rep.residual = kkt_residual(p, g);
  rep.converged = rep.residual <= target;
  rep.objective = objective(p, g);
  return rep;
}

}  // namespace gtopo
