// Acceptance checks. Prints one PASS/FAIL line per criterion; arguments
// select a subset by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtopo/batch_solver.hpp"
#include "gtopo/config.hpp"
#include "gtopo/gaussian_moments.hpp"
#include "gtopo/graph_model.hpp"
#include "gtopo/harness.hpp"
#include "gtopo/kernel.hpp"
#include "gtopo/random.hpp"
#include "gtopo/theory.hpp"

using namespace gtopo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

const fs::path kConfigDir = GTOPO_CONFIG_DIR;
const fs::path kOutDir = "acceptance_out";

ExperimentConfig config(const std::string& name) {
  ExperimentConfig c = load_config((kConfigDir / (name + ".conf")).string());
  c.out = (kOutDir / name).string();
  return c;
}

// Full runs are shared between criteria.
const RunArtifacts& run(const std::string& name) {
  static std::map<std::string, std::unique_ptr<RunArtifacts>> cache;
  auto& slot = cache[name];
  if (!slot) slot = std::make_unique<RunArtifacts>(run_experiment(config(name)));
  return *slot;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. kernel derivatives against central differences

Verdict kernel_derivatives() {
  const double t0 = now_s();
  Rng rng(101);
  std::uniform_real_distribution<double> u(-2.0, 2.0), su(0.2, 3.0);
  std::normal_distribution<double> n;
  double worst1 = 0.0, worst2 = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + trial % 5;
    const double sigma = su(rng);
    const GaussianKernel k(sigma);
    VectorXd a(d), b(d);
    for (int i = 0; i < d; ++i) {
      a(i) = u(rng);
      b(i) = a(i) + 0.7 * sigma * n(rng);
    }
    const double h = 1e-5 * sigma;
    VectorXd g(d), gfd(d);
    for (int m = 0; m < d; ++m) {
      VectorXd ap = a, am = a;
      ap(m) += h;
      am(m) -= h;
      g(m) = k.grad_first_arg(a, b, m);
      gfd(m) = (k.eval(ap, b) - k.eval(am, b)) / (2 * h);
    }
    worst1 = std::max(worst1, (g - gfd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff());

    const double h2 = 1e-4 * sigma;
    MatrixXd hs(d, d), hfd(d, d);
    for (int m1 = 0; m1 < d; ++m1) {
      for (int m2 = 0; m2 < d; ++m2) {
        auto kv = [&](double sa, double sb) {
          VectorXd ap = a, bp = b;
          ap(m1) += sa * h2;
          bp(m2) += sb * h2;
          return k.eval(ap, bp);
        };
        hs(m1, m2) = k.second_cross(a, b, m1, m2);
        hfd(m1, m2) = (kv(1, 1) - kv(1, -1) - kv(-1, 1) + kv(-1, -1)) / (4 * h2 * h2);
      }
    }
    worst2 = std::max(worst2, (hs - hfd).cwiseAbs().maxCoeff() / hs.cwiseAbs().maxCoeff());
  }
  const double elapsed = now_s() - t0;
  Verdict v;
  v.pass = worst1 <= 1e-6 && worst2 <= 1e-4 && elapsed < 1.0;
  v.detail = "max rel err first " + fmt("%.2e", worst1) + ", second " +
             fmt("%.2e", worst2) + ", " + fmt("%.3f", elapsed) + " s";
  return v;
}

// ---------------------------------------------------------------------------
// 2. moment engine against Monte Carlo

struct Running {
  MatrixXd sum, sq;
  void init(int r, int c) {
    sum = MatrixXd::Zero(r, c);
    sq = MatrixXd::Zero(r, c);
  }
};

struct Spot {
  std::vector<int> idx;  // stacked s indices
  int y_power = 0;
};

Verdict moment_engine() {
  const double t0 = now_s();
  const long count = 1000000;
  const int batch = 4096;
  long checked = 0, violations = 0, spots_done = 0;
  double worst = 0.0;
  std::string worst_at;

  for (int ci = 0; ci < 20; ++ci) {
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(ci)));
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> uni(-1.0, 1.0), su(0.6, 1.5);
    const int nodes = 1 + ci % 3;
    const int dsize = 1 + (ci / 3) % 3;
    MatrixXd a(nodes + 1, nodes + 1);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    const MatrixXd cov = a * a.transpose() / (nodes + 1) +
                         0.2 * MatrixXd::Identity(nodes + 1, nodes + 1);
    MatrixXd atoms(dsize, nodes);
    for (int i = 0; i < atoms.size(); ++i) atoms.data()[i] = uni(rng);
    const double sigma = su(rng);
    const Dictionary dict(atoms);
    const MomentContext ctx(cov, sigma, dict);
    const MomentSet ms = compute_moments(ctx, false);
    const int ks = ms.feature_size();

    std::vector<Spot> spots(ci < 10 ? 3 : 2);
    std::uniform_int_distribution<int> pick(0, ks - 1);
    for (std::size_t j = 0; j < spots.size(); ++j) {
      const int kind = static_cast<int>((ci + j) % 3);
      spots[j].y_power = kind;
      for (int q = 0; q < 4 - kind; ++q) spots[j].idx.push_back(pick(rng));
    }

    const MatrixXd chol = cov.llt().matrixL();
    const GaussianKernel kernel(sigma);
    Running rss, rsy;
    std::vector<Running> rtt(nodes);
    rss.init(ks, ks);
    rsy.init(ks, 1);
    for (auto& r : rtt) r.init(ks, ks);
    VectorXd spot_sum = VectorXd::Zero(spots.size()), spot_sq = spot_sum;

    MatrixXd s(batch, ks), y(batch, 1), z(nodes + 1, batch);
    std::vector<MatrixXd> t(nodes, MatrixXd(batch, ks));
    VectorXd sv(ks);
    MatrixXd tv(ks, nodes);
    for (long done = 0; done < count; done += batch) {
      const int b = static_cast<int>(std::min<long>(batch, count - done));
      for (int i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
      const MatrixXd ys = chol * z;
      for (int i = 0; i < b; ++i) {
        compute_features_into(kernel, dict, ys.col(i).head(nodes), sv, tv);
        s.row(i) = sv.transpose();
        y(i, 0) = ys(nodes, i);
        for (int m = 0; m < nodes; ++m) t[m].row(i) = tv.col(m).transpose();
        for (std::size_t j = 0; j < spots.size(); ++j) {
          double p = std::pow(y(i, 0), spots[j].y_power);
          for (int q : spots[j].idx) p *= sv(q);
          spot_sum(j) += p;
          spot_sq(j) += p * p;
        }
      }
      const auto sb = s.topRows(b);
      const MatrixXd s2 = sb.cwiseAbs2();
      const auto yb = y.topRows(b);
      rss.sum.noalias() += sb.transpose() * sb;
      rss.sq.noalias() += s2.transpose() * s2;
      rsy.sum.noalias() += sb.transpose() * yb;
      rsy.sq.noalias() += s2.transpose() * yb.cwiseAbs2();
      for (int m = 0; m < nodes; ++m) {
        const auto tb = t[m].topRows(b);
        const MatrixXd t2 = tb.cwiseAbs2();
        rtt[m].sum.noalias() += tb.transpose() * tb;
        rtt[m].sq.noalias() += t2.transpose() * t2;
      }
    }

    auto judge = [&](double closed, double sum, double sq, const std::string& what) {
      const double mean = sum / count;
      const double se = std::sqrt(std::max(sq / count - mean * mean, 0.0) / count);
      const double zs = se > 0.0 ? std::abs(closed - mean) / se
                                 : (closed == mean ? 0.0 : INFINITY);
      ++checked;
      if (zs > 4.0) ++violations;
      if (zs > worst) {
        worst = zs;
        worst_at = "context " + std::to_string(ci) + " " + what;
      }
    };
    for (int i = 0; i < ks; ++i) {
      for (int j = i; j < ks; ++j) {
        judge(ms.r_ss(i, j), rss.sum(i, j), rss.sq(i, j), "R_ss");
        for (int m = 0; m < nodes; ++m) {
          judge(ms.r_tt[m](i, j), rtt[m].sum(i, j), rtt[m].sq(i, j), "R_tt");
        }
      }
      judge(ms.r_sy(i), rsy.sum(i, 0), rsy.sq(i, 0), "r_sy");
    }
    for (std::size_t j = 0; j < spots.size(); ++j) {
      std::vector<FeatureRef> f;
      for (int q : spots[j].idx) f.push_back({FeatureKind::kS, q, 0});
      judge(feature_moment(ctx, f, spots[j].y_power), spot_sum(j), spot_sq(j),
            "fourth order");
      ++spots_done;
    }
  }
  const double elapsed = now_s() - t0;
  Verdict v;
  v.pass = violations == 0 && spots_done == 50 && elapsed < 600.0;
  v.detail = std::to_string(checked) + " entries (" + std::to_string(spots_done) +
             " fourth order), " + std::to_string(violations) +
             " beyond 4 SE, worst " + fmt("%.2f", worst) + " SE at " + worst_at +
             ", " + fmt("%.0f", elapsed) + " s";
  return v;
}

// ---------------------------------------------------------------------------
// 3. scalar nu

Verdict scalar_nu() {
  Rng rng(7);
  std::uniform_real_distribution<double> ur(0.01, 5.0), us(0.2, 3.0), ux(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double r = ur(rng), s = us(rng), x = ux(rng);
    MatrixXd cov = MatrixXd::Identity(2, 2);
    cov(0, 0) = r;
    const MomentContext ctx(cov, s, Dictionary(MatrixXd::Constant(1, 1, x)));
    NuParameters p;
    p.atoms[0] = 0;
    const double ref =
        std::sqrt(s * s / (s * s + r)) * std::exp(-x * x / (2 * (s * s + r)));
    worst = std::max(worst, std::abs(ctx.nu(p) - ref) / ref);
  }
  return {worst <= 1e-10, "200 cases, max rel err " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 4, 5. linear model

struct MeanCheck {
  long violations = 0, total = 0;
  double worst_ratio = 0.0;
};

MeanCheck mean_agreement(const RunArtifacts& art) {
  MeanCheck c;
  for (long i = 0; i < art.gamma_emp.rows(); ++i) {
    for (long j = 0; j < art.gamma_emp.cols(); ++j) {
      const double gap = std::abs(art.gamma_emp(i, j) - art.gamma_theo(i, j));
      const double se = art.gamma_emp_se(i, j);
      const double ratio = se > 0.0 ? gap / se : (gap == 0.0 ? 0.0 : INFINITY);
      ++c.total;
      if (ratio > 3.0) ++c.violations;
      c.worst_ratio = std::max(c.worst_ratio, ratio);
    }
  }
  return c;
}

std::string describe(const MeanCheck& m) {
  return "mean gap > 3 SE at " + std::to_string(m.violations) + "/" +
         std::to_string(m.total) + " points (" +
         fmt("%.2f%%", 100.0 * m.violations / m.total) + ", worst " +
         fmt("%.1f", m.worst_ratio) + " SE)";
}

Verdict linear_eta0() {
  const RunArtifacts& art = run("linear_eta0");
  const MeanCheck mc = mean_agreement(art);
  const CurveComparison cmp = compare_curves(art.msd_emp, art.msd_theo);
  const double tail = art.msd_theo(art.msd_theo.size() - 1);
  const double ss_gap = std::abs(10 * std::log10(art.msd_ss / tail));
  Verdict v;
  v.pass = mc.violations == 0 && cmp.max_gap_db <= 2.0 && ss_gap <= 0.2;
  v.detail = describe(mc) + "; MSD gap " + fmt("%.3f", cmp.max_gap_db) +
             " dB; steady state " + fmt("%.4g", art.msd_ss) + " vs tail " +
             fmt("%.4g", tail) + " (" + fmt("%.2f", ss_gap) + " dB)";
  return v;
}

// E{g} for the three expectations that the regularized recursions replace by
// ratios of moments, sampled with gamma_hat ~ N(mean, sigma).
struct RegTerms {
  VectorXd mean;  // sum_m R_m g / ||g||_m
  MatrixXd q7;    // sum_m (g - g*) g^T R_m / ||g||_m
  MatrixXd q10;   // sum_{m,p} R_m g g^T R_p / (||g||_m ||g||_p)
};

RegTerms sampled_terms(const MomentSet& ms, const VectorXd& gstar,
                       const VectorXd& mean, const MatrixXd& sigma, Rng& rng,
                       int count) {
  const int ks = static_cast<int>(mean.size());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
  const MatrixXd root =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::normal_distribution<double> n;
  const int batch = 4096;
  MatrixXd w(ks, batch), v(ks, batch), z(ks, batch);
  RegTerms out{VectorXd::Zero(ks), MatrixXd::Zero(ks, ks), MatrixXd::Zero(ks, ks)};
  for (int done = 0; done < count; done += batch) {
    const int b = std::min(batch, count - done);
    for (int i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
    const MatrixXd g = (root * z).colwise() + mean;
    w.setZero();
    for (const MatrixXd& r : ms.r_tt) {
      const MatrixXd rg = r * g;
      for (int i = 0; i < b; ++i) {
        const double d2 = g.col(i).dot(rg.col(i));
        if (d2 > 0.0) w.col(i) += rg.col(i) / std::sqrt(d2);
      }
    }
    v = g.colwise() - gstar;
    out.mean += w.leftCols(b).rowwise().sum();
    out.q7.noalias() += v.leftCols(b) * w.leftCols(b).transpose();
    out.q10.noalias() += w.leftCols(b) * w.leftCols(b).transpose();
  }
  out.mean /= count;
  out.q7 /= count;
  out.q10 /= count;
  return out;
}

// The same three terms as the theory evaluates them.
RegTerms approximated_terms(const MomentSet& ms, const VectorXd& gstar,
                            const VectorXd& mean, const MatrixXd& sigma) {
  const int ks = static_cast<int>(mean.size());
  const int n = static_cast<int>(ms.r_tt.size());
  RegTerms out{VectorXd::Zero(ks), MatrixXd::Zero(ks, ks), MatrixXd::Zero(ks, ks)};
  const MatrixXd second = sigma + mean * mean.transpose();
  std::vector<double> m2(n);
  for (int a = 0; a < n; ++a) {
    const MatrixXd& r = ms.r_tt[a];
    out.mean += regularizer_mean_term(r, mean, sigma);
    m2[a] = (r * sigma).trace() + mean.dot(r * mean);
    if (m2[a] > 0.0) {
      out.q7 += (sigma + (mean - gstar) * mean.transpose()) * r / std::sqrt(m2[a]);
    }
  }
  // E{(g'R_a g)(g'R_b g)} for a Gaussian g
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const MatrixXd& ra = ms.r_tt[a];
      const MatrixXd& rb = ms.r_tt[b];
      const double e4 = m2[a] * m2[b] + 2.0 * (ra * sigma * rb * sigma).trace() +
                        4.0 * mean.dot(ra * sigma * rb * mean);
      if (e4 > 0.0) out.q10 += ra * second * rb / std::sqrt(e4);
    }
  }
  return out;
}

double rel(const MatrixXd& approx, const MatrixXd& sampled) {
  return (approx - sampled).norm() / sampled.norm();
}

Verdict linear_eta1e4() {
  const RunArtifacts& art = run("linear_eta1e-4");
  const MeanCheck mc = mean_agreement(art);
  const CurveComparison cmp = compare_curves(art.msd_emp, art.msd_theo);

  const PreparedExperiment& p = art.setup;
  const TheoryModel model(p.moments, p.gamma_star, p.mu, p.config.eta);
  TheoryState s = model.initial_state();
  Rng rng(55);
  double worst = 0.0;
  std::string worst_at, per_stop;
  for (long stop : {1L, 10L, 100L, 1000L, 5000L}) {
    while (s.iteration < stop) model.step(s);
    const VectorXd mean = s.mean_v + p.gamma_star;
    const MatrixXd sigma = s.v - s.mean_v * s.mean_v.transpose();
    const RegTerms got = approximated_terms(p.moments, p.gamma_star, mean, sigma);
    const RegTerms ref = sampled_terms(p.moments, p.gamma_star, mean, sigma, rng, 200000);
    const double e[3] = {rel(got.mean, ref.mean), rel(got.q7, ref.q7),
                         rel(got.q10, ref.q10)};
    const char* names[3] = {"mean", "Q7", "Q10"};
    per_stop += (per_stop.empty() ? "" : " ") + std::to_string(stop) + ":" +
                fmt("%.3f", std::max({e[0], e[1], e[2]}));
    for (int k = 0; k < 3; ++k) {
      if (e[k] > worst) {
        worst = e[k];
        worst_at = std::string(names[k]) + " at i=" + std::to_string(stop);
      }
    }
  }
  Verdict v;
  v.pass = mc.violations == 0 && cmp.max_gap_db <= 2.0 && worst <= 0.1;
  v.detail = describe(mc) + "; MSD gap " + fmt("%.3f", cmp.max_gap_db) +
             " dB; regularizer terms vs sampling max rel err " +
             fmt("%.3f", worst) + " (" + worst_at + "; by iteration " + per_stop + ")";
  return v;
}

// ---------------------------------------------------------------------------
// 6. nonlinear model

Verdict nonlinear() {
  Verdict v{true, ""};
  for (const char* name : {"nonlinear_eta0", "nonlinear_eta0.3"}) {
    const RunArtifacts& art = run(name);
    const CurveComparison cmp = compare_curves(art.msd_emp, art.msd_theo);
    v.pass = v.pass && cmp.max_gap_db <= 3.0 && art.completed_runs == art.setup.config.runs;
    const double last_emp = art.msd_emp(art.msd_emp.size() - 1);
    const double last_theo = art.msd_theo(art.msd_theo.size() - 1);
    v.detail += std::string(v.detail.empty() ? "" : "; ") + name + " MSD gap " +
                fmt("%.3f", cmp.max_gap_db) + " dB, final bias " +
                fmt("%.3f", 10 * std::log10(last_emp / last_theo)) + " dB";
  }
  return v;
}

// ---------------------------------------------------------------------------
// 7. stability bound

Verdict stability() {
  ExperimentConfig c = config("linear_eta0");
  c.theory = false;
  c.horizon = 10000;
  c.allow_divergence = true;
  c.divergence_norm = 1e6;

  c.mu_scale = 0.9;
  const RunArtifacts below = run_experiment(c);
  long below_div = 0;
  for (long d : below.diverged_at) below_div += d >= 0;
  const auto window = [&](long from, long to) {
    return below.msd_emp.segment(from, to - from).mean();
  };
  const double last = window(9000, 10000), prev = window(8000, 9000);
  const bool converged = below_div == 0 && std::isfinite(last) &&
                         last <= 1.05 * prev && last < below.msd_emp(0);

  c.mu_scale = 2.0;
  const RunArtifacts above = run_experiment(c);
  long above_div = 0;
  for (long d : above.diverged_at) above_div += d >= 0;

  Verdict v;
  v.pass = converged && above_div >= 95;
  v.detail = "0.9x bound: " + std::to_string(below_div) +
             " diverged, MSD last/previous window " + fmt("%.4f", last / prev) +
             "; 2x bound: " + std::to_string(above_div) + "/" +
             std::to_string(c.runs) + " diverged within 1e4 steps";
  return v;
}

// ---------------------------------------------------------------------------
// 8. batch solver

Verdict batch_solver() {
  ExperimentConfig c = config("linear_eta1e-4");
  const PreparedExperiment p = prepare_experiment(c, false);
  const BatchProblem prob = BatchProblem::from_moments(p.moments, c.eta);
  const SolveReport sol = solve_gamma_star(prob);
  const double kkt = kkt_residual(prob, sol.gamma);
  const SolveReport ref = solve_gamma_star_reference(prob, 1e-12, 2000000);
  const double ref_gap = (sol.gamma - ref.gamma).norm();

  const BatchProblem plain = BatchProblem::from_moments(p.moments, 0.0);
  const SolveReport direct = solve_gamma_star(plain);
  SolverOptions opt;
  opt.force_iterative = true;
  const SolveReport iter = solve_gamma_star(plain, opt);
  const double path_gap = (direct.gamma - iter.gamma).norm();

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(prob.r_ss, Eigen::EigenvaluesOnly);
  const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();

  Verdict v;
  v.pass = sol.converged && kkt <= 1e-6 && ref_gap <= 1e-5 && path_gap <= 1e-6;
  v.detail = "KKT " + fmt("%.2e", kkt) + "; reference gap " + fmt("%.2e", ref_gap) +
             " (objectives " + fmt("%.12g", sol.objective) + " vs " +
             fmt("%.12g", ref.objective) + ", reference KKT " +
             fmt("%.2e", ref.residual) + "); eta=0 direct vs iterative " +
             fmt("%.2e", path_gap) + "; cond(R_ss) " + fmt("%.2e", cond);
  return v;
}

// ---------------------------------------------------------------------------
// 9. topology recovery

Verdict topology() {
  const AdjacencyMatrix adj = reference_adjacency_5();
  const Eigen::VectorXi want = adj.parents_of(0).cast<int>();
  std::string detail;
  int best = 0;
  for (const char* name : {"linear_eta1e-4", "linear_eta0"}) {
    const RunArtifacts& art = run(name);
    int hits = 0;
    for (int r = 0; r < art.final_rows.rows(); ++r) {
      hits += art.final_rows.row(r).transpose() == want;
    }
    std::ostringstream row;
    row << art.topology_row.transpose();
    detail += std::string(detail.empty() ? "" : "; ") + name + " " +
              std::to_string(hits) + "/" + std::to_string(art.final_rows.rows()) +
              " runs, mean readout [" + row.str() + "]";
    if (std::string(name) == "linear_eta1e-4") best = hits;
  }
  std::ostringstream target;
  target << want.transpose();
  return {best >= 95, "target [" + target.str() + "]: " + detail};
}

// ---------------------------------------------------------------------------
// 10. determinism

Verdict determinism() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"linear_eta1e-4", "nonlinear_eta0.3"}) {
    ExperimentConfig c = config(name);
    const fs::path a = kOutDir / (std::string(name) + "_a");
    const fs::path b = kOutDir / (std::string(name) + "_b");
    emit_outputs(run(name), a.string());
    c.threads = 4;
    emit_outputs(run_experiment(c), b.string());
    int same = 0, files = 0;
    for (const char* f : {"mean_curves.csv", "msd.csv", "topology.csv",
                          "run_topology.csv"}) {
      ++files;
      const std::string x = slurp(a / f), y = slurp(b / f);
      same += !x.empty() && x == y;
    }
    pass = pass && same == files;
    detail += std::string(detail.empty() ? "" : "; ") + name + " " +
              std::to_string(same) + "/" + std::to_string(files) +
              " CSVs identical (threads 1 vs 4)";
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Verdict()>>> all = {
      {1, kernel_derivatives}, {2, moment_engine}, {3, scalar_nu},
      {4, linear_eta0},        {5, linear_eta1e4}, {6, nonlinear},
      {7, stability},          {8, batch_solver},  {9, topology},
      {10, determinism}};
  std::vector<int> pick;
  for (int i = 1; i < argc; ++i) pick.push_back(std::atoi(argv[i]));

  fs::create_directories(kOutDir);
  int failed = 0;
  for (const auto& [id, check] : all) {
    if (!pick.empty() && std::find(pick.begin(), pick.end(), id) == pick.end()) continue;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %2d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
