#include "gtopo/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "gtopo/batch_solver.hpp"
#include "gtopo/error.hpp"
#include "gtopo/graph_model.hpp"
#include "gtopo/online_inference.hpp"
#include "gtopo/random.hpp"
#include "gtopo/theory.hpp"

namespace gtopo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.what());
  }
}

Eigen::MatrixXd reference_adjacency(const ExperimentConfig& c) {
  if (c.adjacency.size() > 0) return c.adjacency;
  return c.model == ModelKind::kNonlinear ? reference_adjacency_3().entries()
                                          : reference_adjacency_5().entries();
}

// Streams graph signals of either model through one interface.
class SignalSource {
 public:
  SignalSource(const ExperimentConfig& c, const LinearSignalModel* lin,
               const NonlinearSignalModel* nl, std::uint64_t seed) {
    if (c.model == ModelKind::kNonlinear) {
      nl_.emplace(*nl, seed);
    } else {
      lin_.emplace(*lin, seed);
    }
  }
  void next(Eigen::Ref<Eigen::VectorXd> y) {
    if (lin_) lin_->next(y);
    else nl_->next(y);
  }

 private:
  std::optional<LinearSampler> lin_;
  std::optional<NonlinearSampler> nl_;
};

std::uint64_t mix_key(std::uint64_t key, double eta) {
  std::uint64_t bits;
  std::memcpy(&bits, &eta, sizeof bits);
  return splitmix64(key ^ splitmix64(bits));
}

}  // namespace

PreparedExperiment prepare_experiment(const ExperimentConfig& cfg,
                                      bool solve_gamma) {
  staged("config", [&] { cfg.validate(); });
  PreparedExperiment p;
  p.config = cfg;
  const int node = cfg.node - 1;

  const bool sampled =
      cfg.moments == MomentSource::kSample ||
      (cfg.moments == MomentSource::kAuto && cfg.model == ModelKind::kNonlinear);
  Eigen::MatrixXd samples;
  p.node_covariance = staged("model", [&] {
    const Eigen::MatrixXd adj = reference_adjacency(cfg);
    const std::uint64_t seed = derive_seed(cfg.seed, Stream::kCovariance);
    const int count = static_cast<int>(cfg.covariance_samples);
    if (cfg.model == ModelKind::kNonlinear) {
      NonlinearSignalModel nl;
      nl.adjacency = AdjacencyMatrix(adj);
      nl.k1 = cfg.k1;
      nl.k2 = cfg.k2;
      samples = sample_nonlinear(nl, seed, count);
      return second_moment(samples);
    }
    if (cfg.model == ModelKind::kLinear) AdjacencyMatrix check(adj);
    const LinearSignalModel lin = build_linear_model(adj, cfg.noise_std);
    if (sampled) samples = sample_linear(lin, seed, count);
    return lin.covariance;
  });
  p.covariance = target_last(p.node_covariance, node);
  const int n = static_cast<int>(p.covariance.rows()) - 1;

  p.dictionary = staged("dictionary", [&] {
    if (!cfg.dictionary_file.empty()) {
      Dictionary d = Dictionary::load(cfg.dictionary_file);
      require(d.dim() == n, ErrorCode::kDimensionMismatch,
              "dictionary dimension must equal the number of input nodes");
      return d;
    }
    const std::uint64_t seed = cfg.has_dictionary_seed
                                   ? cfg.dictionary_seed
                                   : derive_seed(cfg.seed, Stream::kDictionary);
    return dictionary_grid(n, cfg.dictionary_count, cfg.dictionary_low,
                           cfg.dictionary_high, seed);
  });

  std::optional<MomentContext> ctx;
  std::uint64_t key = 0;
  if (sampled) {
    // Columns reordered to [inputs; target].
    Eigen::MatrixXd ordered(samples.rows(), n + 1);
    for (int m = 0, k = 0; m <= n; ++m) {
      if (m != node) ordered.col(k++) = samples.col(m);
    }
    ordered.col(n) = samples.col(node);
    samples = std::move(ordered);
    key = moment_key(samples, p.dictionary, cfg.kernel_sigma);
  } else {
    ctx.emplace(staged("moments", [&] {
      return MomentContext(p.covariance, cfg.kernel_sigma, p.dictionary);
    }));
    key = moment_key(*ctx);
  }
  key = mix_key(key, cfg.eta);
  bool cached = false;
  if (!cfg.cache.empty()) {
    cached = staged("moments", [&] {
      return load_moments(p.moments, key, cfg.cache);
    });
  }
  if (!cached) {
    p.moments = staged("moments", [&] {
      if (sampled) {
        return estimate_moments(GaussianKernel(cfg.kernel_sigma), p.dictionary,
                                samples, true);
      }
      return compute_moments(*ctx, true);
    });
  }

  p.stability_bound = stability_bound(p.moments.r_ss);
  p.mu = cfg.mu > 0.0 ? cfg.mu : cfg.mu_scale * p.stability_bound;
  staged("config", [&] {
    require(std::isfinite(p.mu) && p.mu > 0.0, ErrorCode::kInvalidArgument,
            "step size is not finite");
  });

  if (!solve_gamma) return p;
  if (cached && p.moments.gamma_star.size() == p.moments.feature_size()) {
    p.gamma_star = p.moments.gamma_star;
    p.gamma_method = "cache";
    p.gamma_residual =
        kkt_residual(BatchProblem::from_moments(p.moments, cfg.eta),
                     p.gamma_star);
  } else {
    staged("gamma", [&] {
      BatchProblem bp = BatchProblem::from_moments(p.moments, cfg.eta);
      SolverOptions opt;
      opt.tol = cfg.solver_tol;
      SolveReport rep = solve_gamma_star(bp, opt);
      if (!rep.converged) {
        std::ostringstream os;
        os << "solver did not converge (residual " << rep.residual << " after "
           << rep.iterations << " iterations)";
        fail(ErrorCode::kNonConvergence, os.str());
      }
      p.gamma_star = rep.gamma;
      p.gamma_residual = rep.residual;
      p.gamma_method = rep.method;
    });
    if (!cfg.cache.empty()) {
      p.moments.gamma_star = p.gamma_star;
      staged("moments", [&] { save_moments(p.moments, key, cfg.cache); });
    }
  }
  return p;
}

namespace {

struct RunRecord {
  Eigen::MatrixXd gamma;  // horizon x ks
  Eigen::VectorXd msd;
  Eigen::VectorXd final_delta;
  long diverged_at = -1;
};

void simulate_run(const PreparedExperiment& p, const LinearSignalModel* lin,
                  const NonlinearSignalModel* nl, int run, RunRecord& rec) {
  const ExperimentConfig& c = p.config;
  const int n = p.moments.nodes;
  const int d = p.moments.dictionary;
  const int ks = p.moments.feature_size();
  const int node = c.node - 1;
  const GaussianKernel kernel(c.kernel_sigma);

  SignalSource src(c, lin, nl, derive_seed(c.seed, Stream::kRuns, run));
  EstimatorState st = init_state({n, d}, p.mu, c.eta, c.forgetting);
  Eigen::VectorXd y(n + 1), inputs(n), s(ks);
  Eigen::MatrixXd t(ks, n);
  rec.gamma.resize(c.horizon, ks);
  rec.msd.resize(c.horizon);
  rec.diverged_at = -1;
  for (long i = 0; i < c.horizon; ++i) {
    src.next(y);
    for (int m = 0, k = 0; m <= n; ++m) {
      if (m != node) inputs(k++) = y(m);
    }
    compute_features_into(kernel, p.dictionary, inputs, s, t);
    try {
      if (c.use_exact_rtt) {
        step(st, s, y(node), p.moments.r_tt);
      } else {
        update_covariance(st, t);
        step(st, s, y(node));
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDivergence) throw;
      rec.diverged_at = i + 1;
      break;
    }
    if (!(st.gamma_hat.norm() <= c.divergence_norm)) {
      rec.diverged_at = i + 1;
      break;
    }
    rec.gamma.row(i) = st.gamma_hat.transpose();
    rec.msd(i) = (st.gamma_hat - p.gamma_star).squaredNorm();
  }
  rec.final_delta.resize(n);
  for (int m = 0; m < n; ++m) {
    rec.final_delta(m) =
        rec.diverged_at >= 0
            ? kNaN
            : delta(st.gamma_hat,
                    c.use_exact_rtt ? p.moments.r_tt[m] : st.r_tt_hat[m]);
  }
}

struct TheoryCurves {
  Eigen::MatrixXd gamma;
  Eigen::VectorXd msd;
  double msd_ss = kNaN;
  double rho = kNaN;
  std::string note;
};

TheoryCurves run_theory(const PreparedExperiment& p) {
  const ExperimentConfig& c = p.config;
  TheoryCurves out;
  const int ks = p.moments.feature_size();
  out.gamma.resize(c.horizon, ks);
  out.msd.resize(c.horizon);
  TheoryModel model(p.moments, p.gamma_star, p.mu, c.eta);
  TheoryState st = model.initial_state();
  for (long i = 0; i < c.horizon; ++i) {
    model.step(st);
    out.gamma.row(i) = (st.mean_v + p.gamma_star).transpose();
    out.msd(i) = msd(st);
  }
  if (c.eta == 0.0) {
    try {
      SteadyState ss = steady_state_msd(p.moments, p.gamma_star, p.mu);
      out.msd_ss = ss.msd;
      out.rho = ss.spectral_radius;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInstability) throw;
      out.note = e.what();
    }
  }
  return out;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  RunArtifacts art;
  art.setup = prepare_experiment(cfg);
  const PreparedExperiment& p = art.setup;
  const ExperimentConfig& c = p.config;
  const int n = p.moments.nodes;
  const int ks = p.moments.feature_size();

  std::optional<LinearSignalModel> lin;
  std::optional<NonlinearSignalModel> nl;
  if (c.model == ModelKind::kNonlinear) {
    nl.emplace();
    nl->adjacency = AdjacencyMatrix(reference_adjacency(c));
    nl->k1 = c.k1;
    nl->k2 = c.k2;
  } else {
    lin = build_linear_model(reference_adjacency(c), c.noise_std);
  }

  std::future<TheoryCurves> theory;
  if (c.theory) {
    theory = std::async(c.threads > 1 ? std::launch::async : std::launch::deferred,
                        [&p] { return staged("theory", [&] { return run_theory(p); }); });
  }

  Eigen::MatrixXd sum_g = Eigen::MatrixXd::Zero(c.horizon, ks);
  Eigen::MatrixXd sum_g2 = sum_g;
  Eigen::VectorXd sum_m = Eigen::VectorXd::Zero(c.horizon);
  Eigen::VectorXd sum_m2 = sum_m;
  art.final_delta.resize(c.runs, n);
  art.final_rows.resize(c.runs, n);
  art.diverged_at.assign(c.runs, -1);

  // Runs go in batches of `threads`; each batch is reduced in run order so
  // the sums do not depend on the thread count.
  const int batch = std::max(1, c.threads);
  std::vector<RunRecord> recs(batch);
  for (int first = 0; first < c.runs; first += batch) {
    const int count = std::min(batch, c.runs - first);
    staged("ensemble", [&] {
      if (count == 1) {
        simulate_run(p, lin ? &*lin : nullptr, nl ? &*nl : nullptr, first,
                     recs[0]);
        return;
      }
      std::vector<std::future<void>> jobs;
      for (int j = 0; j < count; ++j) {
        jobs.push_back(std::async(std::launch::async, [&, j] {
          simulate_run(p, lin ? &*lin : nullptr, nl ? &*nl : nullptr,
                       first + j, recs[j]);
        }));
      }
      for (auto& f : jobs) f.get();
    });
    for (int j = 0; j < count; ++j) {
      const int r = first + j;
      const RunRecord& rec = recs[j];
      art.diverged_at[r] = rec.diverged_at;
      art.final_delta.row(r) = rec.final_delta.transpose();
      if (rec.diverged_at >= 0) {
        art.final_rows.row(r).setZero();
        if (!c.allow_divergence) {
          fail(ErrorCode::kDivergence,
               "ensemble: run " + std::to_string(r) + " diverged at iteration " +
                   std::to_string(rec.diverged_at));
        }
        continue;
      }
      const double tau = largest_gap_threshold(rec.final_delta);
      art.final_rows.row(r) =
          read_topology(rec.final_delta,
                        Eigen::VectorXd::Constant(n, tau))
              .adjacency_row.transpose();
      sum_g += rec.gamma;
      sum_g2 += rec.gamma.cwiseProduct(rec.gamma);
      sum_m += rec.msd;
      sum_m2 += rec.msd.cwiseProduct(rec.msd);
      ++art.completed_runs;
    }
  }

  const double k = art.completed_runs;
  if (k > 0) {
    art.gamma_emp = sum_g / k;
    art.msd_emp = sum_m / k;
    const double denom = k > 1 ? k - 1 : 1.0;
    const Eigen::MatrixXd var_g =
        ((sum_g2 - k * art.gamma_emp.cwiseProduct(art.gamma_emp)) / denom)
            .cwiseMax(0.0);
    art.gamma_emp_se = (var_g / k).cwiseSqrt();
    const Eigen::VectorXd var_m =
        ((sum_m2 - k * art.msd_emp.cwiseProduct(art.msd_emp)) / denom)
            .cwiseMax(0.0);
    art.msd_emp_se = (var_m / k).cwiseSqrt();
    art.mean_final_delta = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < c.runs; ++r) {
      if (art.diverged_at[r] < 0) art.mean_final_delta += art.final_delta.row(r).transpose();
    }
    art.mean_final_delta /= k;
    art.topology_threshold = largest_gap_threshold(art.mean_final_delta);
    art.topology_row =
        read_topology(art.mean_final_delta,
                      Eigen::VectorXd::Constant(n, art.topology_threshold))
            .adjacency_row;
  } else {
    art.gamma_emp = Eigen::MatrixXd::Constant(c.horizon, ks, kNaN);
    art.gamma_emp_se = art.gamma_emp;
    art.msd_emp = Eigen::VectorXd::Constant(c.horizon, kNaN);
    art.msd_emp_se = art.msd_emp;
    art.mean_final_delta = Eigen::VectorXd::Constant(n, kNaN);
    art.topology_row = Eigen::VectorXi::Zero(n);
    art.topology_threshold = kNaN;
  }

  if (c.theory) {
    TheoryCurves tc = theory.get();
    art.gamma_theo = std::move(tc.gamma);
    art.msd_theo = std::move(tc.msd);
    art.msd_ss = tc.msd_ss;
    art.ss_spectral_radius = tc.rho;
    art.ss_note = tc.note;
  } else {
    art.gamma_theo = Eigen::MatrixXd::Constant(c.horizon, ks, kNaN);
    art.msd_theo = Eigen::VectorXd::Constant(c.horizon, kNaN);
    art.msd_ss = kNaN;
    art.ss_spectral_radius = kNaN;
  }
  return art;
}

CurveComparison compare_curves(const Eigen::VectorXd& empirical,
                               const Eigen::VectorXd& theoretical,
                               long burn_in, int segments) {
  require(empirical.size() == theoretical.size(), ErrorCode::kDimensionMismatch,
          "curves must have equal length");
  require(segments >= 1, ErrorCode::kInvalidArgument, "segments must be >= 1");
  const long len = empirical.size();
  CurveComparison out;
  out.burn_in = burn_in < 0 ? len / 10 : std::min(burn_in, len);
  out.segment_max_db.assign(segments, 0.0);
  const long span = std::max(1L, (len - out.burn_in + segments - 1) / segments);
  for (long i = out.burn_in; i < len; ++i) {
    const double a = empirical(i), b = theoretical(i);
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      ++out.excluded;
      continue;
    }
    const double gap = std::abs(10.0 * std::log10(a) - 10.0 * std::log10(b));
    ++out.compared;
    if (gap > out.max_gap_db || out.max_gap_index < 0) {
      out.max_gap_db = gap;
      out.max_gap_index = i;
    }
    const long seg = std::min<long>((i - out.burn_in) / span, segments - 1);
    out.segment_max_db[seg] = std::max(out.segment_max_db[seg], gap);
  }
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plots the curves written next to this script.

usage: plot.py [entries ...]   (1-based gamma entries, default: all)
"""
import csv
import math
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(here, name), newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def db(v):
    return 10.0 * math.log10(v) if v > 0 else float("nan")


head, rows = load("mean_curves.csv")
ks = (len(head) - 1) // 2
picked = [int(a) for a in sys.argv[1:]] or list(range(1, ks + 1))
it = [r[0] for r in rows]
fig, ax = plt.subplots()
for e in picked:
    ax.plot(it, [r[e] for r in rows], "b--", linewidth=0.8)
    ax.plot(it, [r[ks + e] for r in rows], "r-", linewidth=0.8)
ax.set_xlabel("iteration")
ax.set_ylabel("gamma entries")
fig.savefig(os.path.join(here, "mean_curves.png"), dpi=150)

head, rows = load("msd.csv")
it = [r[0] for r in rows]
fig, ax = plt.subplots()
ax.plot(it, [db(r[1]) for r in rows], "b--", label="experimental")
ax.plot(it, [db(r[2]) for r in rows], "r-", label="theoretical")
if not math.isnan(rows[0][3]):
    ax.plot(it, [db(r[3]) for r in rows], "k:", label="steady state")
ax.set_xlabel("iteration")
ax.set_ylabel("MSD (dB)")
ax.legend()
fig.savefig(os.path.join(here, "msd.png"), dpi=150)
)PY";

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo,
          "cannot write " + path.string());
  os << body;
  require(static_cast<bool>(os), ErrorCode::kIo,
          "failed writing " + path.string());
}

}  // namespace

void emit_outputs(const RunArtifacts& art, const std::string& dir) {
  staged("output", [&] {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
    const std::filesystem::path root(dir);
    const long h = art.gamma_emp.rows();
    const int ks = static_cast<int>(art.gamma_emp.cols());
    const ExperimentConfig& c = art.setup.config;

    std::string body;
    body += "iter";
    for (int j = 1; j <= ks; ++j) body += ",gamma_emp_" + std::to_string(j);
    for (int j = 1; j <= ks; ++j) body += ",gamma_theo_" + std::to_string(j);
    body += '\n';
    for (long i = 0; i < h; ++i) {
      body += std::to_string(i + 1);
      for (int j = 0; j < ks; ++j) body += ',' + format_double(art.gamma_emp(i, j));
      for (int j = 0; j < ks; ++j) body += ',' + format_double(art.gamma_theo(i, j));
      body += '\n';
    }
    write_file(root / "mean_curves.csv", body);

    body = "iter,msd_emp,msd_theo,msd_ss\n";
    for (long i = 0; i < h; ++i) {
      body += std::to_string(i + 1) + ',' + format_double(art.msd_emp(i)) + ',' +
              format_double(art.msd_theo(i)) + ',' + format_double(art.msd_ss) +
              '\n';
    }
    write_file(root / "msd.csv", body);

    // m is the 1-based graph node index.
    const int n = static_cast<int>(art.mean_final_delta.size());
    body = "m,delta_m,a_hat\n";
    for (int k = 0, m = 1; k < n; ++m) {
      if (m == c.node) continue;
      body += std::to_string(m) + ',' + format_double(art.mean_final_delta(k)) +
              ',' + std::to_string(art.topology_row(k)) + '\n';
      ++k;
    }
    write_file(root / "topology.csv", body);

    body = "run,m,delta_m,a_hat\n";
    for (int r = 0; r < art.final_delta.rows(); ++r) {
      for (int k = 0, m = 1; k < n; ++m) {
        if (m == c.node) continue;
        body += std::to_string(r + 1) + ',' + std::to_string(m) + ',' +
                format_double(art.final_delta(r, k)) + ',' +
                std::to_string(art.final_rows(r, k)) + '\n';
        ++k;
      }
    }
    write_file(root / "run_topology.csv", body);

    write_file(root / "config.txt", config_to_string(c));
    write_file(root / "plot.py", kPlotScript);
  });
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Eigen::VectorXd CsvTable::values(int col) const {
  require(col >= 0 && col < static_cast<int>(header.size()),
          ErrorCode::kInvalidArgument, "column out of range");
  Eigen::VectorXd v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v(i) = rows[i][col];
  return v;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot read " + path);
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size()) {
      fail(ErrorCode::kParse, path + ":" + std::to_string(lineno) +
                                  ": wrong number of fields");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      if (c == "nan") {
        row.push_back(kNaN);
        continue;
      }
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        fail(ErrorCode::kParse, path + ":" + std::to_string(lineno) +
                                    ": bad number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  require(!t.header.empty(), ErrorCode::kParse, path + " is empty");
  return t;
}

}  // namespace gtopo
