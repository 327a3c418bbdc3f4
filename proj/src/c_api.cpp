#include "gtopo/gtopo.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <string>

#include <Eigen/Dense>

#include "gtopo/batch_solver.hpp"
#include "gtopo/config.hpp"
#include "gtopo/error.hpp"
#include "gtopo/harness.hpp"
#include "gtopo/kernel.hpp"
#include "gtopo/online_inference.hpp"

struct gtopo_config {
  gtopo::ExperimentConfig cfg;
};

struct gtopo_artifacts {
  gtopo::RunArtifacts art;
};

struct gtopo_estimator {
  gtopo::EstimatorState state;
};

namespace {

thread_local std::string last_error;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class F>
gtopo_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return GTOPO_OK;
  } catch (const gtopo::Error& e) {
    last_error = e.what();
    return static_cast<gtopo_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GTOPO_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GTOPO_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return GTOPO_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  gtopo::require(p != nullptr, gtopo::ErrorCode::kInvalidArgument,
                 std::string(name) + " is NULL");
}

}  // namespace

extern "C" {

const char* gtopo_last_error(void) { return last_error.c_str(); }

const char* gtopo_status_name(gtopo_status s) {
  switch (s) {
    case GTOPO_OK: return "ok";
    case GTOPO_INVALID_ARGUMENT: return "invalid argument";
    case GTOPO_DIMENSION_MISMATCH: return "dimension mismatch";
    case GTOPO_MODEL_CONSTRUCTION: return "model construction";
    case GTOPO_SAMPLING: return "sampling";
    case GTOPO_NUMERICAL: return "numerical";
    case GTOPO_DIVERGENCE: return "divergence";
    case GTOPO_NON_CONVERGENCE: return "non-convergence";
    case GTOPO_INSTABILITY: return "instability";
    case GTOPO_IO: return "io";
    case GTOPO_PARSE: return "parse";
    case GTOPO_INTERNAL: return "internal";
  }
  return "unknown";
}

gtopo_status gtopo_config_load(const char* path, gtopo_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new gtopo_config{gtopo::load_config(path)};
  });
}

gtopo_status gtopo_config_parse(const char* text, gtopo_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new gtopo_config{gtopo::parse_config(text)};
  });
}

gtopo_status gtopo_config_set(gtopo_config* cfg, const char* key,
                              const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    gtopo::set_config_value(cfg->cfg, key, value);
  });
}

gtopo_status gtopo_config_text(const gtopo_config* cfg, char* buf, size_t cap,
                               size_t* len) {
  return guarded([&] {
    need(cfg, "config");
    const std::string text = gtopo::config_to_string(cfg->cfg);
    if (len) *len = text.size();
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

void gtopo_config_free(gtopo_config* cfg) { delete cfg; }

gtopo_status gtopo_run(const gtopo_config* cfg, gtopo_artifacts** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = new gtopo_artifacts{gtopo::run_experiment(cfg->cfg)};
  });
}

gtopo_status gtopo_artifacts_summary(const gtopo_artifacts* art,
                                     gtopo_run_summary* out) {
  return guarded([&] {
    need(art, "artifacts");
    need(out, "out");
    const gtopo::RunArtifacts& a = art->art;
    gtopo_run_summary s{};
    s.horizon = static_cast<long>(a.msd_emp.size());
    s.feature_size = a.setup.moments.feature_size();
    s.runs = a.setup.config.runs;
    s.completed_runs = a.completed_runs;
    for (long d : a.diverged_at) s.diverged_runs += d >= 0 ? 1 : 0;
    s.mu = a.setup.mu;
    s.stability_bound = a.setup.stability_bound;
    s.msd_emp_final = s.horizon > 0 ? a.msd_emp(s.horizon - 1) : kNaN;
    s.msd_theo_final =
        a.msd_theo.size() > 0 ? a.msd_theo(a.msd_theo.size() - 1) : kNaN;
    s.msd_ss = a.msd_ss;
    s.msd_max_gap_db = kNaN;
    if (a.msd_theo.size() == a.msd_emp.size() && s.horizon > 0) {
      s.msd_max_gap_db = gtopo::compare_curves(a.msd_emp, a.msd_theo).max_gap_db;
    }
    *out = s;
  });
}

gtopo_status gtopo_artifacts_write(const gtopo_artifacts* art,
                                   const char* dir) {
  return guarded([&] {
    need(art, "artifacts");
    gtopo::emit_outputs(art->art, dir ? dir : art->art.setup.config.out);
  });
}

const char* gtopo_artifacts_dir(const gtopo_artifacts* art) {
  return art ? art->art.setup.config.out.c_str() : "";
}

void gtopo_artifacts_free(gtopo_artifacts* art) { delete art; }

gtopo_status gtopo_moments(const gtopo_config* cfg, gtopo_moments_info* out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    const gtopo::PreparedExperiment p =
        gtopo::prepare_experiment(cfg->cfg, false);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        p.moments.r_ss, Eigen::EigenvaluesOnly);
    gtopo_moments_info info{};
    info.nodes = p.moments.nodes;
    info.dictionary_size = p.moments.dictionary;
    info.feature_size = p.moments.feature_size();
    info.lambda_max = es.eigenvalues().maxCoeff();
    info.lambda_min = es.eigenvalues().minCoeff();
    info.stability_bound = p.stability_bound;
    info.r_yy = p.moments.r_yy;
    *out = info;
  });
}

gtopo_status gtopo_solve_gamma(const gtopo_config* cfg, double* gamma,
                               size_t cap, gtopo_solve_info* info) {
  return guarded([&] {
    need(cfg, "config");
    const gtopo::PreparedExperiment p =
        gtopo::prepare_experiment(cfg->cfg, false);
    gtopo::BatchProblem bp =
        gtopo::BatchProblem::from_moments(p.moments, cfg->cfg.eta);
    gtopo::SolverOptions opt;
    opt.tol = cfg->cfg.solver_tol;
    const gtopo::SolveReport rep = gtopo::solve_gamma_star(bp, opt);
    const size_t ks = static_cast<size_t>(rep.gamma.size());
    if (info) {
      info->converged = rep.converged ? 1 : 0;
      info->iterations = rep.iterations;
      info->residual = rep.residual;
      info->objective = rep.objective;
      info->feature_size = static_cast<int>(ks);
    }
    if (gamma) {
      gtopo::require(cap >= ks, gtopo::ErrorCode::kDimensionMismatch,
                     "gamma buffer holds " + std::to_string(cap) +
                         " values, need " + std::to_string(ks));
      for (size_t i = 0; i < ks; ++i) gamma[i] = rep.gamma(i);
    }
    if (!rep.converged) {
      gtopo::fail(gtopo::ErrorCode::kNonConvergence,
                  "gamma: solver did not converge (residual " +
                      gtopo::format_double(rep.residual) + ")");
    }
  });
}

gtopo_status gtopo_compare_csv(const char* path_a, const char* column_a,
                               const char* path_b, const char* column_b,
                               long burn_in, gtopo_compare_report* out) {
  return guarded([&] {
    need(path_a, "path_a");
    need(column_a, "column_a");
    need(path_b, "path_b");
    need(column_b, "column_b");
    need(out, "out");
    const gtopo::CsvTable a = gtopo::read_csv(path_a);
    const gtopo::CsvTable b = gtopo::read_csv(path_b);
    const int ca = a.column(column_a);
    const int cb = b.column(column_b);
    gtopo::require(ca >= 0, gtopo::ErrorCode::kParse,
                   std::string(path_a) + ": no column " + column_a);
    gtopo::require(cb >= 0, gtopo::ErrorCode::kParse,
                   std::string(path_b) + ": no column " + column_b);
    const gtopo::CurveComparison c =
        gtopo::compare_curves(a.values(ca), b.values(cb), burn_in);
    out->max_gap_db = c.max_gap_db;
    out->max_gap_index = c.max_gap_index;
    out->burn_in = c.burn_in;
    out->compared = c.compared;
    out->excluded = c.excluded;
  });
}

gtopo_status gtopo_kernel_eval(double sigma, const double* a, const double* b,
                               size_t dim, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    const gtopo::GaussianKernel k(sigma);
    const Eigen::Index d = static_cast<Eigen::Index>(dim);
    *out = k.eval(Eigen::Map<const Eigen::VectorXd>(a, d),
                  Eigen::Map<const Eigen::VectorXd>(b, d));
  });
}

gtopo_status gtopo_features(double sigma, const double* dictionary,
                            size_t count, size_t dim, const double* y,
                            double* s, double* t) {
  return guarded([&] {
    need(dictionary, "dictionary");
    need(y, "y");
    need(s, "s");
    need(t, "t");
    gtopo::require(count > 0 && dim > 0, gtopo::ErrorCode::kInvalidArgument,
                   "empty dictionary");
    const Eigen::Index q = static_cast<Eigen::Index>(count);
    const Eigen::Index n = static_cast<Eigen::Index>(dim);
    const Eigen::MatrixXd rows =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(dictionary, q, n);
    const gtopo::Dictionary dict(rows);
    const gtopo::GaussianKernel k(sigma);
    const Eigen::Index ks = (n + 1) * q;
    Eigen::Map<Eigen::VectorXd> s_map(s, ks);
    Eigen::Map<Eigen::MatrixXd> t_map(t, ks, n);
    gtopo::compute_features_into(k, dict, Eigen::Map<const Eigen::VectorXd>(y, n),
                                 s_map, t_map);
  });
}

gtopo_status gtopo_estimator_create(int nodes, int dictionary_size, double mu,
                                    double eta, double forgetting,
                                    gtopo_estimator** out) {
  return guarded([&] {
    need(out, "out");
    gtopo::EstimatorDims dims{nodes, dictionary_size};
    *out = new gtopo_estimator{gtopo::init_state(dims, mu, eta, forgetting)};
  });
}

gtopo_status gtopo_estimator_update_covariance(gtopo_estimator* est,
                                               const double* t) {
  return guarded([&] {
    need(est, "estimator");
    need(t, "t");
    const auto& d = est->state.dims;
    gtopo::update_covariance(
        est->state, Eigen::Map<const Eigen::MatrixXd>(t, d.feature_size(),
                                                      d.nodes));
  });
}

gtopo_status gtopo_estimator_step(gtopo_estimator* est, const double* s,
                                  double y) {
  return guarded([&] {
    need(est, "estimator");
    need(s, "s");
    gtopo::step(est->state,
                Eigen::Map<const Eigen::VectorXd>(
                    s, est->state.dims.feature_size()),
                y);
  });
}

gtopo_status gtopo_estimator_delta(const gtopo_estimator* est, int m,
                                   double* out) {
  return guarded([&] {
    need(est, "estimator");
    need(out, "out");
    *out = gtopo::delta(est->state, m);
  });
}

gtopo_status gtopo_estimator_gamma(const gtopo_estimator* est, double* out,
                                   size_t cap) {
  return guarded([&] {
    need(est, "estimator");
    need(out, "out");
    const Eigen::VectorXd& g = est->state.gamma_hat;
    gtopo::require(cap >= static_cast<size_t>(g.size()),
                   gtopo::ErrorCode::kDimensionMismatch,
                   "gamma buffer too small");
    for (Eigen::Index i = 0; i < g.size(); ++i) out[i] = g(i);
  });
}

void gtopo_estimator_free(gtopo_estimator* est) { delete est; }

}  // extern "C"
