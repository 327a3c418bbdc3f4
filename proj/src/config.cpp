#include "gtopo/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "gtopo/error.hpp"

namespace gtopo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorCode::kParse, "bad value for '" + key + "': '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, v);
    return d;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, v);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    // Accept 1e6 style counts as long as they are integral.
    const double d = std::stod(v, &used);
    if (used != v.size() || d != std::floor(d) || std::abs(d) > 9e18) {
      bad_value(key, v);
    }
    return static_cast<long long>(d);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, v);
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long u = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') bad_value(key, v);
    return u;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

Eigen::MatrixXd to_matrix(const std::string& key, const std::string& v) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(v);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::replace(row.begin(), row.end(), ',', ' ');
    std::istringstream rs(row);
    std::vector<double> r;
    std::string tok;
    while (rs >> tok) r.push_back(to_double(key, tok));
    if (r.empty()) continue;
    if (!rows.empty() && r.size() != rows.front().size()) bad_value(key, v);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) bad_value(key, v);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

void set_config_value(ExperimentConfig& c, const std::string& key_in,
                      const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string v = trim(value_in);
  if (key == "model") {
    if (v == "linear") c.model = ModelKind::kLinear;
    else if (v == "nonlinear") c.model = ModelKind::kNonlinear;
    else if (v == "custom") c.model = ModelKind::kCustom;
    else bad_value(key, v);
  } else if (key == "adjacency") {
    c.adjacency = to_matrix(key, v);
  } else if (key == "noise_std") {
    c.noise_std = to_double(key, v);
  } else if (key == "k1") {
    c.k1 = to_double(key, v);
  } else if (key == "k2") {
    c.k2 = to_double(key, v);
  } else if (key == "covariance_samples") {
    c.covariance_samples = to_int(key, v);
  } else if (key == "moments") {
    if (v == "auto") c.moments = MomentSource::kAuto;
    else if (v == "closed_form") c.moments = MomentSource::kClosedForm;
    else if (v == "sample") c.moments = MomentSource::kSample;
    else bad_value(key, v);
  } else if (key == "kernel_sigma") {
    c.kernel_sigma = to_double(key, v);
  } else if (key == "dictionary_count") {
    c.dictionary_count = static_cast<int>(to_int(key, v));
  } else if (key == "dictionary_low") {
    c.dictionary_low = to_double(key, v);
  } else if (key == "dictionary_high") {
    c.dictionary_high = to_double(key, v);
  } else if (key == "dictionary_seed") {
    c.dictionary_seed = to_u64(key, v);
    c.has_dictionary_seed = true;
  } else if (key == "dictionary_file") {
    c.dictionary_file = v;
  } else if (key == "mu") {
    c.mu = to_double(key, v);
  } else if (key == "mu_scale") {
    c.mu_scale = to_double(key, v);
  } else if (key == "eta") {
    c.eta = to_double(key, v);
  } else if (key == "forgetting") {
    c.forgetting = to_double(key, v);
  } else if (key == "use_exact_rtt") {
    c.use_exact_rtt = to_bool(key, v);
  } else if (key == "runs") {
    c.runs = static_cast<int>(to_int(key, v));
  } else if (key == "horizon") {
    c.horizon = to_int(key, v);
  } else if (key == "node") {
    c.node = static_cast<int>(to_int(key, v));
  } else if (key == "seed") {
    c.seed = to_u64(key, v);
  } else if (key == "threads") {
    c.threads = static_cast<int>(to_int(key, v));
  } else if (key == "allow_divergence") {
    c.allow_divergence = to_bool(key, v);
  } else if (key == "divergence_norm") {
    c.divergence_norm = to_double(key, v);
  } else if (key == "theory") {
    c.theory = to_bool(key, v);
  } else if (key == "solver_tol") {
    c.solver_tol = to_double(key, v);
  } else if (key == "out") {
    c.out = v;
  } else if (key == "cache") {
    c.cache = v;
  } else {
    fail(ErrorCode::kParse, "unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    require(ok, ErrorCode::kInvalidArgument, what);
  };
  need((mu > 0.0) != (mu_scale > 0.0),
       "exactly one of mu and mu_scale must be positive");
  need(std::isfinite(mu) && std::isfinite(mu_scale), "mu must be finite");
  need(eta >= 0.0 && std::isfinite(eta), "eta must be >= 0");
  need(forgetting >= 0.0 && forgetting < 1.0, "forgetting must lie in [0, 1)");
  need(runs >= 1, "runs must be >= 1");
  need(horizon >= 1, "horizon must be >= 1");
  need(kernel_sigma > 0.0, "kernel_sigma must be positive");
  need(dictionary_file.size() > 0 || dictionary_count >= 1,
       "dictionary_count must be >= 1");
  need(dictionary_low < dictionary_high, "empty dictionary interval");
  need(noise_std > 0.0, "noise_std must be positive");
  need(threads >= 1, "threads must be >= 1");
  need(divergence_norm > 0.0, "divergence_norm must be positive");
  need(covariance_samples >= 2, "covariance_samples must be >= 2");
  need(solver_tol > 0.0, "solver_tol must be positive");
  if (model == ModelKind::kCustom) {
    need(adjacency.size() > 0, "custom model requires an adjacency");
  }
  if (model == ModelKind::kNonlinear) {
    need(adjacency.size() == 0 || adjacency.rows() == 3,
         "nonlinear model is defined on 3 nodes");
  }
  const int nodes = adjacency.size() > 0 ? static_cast<int>(adjacency.rows())
                    : model == ModelKind::kNonlinear ? 3
                                                     : 5;
  need(node >= 1 && node <= nodes, "node out of range");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kParse,
           "config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(c, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(e.code(), "config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_string(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "model = "
     << (c.model == ModelKind::kLinear      ? "linear"
         : c.model == ModelKind::kNonlinear ? "nonlinear"
                                            : "custom")
     << '\n';
  if (c.adjacency.size() > 0) {
    os << "adjacency = ";
    for (int i = 0; i < c.adjacency.rows(); ++i) {
      for (int j = 0; j < c.adjacency.cols(); ++j) {
        os << (j ? " " : "") << c.adjacency(i, j);
      }
      os << (i + 1 < c.adjacency.rows() ? "; " : "");
    }
    os << '\n';
  }
  os << "noise_std = " << c.noise_std << '\n'
     << "k1 = " << c.k1 << '\n'
     << "k2 = " << c.k2 << '\n'
     << "covariance_samples = " << c.covariance_samples << '\n'
     << "moments = "
     << (c.moments == MomentSource::kAuto          ? "auto"
         : c.moments == MomentSource::kClosedForm ? "closed_form"
                                                  : "sample")
     << '\n'
     << "kernel_sigma = " << c.kernel_sigma << '\n'
     << "dictionary_count = " << c.dictionary_count << '\n'
     << "dictionary_low = " << c.dictionary_low << '\n'
     << "dictionary_high = " << c.dictionary_high << '\n';
  if (c.has_dictionary_seed) os << "dictionary_seed = " << c.dictionary_seed << '\n';
  if (!c.dictionary_file.empty()) os << "dictionary_file = " << c.dictionary_file << '\n';
  if (c.mu > 0.0) os << "mu = " << c.mu << '\n';
  if (c.mu_scale > 0.0) os << "mu_scale = " << c.mu_scale << '\n';
  os << "eta = " << c.eta << '\n'
     << "forgetting = " << c.forgetting << '\n'
     << "use_exact_rtt = " << (c.use_exact_rtt ? "true" : "false") << '\n'
     << "runs = " << c.runs << '\n'
     << "horizon = " << c.horizon << '\n'
     << "node = " << c.node << '\n'
     << "seed = " << c.seed << '\n'
     << "threads = " << c.threads << '\n'
     << "allow_divergence = " << (c.allow_divergence ? "true" : "false") << '\n'
     << "divergence_norm = " << c.divergence_norm << '\n'
     << "theory = " << (c.theory ? "true" : "false") << '\n'
     << "solver_tol = " << c.solver_tol << '\n'
     << "out = " << c.out << '\n';
  if (!c.cache.empty()) os << "cache = " << c.cache << '\n';
  return os.str();
}

}  // namespace gtopo
