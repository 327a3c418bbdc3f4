#include "gtopo/kernel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gtopo/error.hpp"
#include "gtopo/random.hpp"

namespace gtopo {

namespace {

void check_pair(const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b) {
  require(a.size() == b.size(), ErrorCode::kDimensionMismatch,
          "kernel arguments differ in dimension");
}

void check_component(int m, Eigen::Index dim) {
  require(m >= 0 && m < dim, ErrorCode::kDimensionMismatch,
          "component index out of range");
}

}  // namespace

GaussianKernel::GaussianKernel(double bandwidth) : sigma_(bandwidth) {
  require(bandwidth > 0.0 && std::isfinite(bandwidth),
          ErrorCode::kInvalidArgument, "kernel bandwidth must be positive");
}

double GaussianKernel::eval(const Eigen::Ref<const Eigen::VectorXd>& a,
                            const Eigen::Ref<const Eigen::VectorXd>& b) const {
  check_pair(a, b);
  return std::exp(-(a - b).squaredNorm() / (2.0 * sigma_ * sigma_));
}

double GaussianKernel::grad_first_arg(
    const Eigen::Ref<const Eigen::VectorXd>& a,
    const Eigen::Ref<const Eigen::VectorXd>& b, int m) const {
  check_pair(a, b);
  check_component(m, a.size());
  return eval(a, b) * (b(m) - a(m)) / (sigma_ * sigma_);
}

double GaussianKernel::second_cross(const Eigen::Ref<const Eigen::VectorXd>& a,
                                    const Eigen::Ref<const Eigen::VectorXd>& b,
                                    int m1, int m2) const {
  check_pair(a, b);
  check_component(m1, a.size());
  check_component(m2, a.size());
  const double s2 = sigma_ * sigma_;
  const double d1 = a(m1) - b(m1);
  const double d2 = a(m2) - b(m2);
  return eval(a, b) * ((m1 == m2 ? 1.0 / s2 : 0.0) - d1 * d2 / (s2 * s2));
}

Dictionary::Dictionary(int dim, DictionaryMode mode, double coherence_threshold)
    : dim_(dim), mode_(mode), threshold_(coherence_threshold) {
  require(dim >= 1, ErrorCode::kInvalidArgument, "dictionary dim must be >= 1");
  if (mode == DictionaryMode::kCoherence) {
    require(coherence_threshold >= 0.0 && coherence_threshold < 1.0,
            ErrorCode::kInvalidArgument,
            "coherence threshold must lie in [0, 1)");
  }
}

Dictionary::Dictionary(const Eigen::MatrixXd& elements)
    : dim_(static_cast<int>(elements.cols())) {
  require(elements.rows() >= 1 && elements.cols() >= 1,
          ErrorCode::kInvalidArgument, "dictionary must be nonempty");
  require(elements.allFinite(), ErrorCode::kInvalidArgument,
          "dictionary elements must be finite");
  for (int q = 0; q < elements.rows(); ++q) {
    elements_.push_back(elements.row(q).transpose());
  }
}

Eigen::MatrixXd Dictionary::matrix() const {
  Eigen::MatrixXd out(size(), dim_);
  for (int q = 0; q < size(); ++q) out.row(q) = elements_[q].transpose();
  return out;
}

bool Dictionary::admit(const Eigen::Ref<const Eigen::VectorXd>& candidate,
                       const GaussianKernel& kernel) {
  require(mode_ == DictionaryMode::kCoherence, ErrorCode::kInvalidArgument,
          "admission requires a coherence-mode dictionary");
  require(candidate.size() == dim_, ErrorCode::kDimensionMismatch,
          "candidate dimension does not match dictionary");
  for (const auto& e : elements_) {
    if (std::abs(kernel.eval(candidate, e)) > threshold_) return false;
  }
  elements_.push_back(candidate);
  return true;
}

void Dictionary::write(std::ostream& os) const {
  os << std::setprecision(17);
  for (const auto& e : elements_) {
    for (int j = 0; j < e.size(); ++j) os << (j ? " " : "") << e(j);
    os << '\n';
  }
}

Dictionary Dictionary::read(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorCode::kParse, "dictionary line " + std::to_string(lineno) +
                                    ": bad number '" + tok + "'");
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::kParse, "dictionary line " + std::to_string(lineno) +
                                  ": inconsistent dimension");
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::kParse, "dictionary file is empty");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t q = 0; q < rows.size(); ++q) {
    for (std::size_t j = 0; j < rows[q].size(); ++j) m(q, j) = rows[q][j];
  }
  return Dictionary(m);
}

void Dictionary::save(const std::string& path) const {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot write " + path);
  write(os);
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + path);
}

Dictionary Dictionary::load(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot read " + path);
  return read(is);
}

Dictionary dictionary_grid(int dim, int count, double lo, double hi,
                           std::uint64_t seed) {
  require(dim >= 1 && count >= 1, ErrorCode::kInvalidArgument,
          "dictionary dim and count must be >= 1");
  require(lo < hi, ErrorCode::kInvalidArgument, "empty dictionary interval");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(count, dim);
  for (int q = 0; q < count; ++q) {
    for (int j = 0; j < dim; ++j) m(q, j) = u(rng);
  }
  return Dictionary(m);
}

Eigen::VectorXd FeatureVectors::s() const {
  Eigen::VectorXd out(z.size() + k.size());
  out << z, k;
  return out;
}

Eigen::VectorXd FeatureVectors::t(int m) const {
  require(m >= 0 && m < static_cast<int>(ell.size()),
          ErrorCode::kDimensionMismatch, "node index out of range");
  const Eigen::Index d = k.size();
  Eigen::VectorXd out(ell[m].size() + d);
  out << ell[m], zeta.segment(m * d, d);
  return out;
}

void compute_features_into(const GaussianKernel& kernel,
                           const Dictionary& dict,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           Eigen::Ref<Eigen::VectorXd> s,
                           Eigen::Ref<Eigen::MatrixXd> t) {
  require(!dict.empty(), ErrorCode::kInvalidArgument, "dictionary is empty");
  require(y.size() == dict.dim(), ErrorCode::kDimensionMismatch,
          "signal dimension does not match dictionary");
  const int n = dict.dim();
  const int d = dict.size();
  const int ks = (n + 1) * d;
  require(s.size() == ks && t.rows() == ks && t.cols() == n,
          ErrorCode::kDimensionMismatch, "feature storage has wrong shape");
  const double s2 = kernel.bandwidth() * kernel.bandwidth();
  const double s4 = s2 * s2;
  for (int q = 0; q < d; ++q) {
    const Eigen::VectorXd diff = y - dict[q];
    const double kq = std::exp(-diff.squaredNorm() / (2.0 * s2));
    s(n * d + q) = kq;
    for (int m = 0; m < n; ++m) {
      const double zmq = kq * diff(m) / s2;
      s(m * d + q) = zmq;
      t(n * d + q, m) = -zmq;
      for (int a = 0; a < n; ++a) {
        t(a * d + q, m) =
            kq * ((a == m ? 1.0 / s2 : 0.0) - diff(a) * diff(m) / s4);
      }
    }
  }
}

FeatureVectors compute_features(const GaussianKernel& kernel,
                                const Dictionary& dict,
                                const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(!dict.empty(), ErrorCode::kInvalidArgument, "dictionary is empty");
  require(y.size() == dict.dim(), ErrorCode::kDimensionMismatch,
          "signal dimension does not match dictionary");
  const int n = dict.dim();
  const int d = dict.size();
  Eigen::VectorXd s((n + 1) * d);
  Eigen::MatrixXd t((n + 1) * d, n);
  compute_features_into(kernel, dict, y, s, t);

  FeatureVectors f;
  f.z = s.head(n * d);
  f.k = s.tail(d);
  f.zeta.resize(n * d);
  f.ell.resize(n);
  for (int m = 0; m < n; ++m) {
    f.zeta.segment(m * d, d) = t.col(m).tail(d);
    f.ell[m] = t.col(m).head(n * d);
  }
  return f;
}

}  // namespace gtopo
