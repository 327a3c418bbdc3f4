#include "gtopo/gaussian_moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gtopo/error.hpp"

namespace gtopo {

namespace {

// Isserlis expansion with means m and covariance entries s(i, j) over the
// local variables 0..k-1.
template <class Mean, class Cov>
double isserlis(int k, const Mean& m, const Cov& s) {
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return m(0);
    case 2:
      return m(0) * m(1) + s(0, 1);
    case 3:
      return m(0) * m(1) * m(2) + m(0) * s(1, 2) + m(1) * s(0, 2) +
             m(2) * s(0, 1);
    case 4:
      return m(0) * m(1) * m(2) * m(3) + s(0, 1) * s(2, 3) +
             s(0, 2) * s(1, 3) + s(0, 3) * s(1, 2) + m(0) * m(1) * s(2, 3) +
             m(0) * m(2) * s(1, 3) + m(0) * m(3) * s(1, 2) +
             m(1) * m(2) * s(0, 3) + m(1) * m(3) * s(0, 2) +
             m(2) * m(3) * s(0, 1);
    default:
      fail(ErrorCode::kInvalidArgument,
           "at most 4 factors are supported in a Gaussian product moment");
  }
}

// c1, c2, c3 for a given number of active atoms.
std::array<int, 3> c_pattern(int atoms) {
  switch (atoms) {
    case 1: return {0, 0, 0};
    case 2: return {0, 0, 1};
    case 3: return {0, 1, 1};
    case 4: return {1, 1, 1};
    default:
      fail(ErrorCode::kInvalidArgument, "between 1 and 4 atoms are required");
  }
}

}  // namespace

double gaussian_product_moment(const Eigen::Ref<const Eigen::VectorXd>& mean,
                               const Eigen::Ref<const Eigen::MatrixXd>& cov,
                               const std::vector<int>& idx) {
  require(cov.rows() == mean.size() && cov.cols() == mean.size(),
          ErrorCode::kDimensionMismatch, "mean and covariance disagree");
  require(idx.size() <= 4, ErrorCode::kInvalidArgument,
          "at most 4 active indices are supported");
  for (int h : idx) {
    require(h >= 0 && h < mean.size(), ErrorCode::kInvalidArgument,
            "moment index out of range");
  }
  const int k = static_cast<int>(idx.size());
  auto m = [&](int i) { return mean(idx[i]); };
  auto s = [&](int i, int j) { return cov(idx[i], idx[j]); };
  return isserlis(k, m, s);
}

MomentContext::MomentContext(Eigen::MatrixXd covariance, double sigma,
                             Dictionary dict)
    : cov_(std::move(covariance)), sigma_(sigma), dict_(std::move(dict)) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::kInvalidArgument,
          "kernel bandwidth must be positive");
  require(!dict_.empty(), ErrorCode::kInvalidArgument, "dictionary is empty");
  n_ = dict_.dim();
  require(cov_.rows() == n_ + 1 && cov_.cols() == n_ + 1,
          ErrorCode::kDimensionMismatch,
          "covariance must be (N+1) x (N+1) for an N-dimensional dictionary");
  require(cov_.allFinite(), ErrorCode::kInvalidArgument,
          "covariance must be finite");
  require((cov_ - cov_.transpose()).norm() <= 1e-12 * cov_.norm(),
          ErrorCode::kInvalidArgument, "covariance must be symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  require(llt.info() == Eigen::Success, ErrorCode::kInvalidArgument,
          "covariance must be positive definite");

  const int n = n_;
  const double s2 = sigma_ * sigma_;
  for (int j = 1; j <= 4; ++j) {
    const auto c = c_pattern(j);
    const double c4 = (1 + c[0] + c[1] + c[2]) / s2;
    // Slot weights of B4 and Q4: 1, c3, c3 c2, c3 c2 c1.
    const std::array<double, 4> w{1.0, double(c[2]), double(c[2] * c[1]),
                                  double(c[2] * c[1] * c[0])};
    Eigen::MatrixXd b4 = Eigen::MatrixXd::Zero(n + 1, 4 * n);
    Eigen::MatrixXd q4 = Eigen::MatrixXd::Zero(4 * n, 4 * n);
    for (int slot = 0; slot < 4; ++slot) {
      b4.block(0, slot * n, n, n).diagonal().setConstant(-w[slot] / s2);
      q4.block(slot * n, slot * n, n, n).diagonal().setConstant(-w[slot] / s2);
    }

    // [c4 B0 + R^-1]^-1 by the Woodbury identity, which avoids forming R^-1.
    const Eigen::MatrixXd rpp = cov_.topLeftCorner(n, n);
    Eigen::MatrixXd inner =
        rpp + Eigen::MatrixXd::Identity(n, n) / c4;
    Eigen::LLT<Eigen::MatrixXd> inner_llt(inner);
    require(inner_llt.info() == Eigen::Success, ErrorCode::kNumerical,
            "inner kernel matrix is not positive definite");
    const Eigen::MatrixXd rp = cov_.leftCols(n);
    Eigen::MatrixXd post = cov_ - rp * inner_llt.solve(rp.transpose());
    post = 0.5 * (post + post.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(post,
                                                       Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    Regime& r = regimes_[j - 1];
    r.condition = lo > 0.0 ? hi / lo : INFINITY;
    if (!(r.condition <= kMaxInnerCondition)) {
      std::ostringstream os;
      os << "[c4 B0 + R^-1] is ill-conditioned (condition number "
         << r.condition << ", limit " << kMaxInnerCondition << ")";
      fail(ErrorCode::kNumerical, os.str());
    }
    r.sigma_post = post;
    r.mean_map = -post * b4;
    r.quad = q4 + b4.transpose() * post * b4;
    r.quad = 0.5 * (r.quad + r.quad.transpose());
    Eigen::MatrixXd id_plus =
        Eigen::MatrixXd::Identity(n, n) + c4 * rpp;
    r.det_factor = 1.0 / std::sqrt(id_plus.determinant());
  }
}

double MomentContext::nu(const NuParameters& p) const {
  int j = 0;
  for (int cc : p.c) {
    require(cc == 0 || cc == 1, ErrorCode::kInvalidArgument,
            "c flags must be 0 or 1");
  }
  j = p.active_atoms();
  require(p.c == c_pattern(j), ErrorCode::kInvalidArgument,
          "c flags must follow one of the four documented patterns");
  const int n = n_;
  Eigen::VectorXd x4 = Eigen::VectorXd::Zero(4 * n);
  for (int slot = 0; slot < j; ++slot) {
    const int q = p.atoms[slot];
    require(q >= 0 && q < dict_.size(), ErrorCode::kInvalidArgument,
            "atom index out of range");
    x4.segment(slot * n, n) = dict_[q];
  }
  const Regime& r = regimes_[j - 1];
  const Eigen::VectorXd mean = r.mean_map * x4;
  const double expo = 0.5 * x4.dot(r.quad * x4);

  std::array<double, 4> m{};
  std::array<int, 4> h{};
  int k = 0;
  for (const auto& f : p.factors) {
    if (f.h < 0) continue;
    require(f.h <= n, ErrorCode::kInvalidArgument, "h index out of range");
    require(f.x >= -1 && f.x < j * n, ErrorCode::kInvalidArgument,
            "offset must refer to an active atom");
    h[k] = f.h;
    m[k] = mean(f.h) - (f.x >= 0 ? x4(f.x) : 0.0);
    ++k;
  }
  auto mf = [&](int i) { return m[i]; };
  auto sf = [&](int a, int b) { return r.sigma_post(h[a], h[b]); };
  return r.det_factor * std::exp(expo) * isserlis(k, mf, sf);
}

namespace {

struct Term {
  double coef;
  int nfac;
  std::array<int, 2> dims;
};

// Polynomial terms of a feature relative to its atom.
int feature_terms(const MomentContext& ctx, const FeatureRef& f,
                  std::array<Term, 2>& out, int& atom) {
  const int n = ctx.nodes();
  const int d = ctx.dictionary_size();
  const double s2 = ctx.sigma() * ctx.sigma();
  require(f.index >= 0 && f.index < (n + 1) * d, ErrorCode::kInvalidArgument,
          "feature index out of range");
  atom = f.index % d;
  const int block = f.index / d;
  if (f.kind == FeatureKind::kS) {
    if (block < n) {
      out[0] = {1.0 / s2, 1, {block, 0}};
    } else {
      out[0] = {1.0, 0, {0, 0}};
    }
    return 1;
  }
  require(f.node >= 0 && f.node < n, ErrorCode::kInvalidArgument,
          "node index out of range");
  if (block < n) {
    out[0] = {-1.0 / (s2 * s2), 2, {block, f.node}};
    if (block == f.node) {
      out[1] = {1.0 / s2, 0, {0, 0}};
      return 2;
    }
    return 1;
  }
  out[0] = {-1.0 / s2, 1, {f.node, 0}};
  return 1;
}

}  // namespace

double feature_moment(const MomentContext& ctx,
                      const std::vector<FeatureRef>& features, int y_power) {
  const int nf = static_cast<int>(features.size());
  require(nf >= 1 && nf <= 4, ErrorCode::kInvalidArgument,
          "between 1 and 4 features are required");
  require(y_power >= 0, ErrorCode::kInvalidArgument, "negative y power");
  const int n = ctx.nodes();
  std::array<std::array<Term, 2>, 4> terms;
  std::array<int, 4> counts{};
  NuParameters base;
  base.c = c_pattern(nf);
  for (int i = 0; i < nf; ++i) {
    counts[i] = feature_terms(ctx, features[i], terms[i], base.atoms[i]);
  }
  double total = 0.0;
  std::array<int, 4> pick{};
  for (;;) {
    NuParameters p = base;
    double coef = 1.0;
    int k = 0;
    bool ok = true;
    for (int i = 0; i < nf && ok; ++i) {
      const Term& t = terms[i][pick[i]];
      coef *= t.coef;
      for (int a = 0; a < t.nfac; ++a) {
        if (k == 4) { ok = false; break; }
        p.factors[k++] = {t.dims[a], i * n + t.dims[a]};
      }
    }
    for (int a = 0; a < y_power && ok; ++a) {
      if (k == 4) { ok = false; break; }
      p.factors[k++] = {n, -1};
    }
    require(ok, ErrorCode::kInvalidArgument,
            "feature product has more than 4 polynomial factors");
    total += coef * ctx.nu(p);

    int i = 0;
    while (i < nf && ++pick[i] == counts[i]) pick[i++] = 0;
    if (i == nf) break;
  }
  return total;
}

Eigen::MatrixXd compute_R_tt(const MomentContext& ctx, int m) {
  require(m >= 0 && m < ctx.nodes(), ErrorCode::kInvalidArgument,
          "node index out of range");
  const int ks = ctx.feature_size();
  Eigen::MatrixXd r(ks, ks);
  for (int u = 0; u < ks; ++u) {
    for (int v = u; v < ks; ++v) {
      r(u, v) = r(v, u) = feature_moment(
          ctx, {{FeatureKind::kT, u, m}, {FeatureKind::kT, v, m}}, 0);
    }
  }
  return r;
}

Eigen::MatrixXd compute_R_ss(const MomentContext& ctx) {
  const int ks = ctx.feature_size();
  Eigen::MatrixXd r(ks, ks);
  for (int u = 0; u < ks; ++u) {
    for (int v = u; v < ks; ++v) {
      r(u, v) = r(v, u) = feature_moment(
          ctx, {{FeatureKind::kS, u, 0}, {FeatureKind::kS, v, 0}}, 0);
    }
  }
  return r;
}

Eigen::VectorXd compute_r_sy(const MomentContext& ctx) {
  const int ks = ctx.feature_size();
  Eigen::VectorXd r(ks);
  for (int u = 0; u < ks; ++u) {
    r(u) = feature_moment(ctx, {{FeatureKind::kS, u, 0}}, 1);
  }
  return r;
}

FourthOrderTables compute_fourth_order(const MomentContext& ctx) {
  const int ks = ctx.feature_size();
  const auto s = [](int i) { return FeatureRef{FeatureKind::kS, i, 0}; };
  FourthOrderTables out;
  out.f1.resize(ks * ks, ks * ks);
  out.t_sssy.resize(ks, ks * ks);
  out.t_ssyy.resize(ks, ks);

  std::array<int, 4> idx;
  for (int u = 0; u < ks; ++u) {
    for (int a = u; a < ks; ++a) {
      for (int b = a; b < ks; ++b) {
        for (int v = b; v < ks; ++v) {
          const double val = feature_moment(ctx, {s(u), s(a), s(b), s(v)}, 0);
          idx = {u, a, b, v};
          do {
            out.f1(idx[0] + ks * idx[1], idx[2] + ks * idx[3]) = val;
          } while (std::next_permutation(idx.begin(), idx.end()));
        }
        const double val = feature_moment(ctx, {s(u), s(a), s(b)}, 1);
        std::array<int, 3> t3{u, a, b};
        do {
          out.t_sssy(t3[0], t3[1] + ks * t3[2]) = val;
        } while (std::next_permutation(t3.begin(), t3.end()));
      }
      out.t_ssyy(u, a) = out.t_ssyy(a, u) =
          feature_moment(ctx, {s(u), s(a)}, 2);
    }
  }
  return out;
}

MomentSet compute_moments(const MomentContext& ctx, bool fourth_order) {
  MomentSet set;
  set.nodes = ctx.nodes();
  set.dictionary = ctx.dictionary_size();
  set.r_ss = compute_R_ss(ctx);
  set.r_sy = compute_r_sy(ctx);
  set.r_tt.reserve(ctx.nodes());
  for (int m = 0; m < ctx.nodes(); ++m) set.r_tt.push_back(compute_R_tt(ctx, m));
  set.r_yy = ctx.covariance()(ctx.nodes(), ctx.nodes());
  if (fourth_order) {
    FourthOrderTables t = compute_fourth_order(ctx);
    set.f1 = std::move(t.f1);
    set.t_sssy = std::move(t.t_sssy);
    set.t_ssyy = std::move(t.t_ssyy);
  }
  return set;
}

MomentSet estimate_moments(const GaussianKernel& kernel, const Dictionary& dict,
                           const Eigen::Ref<const Eigen::MatrixXd>& samples,
                           bool fourth_order) {
  const int n = dict.dim();
  require(samples.cols() == n + 1, ErrorCode::kDimensionMismatch,
          "samples must hold the N inputs followed by the target");
  require(samples.rows() >= 1, ErrorCode::kInvalidArgument, "no samples");
  const int ks = (n + 1) * dict.size();
  const long count = samples.rows();
  constexpr long kBatch = 2048;

  MomentSet set;
  set.nodes = n;
  set.dictionary = dict.size();
  set.r_ss = Eigen::MatrixXd::Zero(ks, ks);
  set.r_sy = Eigen::VectorXd::Zero(ks);
  set.r_tt.assign(n, Eigen::MatrixXd::Zero(ks, ks));
  if (fourth_order) {
    set.f1 = Eigen::MatrixXd::Zero(ks * ks, ks * ks);
    set.t_sssy = Eigen::MatrixXd::Zero(ks, ks * ks);
    set.t_ssyy = Eigen::MatrixXd::Zero(ks, ks);
  }

  Eigen::MatrixXd s(ks, kBatch), w, wy;
  std::vector<Eigen::MatrixXd> t(n, Eigen::MatrixXd(ks, kBatch));
  Eigen::VectorXd y(kBatch), s_one(ks);
  Eigen::MatrixXd t_one(ks, n);
  if (fourth_order) {
    w.resize(ks * ks, kBatch);
    wy.resize(ks * ks, kBatch);
  }
  for (long start = 0; start < count; start += kBatch) {
    const long b = std::min(kBatch, count - start);
    for (long i = 0; i < b; ++i) {
      const Eigen::VectorXd row = samples.row(start + i).transpose();
      compute_features_into(kernel, dict, row.head(n), s_one, t_one);
      s.col(i) = s_one;
      for (int m = 0; m < n; ++m) t[m].col(i) = t_one.col(m);
      y(i) = row(n);
      if (fourth_order) {
        for (int v = 0; v < ks; ++v) {
          w.col(i).segment(v * ks, ks) = s_one * s_one(v);
        }
        wy.col(i) = w.col(i) * y(i);
      }
    }
    const auto sb = s.leftCols(b);
    const auto yb = y.head(b);
    set.r_ss.noalias() += sb * sb.transpose();
    set.r_sy.noalias() += sb * yb;
    for (int m = 0; m < n; ++m) {
      set.r_tt[m].noalias() += t[m].leftCols(b) * t[m].leftCols(b).transpose();
    }
    set.r_yy += yb.squaredNorm();
    if (fourth_order) {
      set.f1.selfadjointView<Eigen::Lower>().rankUpdate(w.leftCols(b));
      set.t_sssy.noalias() += sb * wy.leftCols(b).transpose();
      set.t_ssyy.noalias() +=
          sb * yb.cwiseAbs2().asDiagonal() * sb.transpose();
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  set.r_ss *= inv;
  set.r_sy *= inv;
  for (auto& r : set.r_tt) r *= inv;
  set.r_yy *= inv;
  if (fourth_order) {
    set.f1 = set.f1.selfadjointView<Eigen::Lower>();
    set.f1 *= inv;
    set.t_sssy *= inv;
    set.t_ssyy *= inv;
  }
  return set;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr char kMagic[8] = {'G', 'T', 'M', 'O', 'M', '0', '0', '1'};

void fnv(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_matrix(std::uint64_t& h, const Eigen::MatrixXd& m) {
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  fnv(h, dims, sizeof dims);
  fnv(h, m.data(), sizeof(double) * m.size());
}

void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  os.write(reinterpret_cast<const char*>(dims), sizeof dims);
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

bool get_matrix(std::istream& is, Eigen::MatrixXd& m) {
  std::int64_t dims[2];
  if (!is.read(reinterpret_cast<char*>(dims), sizeof dims)) return false;
  if (dims[0] < 0 || dims[1] < 0 || dims[0] * dims[1] > (1LL << 31)) {
    return false;
  }
  m.resize(dims[0], dims[1]);
  return static_cast<bool>(
      is.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size())));
}

}  // namespace

std::uint64_t moment_key(const MomentContext& ctx) {
  std::uint64_t h = kFnvOffset;
  fnv_matrix(h, ctx.covariance());
  fnv_matrix(h, ctx.dictionary().matrix());
  const double s = ctx.sigma();
  fnv(h, &s, sizeof s);
  return h;
}

std::uint64_t moment_key(const Eigen::MatrixXd& samples, const Dictionary& dict,
                         double sigma) {
  std::uint64_t h = kFnvOffset;
  fnv_matrix(h, samples);
  fnv_matrix(h, dict.matrix());
  fnv(h, &sigma, sizeof sigma);
  return h;
}

void save_moments(const MomentSet& set, std::uint64_t key,
                  const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot write " + path);
  os.write(kMagic, sizeof kMagic);
  os.write(reinterpret_cast<const char*>(&key), sizeof key);
  const std::int32_t dims[2] = {set.nodes, set.dictionary};
  os.write(reinterpret_cast<const char*>(dims), sizeof dims);
  os.write(reinterpret_cast<const char*>(&set.r_yy), sizeof set.r_yy);
  put_matrix(os, set.r_ss);
  put_matrix(os, set.r_sy);
  for (const auto& r : set.r_tt) put_matrix(os, r);
  put_matrix(os, set.f1);
  put_matrix(os, set.t_sssy);
  put_matrix(os, set.t_ssyy);
  put_matrix(os, set.gamma_star);
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + path);
}

bool load_moments(MomentSet& set, std::uint64_t key, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  char magic[sizeof kMagic];
  std::uint64_t stored = 0;
  std::int32_t dims[2];
  if (!is.read(magic, sizeof magic) ||
      std::memcmp(magic, kMagic, sizeof kMagic) != 0 ||
      !is.read(reinterpret_cast<char*>(&stored), sizeof stored) ||
      stored != key || !is.read(reinterpret_cast<char*>(dims), sizeof dims)) {
    return false;
  }
  MomentSet out;
  out.nodes = dims[0];
  out.dictionary = dims[1];
  if (out.nodes < 1 || out.dictionary < 1) return false;
  Eigen::MatrixXd tmp;
  if (!is.read(reinterpret_cast<char*>(&out.r_yy), sizeof out.r_yy) ||
      !get_matrix(is, out.r_ss) || !get_matrix(is, tmp)) {
    return false;
  }
  out.r_sy = tmp;
  out.r_tt.resize(out.nodes);
  for (auto& r : out.r_tt) {
    if (!get_matrix(is, r)) return false;
  }
  if (!get_matrix(is, out.f1) || !get_matrix(is, out.t_sssy) ||
      !get_matrix(is, out.t_ssyy) || !get_matrix(is, tmp)) {
    return false;
  }
  out.gamma_star = tmp;
  const int ks = out.feature_size();
  if (out.r_ss.rows() != ks || out.r_sy.size() != ks) {
    throw Error(ErrorCode::kParse, "moment cache " + path + " is corrupt");
  }
  set = std::move(out);
  return true;
}

}  // namespace gtopo
