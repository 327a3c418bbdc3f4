#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "gtopo/error.hpp"
#include "gtopo/kernel.hpp"

using namespace gtopo;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(GaussianKernel(1.0).eval(vec({0.3, -1}), vec({0.3, -1})) == 1.0);
  CHECK(GaussianKernel(1.0).eval(vec({0}), vec({1})) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(GaussianKernel(2.0).eval(vec({1, 1}), vec({-1, -1})) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(GaussianKernel(0.0), Error);
}

TEST_CASE("kernel derivatives") {
  const GaussianKernel k1(1.0);
  CHECK(k1.grad_first_arg(vec({0.4}), vec({0.4}), 0) == 0.0);
  CHECK(k1.grad_first_arg(vec({0}), vec({1}), 0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(k1.second_cross(vec({0, 0}), vec({1, 2}), 0, 1) ==
        doctest::Approx(-2.0 * std::exp(-2.5)).epsilon(1e-14));

  const GaussianKernel k(1.7);
  const VectorXd a = vec({0.2, -0.3, 1.1});
  CHECK(k.second_cross(a, a, 1, 1) ==
        doctest::Approx(1.0 / (1.7 * 1.7)).epsilon(1e-14));
  CHECK(k.second_cross(a, a, 0, 2) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd x(3), y(3);
    for (int j = 0; j < 3; ++j) {
      x(j) = u(rng);
      y(j) = u(rng);
    }
    CHECK(k.eval(x, y) == k.eval(y, x));
    for (int m = 0; m < 3; ++m) {
      // d/db_m = -d/da_m
      CHECK(k.grad_first_arg(y, x, m) ==
            doctest::Approx(-k.grad_first_arg(x, y, m)).epsilon(1e-12));
      const double h = 1e-5;
      VectorXd xp = x, xm = x;
      xp(m) += h;
      xm(m) -= h;
      const double fd = (k.eval(xp, y) - k.eval(xm, y)) / (2 * h);
      const double g = k.grad_first_arg(x, y, m);
      CHECK(std::abs(g - fd) / std::max(1.0, std::abs(g)) <= 1e-6);
      for (int m2 = 0; m2 < 3; ++m2) {
        CHECK(k.second_cross(x, y, m, m2) ==
              doctest::Approx(k.second_cross(x, y, m2, m)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("coherence dictionary") {
  const GaussianKernel k(1.0);
  Dictionary d(1, DictionaryMode::kCoherence, 0.5);
  CHECK(d.admit(vec({0}), k));
  CHECK_FALSE(d.admit(vec({0}), k));
  CHECK(d.admit(vec({3}), k));  // exp(-4.5) <= 0.5
  CHECK(d.size() == 2);

  Dictionary grown(2, DictionaryMode::kCoherence, 0.3);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int i = 0; i < 500; ++i) grown.admit(vec({n(rng), n(rng)}), k);
  for (int p = 0; p < grown.size(); ++p) {
    for (int q = 0; q < grown.size(); ++q) {
      if (p != q) CHECK(k.eval(grown[p], grown[q]) <= 0.3);
    }
  }
}

TEST_CASE("grid dictionary") {
  const Dictionary d = dictionary_grid(4, 6, -1, 1, 17);
  CHECK(d.size() == 6);
  CHECK(d.dim() == 4);
  CHECK(d.matrix().maxCoeff() <= 1.0);
  CHECK(d.matrix().minCoeff() >= -1.0);
  CHECK(dictionary_grid(4, 6, -1, 1, 17).matrix() == d.matrix());
  CHECK(dictionary_grid(2, 4, -1, 1, 1).size() == 4);
  CHECK(dictionary_grid(2, 1, -1, 1, 1).size() == 1);

  std::stringstream ss;
  d.write(ss);
  CHECK(Dictionary::read(ss).matrix() == d.matrix());
}

TEST_CASE("feature vectors") {
  Eigen::MatrixXd atoms(2, 2);
  atoms << 0.3, -0.2, -0.5, 0.7;
  const Dictionary d(atoms);
  const GaussianKernel k(0.8);

  SUBCASE("frozen reference") {
    // numpy reimplementation, y = [0.1, 0.4], sigma = 0.8
    const double s_ref[] = {-0.22862988404582552, 0.6596136321990258,
                            0.68588965213747666,  -0.32980681609951285,
                            0.73161562894664178,  0.70358787434562764};
    const double t0_ref[] = {1.0717025814648071,  0.48096827347845655,
                             0.21434051629296139, 0.30919389009329318,
                             0.22862988404582552, -0.6596136321990258};
    const double t1_ref[] = {0.21434051629296139, 0.30919389009329318,
                             0.50012787135024328, 0.94475910861839651,
                             -0.68588965213747666, 0.32980681609951285};
    const FeatureVectors f = compute_features(k, d, vec({0.1, 0.4}));
    const VectorXd s = f.s(), t0 = f.t(0), t1 = f.t(1);
    for (int i = 0; i < 6; ++i) {
      CHECK(s(i) == doctest::Approx(s_ref[i]).epsilon(1e-14));
      CHECK(t0(i) == doctest::Approx(t0_ref[i]).epsilon(1e-14));
      CHECK(t1(i) == doctest::Approx(t1_ref[i]).epsilon(1e-14));
    }
  }
  SUBCASE("at a dictionary element") {
    const FeatureVectors f = compute_features(k, d, d[1]);
    CHECK(f.k(1) == 1.0);
    CHECK(f.z(1) == 0.0);
    CHECK(f.z(2 + 1) == 0.0);
  }
  SUBCASE("identities") {
    const VectorXd y = vec({-0.9, 1.3});
    const FeatureVectors f = compute_features(k, d, y);
    CHECK(f.zeta == -f.z);
    CHECK(f.k.minCoeff() > 0.0);
    CHECK(f.k.maxCoeff() <= 1.0);
    for (int m = 0; m < 2; ++m) {
      for (int a = 0; a < 2; ++a) {
        for (int q = 0; q < 2; ++q) {
          // ell_{a,m} = d^2 kappa / d omega_a d y_m, i.e. second_cross with
          // the atom in the first slot.
          CHECK(f.ell[m](a * 2 + q) ==
                doctest::Approx(k.second_cross(d[q], y, a, m)).epsilon(1e-13));
        }
        CHECK(f.z(m * 2 + 0) ==
              doctest::Approx(k.grad_first_arg(d[0], y, m)).epsilon(1e-13));
      }
    }
    const FeatureVectors g = compute_features(k, d, y);
    CHECK(g.s() == f.s());
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(compute_features(k, d, vec({1, 2, 3})), Error);
  }
}
