#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trolink/numeric.hpp"
#include "trolink/rng.hpp"

#include "testutil.hpp"

using namespace trolink;

TEST_CASE("numeric_rank agrees with elimination on random low-rank products") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Index rows = rng.uniform_index(1, 12);
    const Index cols = rng.uniform_index(1, 12);
    const Index r = rng.uniform_index(0, std::min(rows, cols));
    Mat m = Mat::Zero(rows, cols);
    if (r > 0) m = rng.gaussian_matrix(rows, r) * rng.gaussian_matrix(r, cols);
    CHECK(numeric_rank(m, kDefaultTol) == r);
    CHECK(testutil::oracle_rank(m, kDefaultTol) == r);
  }
}

TEST_CASE("image_onb returns an orthonormal basis of the column space") {
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    const Index rows = rng.uniform_index(1, 10);
    const Index r = rng.uniform_index(0, rows);
    Mat m = Mat::Zero(rows, rng.uniform_index(1, 10));
    if (r > 0 && m.cols() >= r) m = rng.gaussian_matrix(rows, r) * rng.gaussian_matrix(r, m.cols());
    const Mat q = image_onb(m, kDefaultTol);
    CHECK(q.cols() == numeric_rank(m, kDefaultTol));
    CHECK(testutil::approx_eq(q.adjoint() * q, Mat::Identity(q.cols(), q.cols()), 1e-12));
    // every original column is reproduced by the projection
    const Mat resid = m - q * (q.adjoint() * m);
    if (resid.size() > 0) CHECK(resid.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("kernel_onb spans the null space") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const Index rows = rng.uniform_index(1, 8);
    const Index cols = rng.uniform_index(1, 8);
    const Index r = rng.uniform_index(0, std::min(rows, cols));
    Mat m = Mat::Zero(rows, cols);
    if (r > 0) m = rng.gaussian_matrix(rows, r) * rng.gaussian_matrix(r, cols);
    const Mat k = kernel_onb(m, kDefaultTol);
    CHECK(k.cols() == cols - numeric_rank(m, kDefaultTol));
    if (k.cols() > 0) {
      CHECK(testutil::approx_eq(k.adjoint() * k, Mat::Identity(k.cols(), k.cols()), 1e-12));
      CHECK((m * k).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("kernel_onb handles degenerate shapes") {
  CHECK(kernel_onb(Mat(0, 5), kDefaultTol).cols() == 5);
  CHECK(kernel_onb(Mat(3, 0), kDefaultTol).cols() == 0);
}

TEST_CASE("spectral_norm matches the eigenvalue route") {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat m = rng.gaussian_matrix(rng.uniform_index(1, 9), rng.uniform_index(1, 9));
    CHECK(spectral_norm(m) == doctest::Approx(testutil::oracle_spectral_norm(m)).epsilon(1e-10));
  }
}

TEST_CASE("rng streams are deterministic and seed-separated") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    all_equal = all_equal && (x == b.next_u64());
    any_diff = any_diff || (x != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
  CHECK(Rng::derive(7, 0) != Rng::derive(7, 1));
  CHECK(Rng::derive(7, 0) == Rng::derive(7, 0));
}

TEST_CASE("rng unitary is unitary") {
  Rng rng(15);
  for (Index n : {1, 2, 3, 5}) {
    const Mat u = rng.unitary(n);
    CHECK(testutil::approx_eq(u.adjoint() * u, Mat::Identity(n, n), 1e-12));
  }
}

TEST_CASE("uniform01 stays in range and fills it") {
  Rng rng(16);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 4096; ++i) {
    const double x = rng.uniform01();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo < 0.05);
  CHECK(hi > 0.95);
}
