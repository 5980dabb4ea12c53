#include <doctest.h>

#include <random>

#include "dgpcg/errors.hpp"
#include "dgpcg/reference.hpp"
#include "dgpcg/tensor.hpp"

using namespace dgpcg;

namespace {

Mat random_spd(std::mt19937_64& rng, Eigen::Index n, double shift) {
  std::normal_distribution<double> g;
  Mat b(n, n);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
  return b * b.transpose() + shift * Mat::Identity(n, n);
}

}  // namespace

TEST_CASE("cholesky of a known 2x2") {
  Mat a(2, 2);
  a << 4, 2, 2, 3;
  const auto f = cholesky(a);
  CHECK(f.lower(0, 0) == doctest::Approx(2.0));
  CHECK(f.lower(1, 0) == doctest::Approx(1.0));
  CHECK(f.lower(1, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(f.jitter_used == 0.0);
  CHECK(logdet(f) == doctest::Approx(std::log(8.0)));
}

TEST_CASE("factor reconstructs random SPD matrices") {
  std::mt19937_64 rng(3);
  for (Eigen::Index n = 1; n <= 20; ++n) {
    const Mat a = random_spd(rng, n, 0.1);
    const auto f = cholesky(a);
    CHECK((f.reconstruct() - a).norm() <= 1e-12 * a.norm());
    // lower triangular with positive diagonal
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(f.lower(i, i) > 0.0);
      for (Eigen::Index j = i + 1; j < n; ++j) CHECK(f.lower(i, j) == 0.0);
    }
  }
}

TEST_CASE("solve_posdef matches the system and accepts matrix right-hand sides") {
  std::mt19937_64 rng(5);
  const Mat a = random_spd(rng, 7, 1.0);
  const auto f = cholesky(a);
  Mat rhs = Mat::Random(7, 3);
  const Mat x = solve_posdef(f, rhs);
  CHECK((a * x - rhs).norm() <= 1e-12 * rhs.norm());
  CHECK_THROWS_AS(solve_posdef(f, Vec(Vec::Ones(4))), Error);
}

TEST_CASE("logdet agrees with the eigenvalue product") {
  std::mt19937_64 rng(9);
  for (int n : {1, 3, 8, 15}) {
    const Mat a = random_spd(rng, n, 0.5);
    CHECK(logdet(cholesky(a)) == doctest::Approx(reference::logdet(a)).epsilon(1e-12));
  }
}

TEST_CASE("input validation") {
  Mat rect(2, 3);
  rect.setZero();
  try {
    cholesky(rect);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
  }
  Mat asym(2, 2);
  asym << 1, 0.5, 0, 1;
  try {
    cholesky(asym);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotSymmetric);
  }
  try {
    cholesky(Mat(-Mat::Identity(2, 2)));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotPositiveDefinite);
  }
}

TEST_CASE("semi-definite input walks the jitter ladder") {
  const Mat ones = Mat::Ones(4, 4);
  const auto f = cholesky(ones);
  CHECK(f.jitter_used > 0.0);
  CHECK((f.reconstruct() - ones).cwiseAbs().maxCoeff() <= f.jitter_used * 1.0001);
}

TEST_CASE("float instantiation") {
  MatT<float> a(2, 2);
  a << 2.f, 1.f, 1.f, 2.f;
  const auto f = cholesky(a);
  CHECK(logdet(f) == doctest::Approx(std::log(3.0)).epsilon(1e-5));
}
