#include <doctest.h>

#include <cmath>
#include <random>

#include "dgpcg/errors.hpp"
#include "dgpcg/kernels.hpp"
#include "dgpcg/reference.hpp"

using namespace dgpcg;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("SE base values") {
  const KernelSpec k = KernelSpec::homogeneous(1);
  CHECK(base_kernel(k, 0, vec2(0.3, -1), vec2(0.3, -1)) == 1.0);
  CHECK(base_kernel(k, 0, vec2(0, 0), vec2(1, 1)) == doctest::Approx(0.36787944117144233));
}

TEST_CASE("LIN and SC base values") {
  KernelSpec lin = KernelSpec::composed(KernelFamily::LIN, 1, 2.0, 1.0);
  // 4 * (1*3 + 2*4) / 2 + 1e-6
  CHECK(base_kernel(lin, 0, vec2(1, 2), vec2(3, 4)) == doctest::Approx(22.000001));
  KernelSpec sc = KernelSpec::composed(KernelFamily::SC, 1, 1.0, 2.0);
  const double r = std::sqrt(2.0);
  CHECK(base_kernel(sc, 0, vec2(0, 0), vec2(1, 1)) ==
        doctest::Approx(std::pow(std::cos(r / 2.0), 2)));
}

TEST_CASE("frozen recursion values") {
  const Vec x = vec2(0, 0), y = vec2(1, 1);
  CHECK(effective_kernel(KernelSpec::homogeneous(2), x, y) == doctest::Approx(0.664567).epsilon(1e-6));
  // L=3: 1/sqrt(1 + 2(1 - 0.6645670...))
  const double k2 = 1.0 / std::sqrt(1.0 + 2.0 * (1.0 - std::exp(-1.0)));
  const double k3 = 1.0 / std::sqrt(1.0 + 2.0 * (1.0 - k2));
  CHECK(effective_kernel(KernelSpec::homogeneous(3), x, y) == doctest::Approx(k3).epsilon(1e-14));
}

TEST_CASE("depth one equals the base kernel") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int c = 0; c < 50; ++c) {
    Vec x(5), y(5);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    for (int f = 0; f < 3; ++f) {
      const auto spec = KernelSpec::composed(static_cast<KernelFamily>(f), 1, 1.3, 0.7);
      CHECK(std::abs(effective_kernel(spec, x, y) - base_kernel(spec, 0, x, y)) <= 1e-15);
    }
  }
}

TEST_CASE("diagonal is beta_L^2 and values stay in (0, beta_L^2]") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (std::size_t depth = 1; depth <= 4; ++depth) {
    KernelSpec spec = KernelSpec::homogeneous(depth);
    spec.layers.back().beta = 1.7;
    Vec x(3), y(3);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = 3.0 * g(rng);
    CHECK(std::abs(effective_kernel(spec, x, x) - 1.7 * 1.7) <= 1e-12);
    const double k = effective_kernel(spec, x, y);
    CHECK(k > 0.0);
    CHECK(k <= 1.7 * 1.7);
  }
}

TEST_CASE("symmetry and agreement with the reference recursion") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int c = 0; c < 100; ++c) {
    KernelSpec spec = KernelSpec::composed(static_cast<KernelFamily>(c % 3), 1 + c % 4, 0.8, 1.4);
    Vec x(4), y(4);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    CHECK(effective_kernel(spec, x, y) == effective_kernel(spec, y, x));
    CHECK(effective_kernel(spec, x, y) ==
          doctest::Approx(reference::effective_kernel(spec, x, y)).epsilon(1e-13));
  }
}

TEST_CASE("deeper SE kernels are flatter") {
  const Vec x = vec2(0, 0), y = vec2(2, 0);
  double prev = 0.0;
  for (std::size_t depth = 1; depth <= 4; ++depth) {
    const double k = effective_kernel(KernelSpec::homogeneous(depth), x, y);
    CHECK(k > prev);
    prev = k;
  }
}

TEST_CASE("gram layout and symmetry") {
  Mat rows(3, 2), cols(2, 2);
  rows << 0, 0, 1, 0, 0, 1;
  cols << 0, 0, 1, 1;
  const KernelSpec spec = KernelSpec::homogeneous(2);
  const Mat k = gram(spec, rows, cols);
  REQUIRE(k.rows() == 3);
  REQUIRE(k.cols() == 2);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(0.664567).epsilon(1e-6));
  const Mat kk = gram(spec, rows, rows);
  CHECK((kk - kk.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((kk.diagonal().array() == 1.0).all());
}

TEST_CASE("errors") {
  const KernelSpec spec = KernelSpec::homogeneous(2);
  try {
    effective_kernel(spec, Vec(Vec::Zero(2)), Vec(Vec::Zero(3)));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
  }
  KernelSpec bad = spec;
  bad.layers[1].gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(kernel_family_from_string("LIN") == KernelFamily::LIN);
  CHECK_THROWS_AS(kernel_family_from_string("RBF"), Error);
}
