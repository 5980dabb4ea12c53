#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "dgpcg/errors.hpp"
#include "dgpcg/gp.hpp"
#include "dgpcg/reference.hpp"
#include "dgpcg/verify.hpp"

using namespace dgpcg;

namespace {

FeatureBank random_bank(std::mt19937_64& rng, Eigen::Index n, Eigen::Index sd, Eigen::Index zd) {
  std::normal_distribution<double> g(0.0, 0.7);
  FeatureBank b;
  b.s.resize(n, sd);
  b.z.resize(n, zd);
  for (Eigen::Index i = 0; i < b.s.size(); ++i) b.s.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < b.z.size(); ++i) b.z.data()[i] = g(rng);
  return b;
}

}  // namespace

TEST_CASE("one-point posterior closed form") {
  FeatureBank bank;
  bank.s = Mat::Constant(1, 2, 0.25);
  bank.z.resize(1, 3);
  bank.z << 1.0, -2.0, 0.5;
  const auto post = gp_condition(KernelSpec::homogeneous(4), bank, {0}, Vec::Constant(2, 0.25));
  CHECK(post.pseudo_label[0] == doctest::Approx(0.990099).epsilon(1e-6));
  CHECK(post.pseudo_label[1] == doctest::Approx(-2.0 / 1.01).epsilon(1e-12));
  CHECK(post.variance == doctest::Approx(0.019901).epsilon(1e-5));
}

TEST_CASE("noiseless query in the bank interpolates") {
  std::mt19937_64 rng(1);
  const FeatureBank bank = random_bank(rng, 6, 3, 2);
  KernelSpec spec = KernelSpec::homogeneous(2);
  spec.noise_var = 0.0;
  const auto post = gp_condition(spec, bank, {0, 1, 2, 3, 4, 5}, bank.s.row(3).transpose());
  CHECK((post.pseudo_label - bank.z.row(3).transpose()).norm() <= 1e-6);
}

TEST_CASE("posterior matches the dense joint Gaussian") {
  std::mt19937_64 rng(2);
  for (int c = 0; c < 40; ++c) {
    const FeatureBank bank = random_bank(rng, 20, 1 + c % 8, 1 + (c * 3) % 8);
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < static_cast<std::size_t>(1 + c % 16); ++i) ids.push_back(i);
    const Vec q = bank.s.row(19).transpose() * 0.5;
    const auto spec = KernelSpec::composed(static_cast<KernelFamily>(c % 2), 1 + c % 4, 1.2, 0.9);
    const auto got = gp_condition(spec, bank, ids, q);
    const auto want = reference::gp_condition(spec, bank, ids, q);
    CHECK((got.pseudo_label - want.pseudo_label).norm() <= 1e-8 * std::max(1e-300, want.pseudo_label.norm()));
    CHECK(got.variance == doctest::Approx(want.variance).epsilon(1e-8));
  }
}

TEST_CASE("variance never exceeds prior plus noise and never drops below noise") {
  std::mt19937_64 rng(3);
  const FeatureBank bank = random_bank(rng, 30, 4, 2);
  const KernelSpec spec = KernelSpec::homogeneous(3);
  for (int i = 0; i < 20; ++i) {
    const Vec q = bank.s.row(i).transpose() + Vec::Constant(4, 0.1 * i);
    const auto ids = knn_select(bank, bank.z.row(i).transpose(), 8);
    const auto post = gp_condition(spec, bank, ids, q);
    CHECK(post.variance >= spec.noise_var);
    CHECK(post.variance <= 1.0 + spec.noise_var + 1e-12);
  }
}

TEST_CASE("knn_select ordering, ties and truncation") {
  FeatureBank bank;
  bank.s = Mat::Zero(5, 1);
  bank.z.resize(5, 1);
  bank.z << 3.0, -1.0, 1.0, 0.5, 1.0;
  CHECK(knn_select(bank, Vec::Zero(1), 3) == std::vector<std::size_t>{3, 1, 2});
  CHECK(knn_select(bank, Vec::Zero(1), 50).size() == 5);
  FeatureBank empty;
  try {
    knn_select(empty, Vec::Zero(1), 3);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyBank);
  }
}

TEST_CASE("pseudo loss values") {
  GpPosterior post;
  post.pseudo_label = Vec::Zero(2);
  post.variance = 0.5;
  Vec z(2);
  z << 1.0, 1.0;
  CHECK(pseudo_loss(post, z) == doctest::Approx(4.0 + 2.0 * std::log(0.5)));
  CHECK(pseudo_loss(post, z) == doctest::Approx(2.613706).epsilon(1e-6));
  post.variance = 1.0;
  CHECK(pseudo_loss(post, z) == 2.0);
  CHECK(pseudo_loss(post, post.pseudo_label) == 0.0);
  CHECK_THROWS_AS(pseudo_loss(post, Vec(Vec::Zero(3))), Error);
}

TEST_CASE("pseudo loss gradient check") {
  const auto r = checks::pseudo_grad(50, 11);
  CHECK(r.passed);
  CHECK(r.measured < 1e-6);
  CHECK_FALSE(checks::pseudo_grad(5, 11, true).passed);
}

TEST_CASE("query-s gradient of the pseudo loss") {
  std::mt19937_64 rng(4);
  const FeatureBank bank = random_bank(rng, 12, 3, 2);
  const auto spec = KernelSpec::homogeneous(3);
  const std::vector<std::size_t> ids{0, 2, 4, 6, 8};
  const Vec s = bank.s.row(1).transpose();
  const Vec z = bank.z.row(1).transpose();
  auto loss = [&](const Vec& q) { return pseudo_loss(gp_condition(spec, bank, ids, q), z); };
  const Vec analytic = pseudo_loss_grad_query_s(spec, bank, ids, s, z);
  const Vec fd = reference::finite_difference(loss, s, 1e-6);
  CHECK((analytic - fd).norm() <= 1e-5 * fd.norm());
}

TEST_CASE("bank file round trip and corruption") {
  std::mt19937_64 rng(5);
  FeatureBank bank = random_bank(rng, 4, 3, 2);
  bank.domain = Domain::Clean;
  bank.epoch_stamp = 12;
  const auto dir = std::filesystem::temp_directory_path() / "dgpcg-test-bank";
  std::filesystem::create_directories(dir);
  write_bank(dir / "b.bin", bank);
  const auto back = read_bank(dir / "b.bin");
  CHECK(back.s == bank.s);
  CHECK(back.z == bank.z);
  CHECK(back.epoch_stamp == 12);
  std::filesystem::resize_file(dir / "b.bin", std::filesystem::file_size(dir / "b.bin") - 8);
  try {
    read_bank(dir / "b.bin");
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedFile);
  }
  std::filesystem::remove_all(dir);
}
