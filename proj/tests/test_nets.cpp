#include <doctest.h>

#include <filesystem>
#include <random>

#include "dgpcg/errors.hpp"
#include "dgpcg/nets.hpp"
#include "dgpcg/reference.hpp"

using namespace dgpcg;

namespace {

Vec random_vec(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

GeneratorShape small_shape(bool residual) {
  GeneratorShape s;
  s.io_dim = 10;
  s.hidden = {8, 6, 5, 7};
  s.residual = residual;
  return s;
}

}  // namespace

TEST_CASE("mlp forward by hand") {
  Mlp net({2, 2, 1}, 0.2);
  // W1 = [[1, -1], [2, 0]], b1 = [0, -1], W2 = [1, 1], b2 = [0.5]
  net.params() << 1, -1, 2, 0, 0, -1, 1, 1, 0.5;
  Mlp::Cache cache;
  Vec x(2);
  x << 1.0, 2.0;
  // pre1 = [-1, 1] -> act [-0.2, 1]; out = 0.8 + 0.5
  CHECK(net.forward(x, cache)[0] == doctest::Approx(1.3));
}

TEST_CASE("generator taps and residual path") {
  Generator g(small_shape(true));
  g.init(3);
  std::mt19937_64 rng(1);
  const Vec x = random_vec(rng, 10);
  const auto f = g.forward(x);
  CHECK(f.s.size() == 6);
  CHECK(f.z.size() == 5);
  CHECK(f.y == x);  // zero output stage at init
  Generator plain(small_shape(false));
  plain.init(3);
  CHECK(plain.forward(x).y != x);
}

TEST_CASE("generator gradients from all three ports") {
  std::mt19937_64 rng(2);
  for (bool residual : {false, true}) {
    Generator g(small_shape(residual));
    g.init(5);
    g.net().params() += 0.1 * random_vec(rng, g.net().params().size());
    const Vec x = random_vec(rng, 10), wy = random_vec(rng, 10), ws = random_vec(rng, 6),
              wz = random_vec(rng, 5);
    g.net().zero_grad();
    const auto f = g.forward(x);
    const Vec gx = g.backward(f, wy, ws, wz);
    auto obj_p = [&](const Vec& p) {
      Generator h = g;
      h.net().params() = p;
      const auto o = h.forward(x);
      return wy.dot(o.y) + ws.dot(o.s) + wz.dot(o.z);
    };
    auto obj_x = [&](const Vec& v) {
      const auto o = g.forward(v);
      return wy.dot(o.y) + ws.dot(o.s) + wz.dot(o.z);
    };
    const Vec fdp = reference::finite_difference(obj_p, g.net().params(), 1e-6);
    const Vec fdx = reference::finite_difference(obj_x, x, 1e-6);
    CHECK((g.net().grads() - fdp).norm() <= 1e-6 * fdp.norm());
    CHECK((gx - fdx).norm() <= 1e-6 * fdx.norm());
  }
}

TEST_CASE("backward without accumulation leaves grads alone") {
  Generator g(small_shape(false));
  g.init(1);
  g.net().zero_grad();
  const auto f = g.forward(Vec::Ones(10));
  g.backward(f, Vec::Ones(10), {}, {}, false);
  CHECK(g.net().grads().isZero());
}

TEST_CASE("cache from a different network is rejected") {
  Generator a(small_shape(false)), b(small_shape(false));
  a.init(1);
  b.init(2);
  const auto f = a.forward(Vec::Ones(10));
  try {
    b.backward(f, Vec::Ones(10), {}, {});
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CacheMismatch);
  }
  CHECK_THROWS_AS(a.forward(Vec::Ones(3)), Error);
}

TEST_CASE("tap indices are validated") {
  GeneratorShape s = small_shape(false);
  s.tap_s = 3;
  s.tap_z = 3;
  CHECK_THROWS_AS(Generator{s}, Error);
}

TEST_CASE("discriminator tile grid and zero case") {
  Discriminator d(DiscriminatorShape{8, 8, 4, 2, {6}});
  CHECK(d.tile_count() == 9);
  const auto f = d.forward(Vec::Zero(64));
  for (double s : f.scores) CHECK(s == 0.0);  // zero params, zero input
  Discriminator whole(DiscriminatorShape{8, 8, 8, 8, {6}});
  CHECK(whole.tile_count() == 1);
}

TEST_CASE("discriminator gradients") {
  std::mt19937_64 rng(3);
  Discriminator d(DiscriminatorShape{6, 5, 3, 2, {4, 3}});
  d.net().init_glorot(4);
  const Vec x = random_vec(rng, 30);
  const Vec w = random_vec(rng, static_cast<Eigen::Index>(d.tile_count()));
  const std::vector<double> gw(w.begin(), w.end());
  auto obj = [&](const Discriminator& dd, const Vec& v) {
    const auto f = dd.forward(v);
    double acc = 0.0;
    for (std::size_t p = 0; p < f.scores.size(); ++p) acc += w[static_cast<Eigen::Index>(p)] * f.scores[p];
    return acc;
  };
  d.net().zero_grad();
  const Vec gx = d.backward(d.forward(x), gw, true);
  const Vec fdx = reference::finite_difference([&](const Vec& v) { return obj(d, v); }, x, 1e-6);
  const Vec fdp = reference::finite_difference(
      [&](const Vec& p) {
        Discriminator e = d;
        e.net().params() = p;
        return obj(e, x);
      },
      d.net().params(), 1e-6);
  CHECK((gx - fdx).norm() <= 1e-6 * fdx.norm());
  CHECK((d.net().grads() - fdp).norm() <= 1e-6 * fdp.norm());
}

TEST_CASE("adam first step moves each parameter by lr against its gradient sign") {
  AdamState st;
  st.lr = 0.1;
  Vec p = Vec::Zero(3), g(3);
  g << 2.0, -0.5, 0.0;
  adam_step(st, p, g);
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(p[2] == 0.0);
  CHECK(st.t == 1);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Checkpoint ck;
  ck.step = 42;
  ck.generators.emplace_back(small_shape(true));
  ck.generators.back().init(7);
  ck.discriminators.emplace_back(DiscriminatorShape{10, 1, 1, 1, {3}});
  ck.discriminators.back().net().init_glorot(8);
  const auto path = std::filesystem::temp_directory_path() / "dgpcg-test-ckpt.bin";
  write_checkpoint(path, ck);
  const Checkpoint back = read_checkpoint(path);
  CHECK(back.step == 42);
  REQUIRE(back.generators.size() == 1);
  REQUIRE(back.discriminators.size() == 1);
  CHECK(back.generators[0].net().params() == ck.generators[0].net().params());
  CHECK(back.generators[0].shape().residual);
  CHECK(back.discriminators[0].net().params() == ck.discriminators[0].net().params());
  CHECK(back.discriminators[0].shape().tile == 1);
  std::filesystem::resize_file(path, 20);
  CHECK_THROWS_AS(read_checkpoint(path), Error);
  std::filesystem::remove(path);
}
