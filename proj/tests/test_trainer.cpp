#include <doctest.h>

#include <cstring>

#include "dgpcg/trainer.hpp"
#include "dgpcg/verify.hpp"

using namespace dgpcg;

namespace {

Dataset small_data(std::uint64_t seed) {
  DatasetSpec spec;
  spec.train_per_domain = 8;
  spec.test_size = 3;
  spec.width = spec.height = 12;
  spec.seed = seed;
  return make_dataset(spec);
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.epochs = 3;
  c.n_neighbors = 4;
  c.generator.hidden = {24, 8, 8, 24};
  c.discriminator.tile = 6;
  c.discriminator.stride = 3;
  c.discriminator.hidden = {8};
  return c;
}

bool same_bits(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

bool same_model(const CycleGan& a, const CycleGan& b) {
  return same_bits(a.g_wc.net().params(), b.g_wc.net().params()) &&
         same_bits(a.g_cw.net().params(), b.g_cw.net().params()) &&
         same_bits(a.d_w.net().params(), b.d_w.net().params()) &&
         same_bits(a.d_c.net().params(), b.d_c.net().params());
}

}  // namespace

TEST_CASE("least-squares adversarial terms") {
  Discriminator d(DiscriminatorShape{4, 4, 4, 4, {2}});
  // zero weights: score = output bias
  auto set_score = [&](double v) { d.net().params().tail(1)[0] = v; };
  set_score(1.0);
  CHECK(adversarial_losses(d, Vec::Zero(16), Vec::Zero(16)).gen_term == 0.0);
  set_score(0.5);
  const auto t = adversarial_losses(d, Vec::Zero(16), Vec::Zero(16));
  CHECK(t.gen_term == doctest::Approx(0.25));
  CHECK(t.disc_term == doctest::Approx(0.25));
}

TEST_CASE("identity loss cases") {
  GeneratorShape s;
  s.io_dim = 9;
  s.hidden = {4, 3, 3, 4};
  s.residual = true;
  Generator a(s), b(s);
  a.init(1);
  b.init(2);
  CHECK(identity_loss(a, b, Vec::Ones(9), Vec::Ones(9)) == 0.0);
  s.residual = false;
  Generator za(s), zb(s);  // all-zero params give all-zero output
  CHECK(identity_loss(za, zb, Vec::Ones(9), Vec::Ones(9)) == doctest::Approx(2.0));
  CHECK(l1_loss(Vec::Zero(4), Vec::Constant(4, -0.5)) == 0.5);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(lr_at(0, c) == 2e-4);
  CHECK(lr_at(29, c) == 2e-4);
  CHECK(lr_at(30, c) == 1e-4);
  CHECK(lr_at(65, c) == 5e-5);
}

TEST_CASE("banks have one entry per image and the epoch stamp") {
  const Dataset data = small_data(1);
  Trainer t(small_config(1), data);
  const auto banks = build_epoch_banks(data.train_weather, data.train_clean, t.model(), 4);
  CHECK(banks.weather.size() == 8);
  CHECK(banks.clean.size() == 8);
  CHECK(banks.clean.epoch_stamp == 4);
  CHECK(banks.weather.domain == Domain::Weather);
  // the weather bank comes from the weather-to-clean generator
  CHECK(banks.weather.s.row(2).transpose() == t.model().g_wc.forward(data.train_weather[2].pixels).s);
  CHECK(banks.clean.z.row(5).transpose() == t.model().g_cw.forward(data.train_clean[5].pixels).z);
}

TEST_CASE("plain step reports unweighted total") {
  const Dataset data = small_data(2);
  TrainConfig c = small_config(2);
  c.dgp_enabled = false;
  Trainer t(c, data);
  const auto st = t.train_step(data.train_weather[0], data.train_clean[0], {});
  const auto& l = st.losses;
  CHECK(l.total == doctest::Approx(l.cyc_w + l.cyc_c + l.adv_fwd + l.adv_rev + l.identity));
  CHECK(l.p_fwd == 0.0);
  CHECK(t.step() == 1);
}

TEST_CASE("same seed gives a bit-identical trajectory") {
  const Dataset data = small_data(3);
  Trainer a(small_config(3), data), b(small_config(3), data);
  const auto ra = a.run(), rb = b.run();
  for (std::size_t e = 0; e < ra.size(); ++e) CHECK(epoch_csv_row(ra[e]) == epoch_csv_row(rb[e]));
  CHECK(same_model(a.model(), b.model()));
}

TEST_CASE("lambda_p = 0 reproduces the plain CycleGAN bit for bit") {
  const Dataset data = small_data(4);
  TrainConfig zero = small_config(4);
  zero.lambda_p = 0.0;
  TrainConfig plain = small_config(4);
  plain.dgp_enabled = false;
  Trainer a(zero, data), b(plain, data);
  for (int e = 0; e < 3; ++e) {
    const auto sa = a.run_epoch(), sb = b.run_epoch();
    CHECK(sa.losses.cyc_w == sb.losses.cyc_w);
    CHECK(sa.losses.adv_fwd == sb.losses.adv_fwd);
    CHECK(sa.losses.total == sb.losses.total);
    CHECK(sa.psnr == sb.psnr);
    CHECK(same_model(a.model(), b.model()));
  }
  CHECK(a.model().g_wc.net().params().size() > 0);
}

TEST_CASE("end-to-end objective gradient on a tiny model") {
  const auto r = checks::end_to_end_gradient(5, 9);
  CHECK(r.passed);
}

TEST_CASE("checkpoint restores the restoration generator") {
  const Dataset data = small_data(5);
  Trainer t(small_config(5), data);
  t.run_epoch();
  const CycleGan back = CycleGan::from_checkpoint(t.model().checkpoint(t.step()));
  const auto a = evaluate(back.g_wc, data.test_weather, data.test_clean);
  const auto b = t.evaluate_test();
  CHECK(a.psnr == b.psnr);
  CHECK(a.ssim == b.ssim);
}

TEST_CASE("csv row has one field per header column") {
  EpochStats s;
  const auto count = [](const std::string& x) { return std::count(x.begin(), x.end(), ','); };
  CHECK(count(epoch_csv_header()) == count(epoch_csv_row(s)));
}

TEST_CASE("triptych layout") {
  Patch a(2, 1), b(2, 1), c(2, 1);
  a.pixels << 0.1, 0.2;
  b.pixels << 1.5, -0.3;
  c.pixels << 0.7, 0.8;
  const Patch t = triptych(a, b, c);
  CHECK(t.width == 6);
  CHECK(t.at(2, 0) == 1.0);
  CHECK(t.at(3, 0) == 0.0);
  CHECK(t.at(5, 0) == 0.8);
}
