#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dgpcg/errors.hpp"
#include "dgpcg/image.hpp"

using namespace dgpcg;

TEST_CASE("clean patches are deterministic and in range") {
  const auto a = make_clean(5, 20), b = make_clean(5, 20);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pixels == b[i].pixels);
    CHECK(a[i].pixels.minCoeff() >= 0.0);
    CHECK(a[i].pixels.maxCoeff() <= 1.0);
  }
  CHECK(make_clean(6, 1)[0].pixels != a[0].pixels);
}

TEST_CASE("degradation is additive, non-negative and deterministic") {
  const Patch p = make_clean(1, 1)[0];
  DegradeSpec spec;
  spec.seed = 3;
  spec.streak_amplitude = 0.0;
  CHECK(degrade(p, spec).pixels == p.pixels);
  spec.streak_amplitude = 0.4;
  const Vec field = streak_field(p.width, p.height, spec);
  CHECK(field.minCoeff() >= 0.0);
  CHECK(field.maxCoeff() > 0.0);
  const Patch w = degrade(p, spec);
  CHECK(w.pixels == degrade(p, spec).pixels);
  for (Eigen::Index i = 0; i < p.pixels.size(); ++i) {
    if (p.pixels[i] + field[i] < 1.0) CHECK(w.pixels[i] == p.pixels[i] + field[i]);
  }
}

TEST_CASE("dataset sizes and the unpaired protocol") {
  DatasetSpec spec;
  spec.train_per_domain = 30;
  spec.test_size = 7;
  const Dataset d = make_dataset(spec);
  CHECK(d.train_weather.size() == 30);
  CHECK(d.train_clean.size() == 30);
  CHECK(d.test_clean.size() == 7);
  CHECK(d.test_weather.size() == 7);
  CHECK(d.train_weather[0].domain == Domain::Weather);
  // no clean training patch is the source of a weather patch
  for (const auto& c : d.train_clean)
    for (const auto& w : d.train_weather) CHECK_FALSE((w.pixels - c.pixels).minCoeff() >= 0.0);
}

TEST_CASE("psnr") {
  Patch a(16, 16), b(16, 16);
  a.pixels.setConstant(0.3);
  b.pixels.setConstant(0.4);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK(psnr(a, a) == 99.0);
  Patch zeros(4, 4), ones(4, 4);
  ones.pixels.setOnes();
  CHECK(psnr(zeros, ones) == 0.0);
  CHECK_THROWS_AS(psnr(a, zeros), Error);
}

TEST_CASE("psnr falls as noise grows") {
  const Patch p = make_clean(2, 1)[0];
  double prev = 1e9;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Patch q = p;
    for (Eigen::Index i = 0; i < q.pixels.size(); ++i) q.pixels[i] += amp * ((i * 7919) % 13 - 6) / 6.0;
    const double v = psnr(p, q);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim") {
  const auto ps = make_clean(4, 3);
  CHECK(ssim(ps[0], ps[0]) == 1.0);
  CHECK(ssim(ps[0], ps[1]) == doctest::Approx(ssim(ps[1], ps[0])).epsilon(1e-14));
  CHECK(ssim(ps[0], ps[1]) <= 1.0);
  CHECK(ssim(ps[0], ps[1]) >= -1.0);
  Patch a(11, 11), b(11, 11);
  a.pixels.setConstant(0.2);
  b.pixels.setConstant(0.8);
  CHECK(ssim(a, b) == doctest::Approx((2 * 0.16 + 1e-4) / (0.04 + 0.64 + 1e-4)).epsilon(1e-12));
  CHECK(std::abs(ssim(a, b) - 0.4702) <= 1e-3);
  Patch tiny(10, 10);
  try {
    ssim(tiny, tiny);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooSmall);
  }
}

TEST_CASE("pgm files") {
  const auto dir = std::filesystem::temp_directory_path() / "dgpcg-test-pgm";
  std::filesystem::create_directories(dir);
  const Patch p = make_clean(3, 1)[0];
  write_pgm(dir / "a.pgm", p);
  std::ifstream is(dir / "a.pgm", std::ios::binary);
  std::string header(13, '\0');
  is.read(header.data(), 13);
  CHECK(header == "P5 32 32 255\n");
  const Patch q = read_pgm(dir / "a.pgm");
  CHECK((p.pixels - q.pixels).cwiseAbs().maxCoeff() <= 1.0 / 255.0);
  std::filesystem::resize_file(dir / "a.pgm", 100);
  try {
    read_pgm(dir / "a.pgm");
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedFile);
  }
  CHECK_THROWS_AS(read_pgm(dir / "missing.pgm"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest round trip") {
  const auto path = std::filesystem::temp_directory_path() / "dgpcg-test-manifest.txt";
  write_manifest(path, {{"a.pgm", Domain::Clean}, {"dir/b.pgm", Domain::Weather}});
  const auto back = read_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].path == "dir/b.pgm");
  CHECK(back[1].domain == Domain::Weather);
  std::filesystem::remove(path);
}
