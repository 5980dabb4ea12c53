#include "dgpcg/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "dgpcg/errors.hpp"
#include "dgpcg/gp.hpp"
#include "dgpcg/image.hpp"
#include "dgpcg/kernels.hpp"
#include "dgpcg/nets.hpp"
#include "dgpcg/reference.hpp"
#include "dgpcg/rng.hpp"
#include "dgpcg/tensor.hpp"
#include "dgpcg/trainer.hpp"

namespace dgpcg {

namespace {

using Clock = std::chrono::steady_clock;

Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

double rel_err(const Vec& got, const Vec& want) {
  const double denom = std::max(want.norm(), 1e-300);
  return (got - want).norm() / denom;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

CheckResult make(std::string suite, std::string name, double measured, double threshold,
                 bool passed, Clock::time_point start) {
  CheckResult r;
  r.suite = std::move(suite);
  r.name = std::move(name);
  r.measured = measured;
  r.threshold = threshold;
  r.passed = passed;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

// Runs a check body; an exception becomes a failed row.
CheckResult guarded(const std::string& suite, const std::string& name,
                    const std::function<CheckResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    CheckResult r;
    r.suite = suite;
    r.name = name;
    r.detail = e.what();
    return r;
  }
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dgpcg-verify-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// SC (cos^2) is not positive definite, so GP cases draw from SE and LIN only.
KernelSpec random_kernel(std::mt19937_64& rng, bool positive_definite = false) {
  std::uniform_int_distribution<int> fam(0, positive_definite ? 1 : 2), depth(1, 4);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  KernelSpec spec;
  spec.base_family = static_cast<KernelFamily>(fam(rng));
  spec.layers.resize(static_cast<std::size_t>(depth(rng)));
  for (auto& l : spec.layers) l = {u(rng), u(rng)};
  spec.noise_var = 0.01;
  return spec;
}

// ---- tensor ----

std::vector<CheckResult> tensor_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(mix_seed(seed, 1));
  out.push_back(guarded("tensor", "cholesky reconstruction", [&] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int n = 1; n <= 12; ++n) {
      Mat b(n, n);
      for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = random_vec(rng, 1)[0];
      const Mat a = b * b.transpose() + Mat::Identity(n, n);
      const auto f = cholesky(a);
      worst = std::max(worst, (f.reconstruct() - a).norm() / a.norm());
    }
    return make("tensor", "cholesky reconstruction", worst, 1e-12, worst <= 1e-12, t0);
  }));
  out.push_back(guarded("tensor", "solve and logdet vs eigenvalues", [&] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int n = 1; n <= 10; ++n) {
      Mat b(n, n);
      for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = random_vec(rng, 1)[0];
      const Mat a = b * b.transpose() + 0.5 * Mat::Identity(n, n);
      const auto f = cholesky(a);
      const Vec rhs = random_vec(rng, n);
      const Vec x = solve_posdef(f, rhs);
      worst = std::max(worst, rel_err(Vec(a * x), rhs));
      worst = std::max(worst, rel_err(logdet(f), reference::logdet(a)));
    }
    return make("tensor", "solve and logdet vs eigenvalues", worst, 1e-10, worst <= 1e-10, t0);
  }));
  out.push_back(guarded("tensor", "error codes", [&] {
    const auto t0 = Clock::now();
    int ok = 0;
    Mat asym(2, 2);
    asym << 1, 2, 0, 1;
    try {
      cholesky(asym);
    } catch (const Error& e) {
      ok += e.code() == Errc::NotSymmetric;
    }
    try {
      cholesky(Mat(-Mat::Identity(3, 3)));
    } catch (const Error& e) {
      ok += e.code() == Errc::NotPositiveDefinite;
    }
    Mat singular = Mat::Ones(3, 3);
    ok += cholesky(singular).jitter_used > 0.0;
    return make("tensor", "error codes", ok, 3, ok == 3, t0);
  }));
  return out;
}

// ---- kernel ----

std::vector<CheckResult> kernel_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(guarded("kernel", "depth 1 equals SE", [&] { return checks::kernel_depth_one(seed); }));
  out.push_back(guarded("kernel", "diagonal equals beta_L^2", [&] { return checks::kernel_diagonal(seed); }));
  out.push_back(guarded("kernel", "L=2 closed form", [] { return checks::kernel_two_layer_value(); }));
  out.push_back(guarded("kernel", "SE at squared distance 2", [] {
    const auto t0 = Clock::now();
    Vec x = Vec::Zero(2), y(2);
    y << 1.0, 1.0;
    const double v = effective_kernel(KernelSpec::homogeneous(1), x, y);
    const double err = std::abs(v - std::exp(-1.0));
    return make("kernel", "SE at squared distance 2", err, 1e-15, err <= 1e-15, t0);
  }));
  out.push_back(guarded("kernel", "recursion vs reference", [&] {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(mix_seed(seed, 2));
    double worst = 0.0;
    for (int c = 0; c < 200; ++c) {
      const KernelSpec spec = random_kernel(rng);
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
      const Vec x = random_vec(rng, d), y = random_vec(rng, d);
      worst = std::max(worst, rel_err(effective_kernel(spec, x, y),
                                      reference::effective_kernel(spec, x, y)));
    }
    return make("kernel", "recursion vs reference", worst, 1e-13, worst <= 1e-13, t0);
  }));
  out.push_back(guarded("kernel", "gram symmetry", [&] {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(mix_seed(seed, 3));
    Mat pts(9, 5);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) = random_vec(rng, 5).transpose();
    double worst = 0.0;
    for (int f = 0; f < 3; ++f) {
      const Mat k = gram(KernelSpec::composed(static_cast<KernelFamily>(f), 3), pts, pts);
      worst = std::max(worst, (k - k.transpose()).cwiseAbs().maxCoeff());
    }
    return make("kernel", "gram symmetry", worst, 0.0, worst == 0.0, t0);
  }));
  return out;
}

// ---- gp ----

std::vector<CheckResult> gp_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(guarded("gp", "posterior vs joint Gaussian", [&] {
    return checks::gp_joint_gaussian(100, seed);
  }));
  out.push_back(guarded("gp", "one-point closed form", [] {
    const auto t0 = Clock::now();
    FeatureBank bank;
    bank.s = Mat::Constant(1, 3, 0.4);
    bank.z.resize(1, 2);
    bank.z << 2.0, -1.0;
    const auto post = gp_condition(KernelSpec::homogeneous(4), bank, {0}, Vec::Constant(3, 0.4));
    Vec want(2);
    want << 2.0 / 1.01, -1.0 / 1.01;
    const double err = std::max(rel_err(post.pseudo_label, want), rel_err(post.variance, 0.019901));
    return make("gp", "one-point closed form", err, 1e-5, err <= 1e-5, t0);
  }));
  out.push_back(guarded("gp", "knn ties by index", [] {
    const auto t0 = Clock::now();
    FeatureBank bank;
    bank.s = Mat::Zero(4, 1);
    bank.z.resize(4, 1);
    bank.z << 1.0, -1.0, 1.0, 5.0;
    const auto ids = knn_select(bank, Vec::Zero(1), 3);
    const bool ok = ids == std::vector<std::size_t>{0, 1, 2};
    return make("gp", "knn ties by index", ok, 1, ok, t0);
  }));
  out.push_back(guarded("gp", "bank round trip", [&] {
    const auto t0 = Clock::now();
    TempDir dir;
    std::mt19937_64 rng(mix_seed(seed, 4));
    FeatureBank bank;
    bank.domain = Domain::Weather;
    bank.epoch_stamp = 7;
    bank.s.resize(5, 3);
    bank.z.resize(5, 2);
    for (Eigen::Index i = 0; i < 5; ++i) {
      bank.s.row(i) = random_vec(rng, 3).transpose();
      bank.z.row(i) = random_vec(rng, 2).transpose();
    }
    write_bank(dir.path() / "bank.bin", bank);
    const FeatureBank back = read_bank(dir.path() / "bank.bin");
    const bool ok = back.s == bank.s && back.z == bank.z && back.epoch_stamp == 7 &&
                    back.domain == Domain::Weather;
    return make("gp", "bank round trip", ok, 1, ok, t0);
  }));
  return out;
}

// ---- grad ----

std::vector<CheckResult> grad_suite(std::uint64_t seed, bool flip) {
  std::vector<CheckResult> out;
  out.push_back(guarded("grad", "pseudo_loss_grad vs finite differences", [&] {
    return checks::pseudo_grad(50, seed, flip);
  }));
  out.push_back(guarded("grad", "generator backward vs finite differences", [&] {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(mix_seed(seed, 5));
    GeneratorShape shape;
    shape.io_dim = 9;
    shape.hidden = {7, 5, 4, 6};
    Generator g(shape);
    g.init(mix_seed(seed, 6));
    g.net().params() += random_vec(rng, g.net().params().size(), 0.1);
    const Vec x = random_vec(rng, 9);
    const Vec wy = random_vec(rng, 9), ws = random_vec(rng, g.s_dim()), wz = random_vec(rng, g.z_dim());
    auto objective = [&](const Vec& p) {
      Generator h = g;
      h.net().params() = p;
      const auto f = h.forward(x);
      return wy.dot(f.y) + ws.dot(f.s) + wz.dot(f.z);
    };
    g.net().zero_grad();
    const auto f = g.forward(x);
    g.backward(f, wy, ws, wz);
    const Vec fd = reference::finite_difference(objective, g.net().params(), 1e-6);
    const double err = rel_err(g.net().grads(), fd);
    return make("grad", "generator backward vs finite differences", err, 1e-6, err <= 1e-6, t0);
  }));
  out.push_back(guarded("grad", "discriminator input gradient", [&] {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(mix_seed(seed, 7));
    DiscriminatorShape shape{6, 6, 3, 2, {5, 4}};
    Discriminator d(shape);
    d.net().init_glorot(mix_seed(seed, 8));
    const Vec x = random_vec(rng, 36);
    const Vec w = random_vec(rng, static_cast<Eigen::Index>(d.tile_count()));
    auto objective = [&](const Vec& v) {
      const auto f = d.forward(v);
      double acc = 0.0;
      for (std::size_t p = 0; p < f.scores.size(); ++p) acc += w[static_cast<Eigen::Index>(p)] * f.scores[p];
      return acc;
    };
    const auto f = d.forward(x);
    const Vec gx = d.backward(f, std::vector<double>(w.begin(), w.end()), false);
    const double err = rel_err(gx, reference::finite_difference(objective, x, 1e-6));
    return make("grad", "discriminator input gradient", err, 1e-6, err <= 1e-6, t0);
  }));
  out.push_back(guarded("grad", "effective kernel gradient", [&] {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(mix_seed(seed, 9));
    double worst = 0.0;
    for (int c = 0; c < 30; ++c) {
      const KernelSpec spec = random_kernel(rng);
      const Vec x = random_vec(rng, 4, 0.7), y = random_vec(rng, 4, 0.7);
      auto k = [&](const Vec& v) { return effective_kernel(spec, v, y); };
      worst = std::max(worst, rel_err(effective_kernel_grad_x(spec, x, y),
                                      reference::finite_difference(k, x, 1e-6)));
    }
    return make("grad", "effective kernel gradient", worst, 1e-5, worst <= 1e-5, t0);
  }));
  out.push_back(guarded("grad", "generator objective end to end", [&] {
    return checks::end_to_end_gradient(20, seed);
  }));
  return out;
}

// ---- metrics ----

std::vector<CheckResult> metrics_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(guarded("metrics", "psnr at mse 0.01", [] { return checks::psnr_at_mse(0.01); }));
  out.push_back(guarded("metrics", "psnr edge cases", [] {
    const auto t0 = Clock::now();
    Patch zeros(16, 16), ones(16, 16);
    ones.pixels.setOnes();
    const double a = psnr(zeros, ones), b = psnr(ones, ones);
    const bool ok = std::abs(a) < 1e-12 && b == kPsnrCap;
    return make("metrics", "psnr edge cases", a, 0.0, ok, t0);
  }));
  out.push_back(guarded("metrics", "ssim(a,a) = 1", [&] { return checks::ssim_identity(seed); }));
  out.push_back(guarded("metrics", "ssim constant images", [] { return checks::ssim_constant(); }));
  out.push_back(guarded("metrics", "pgm round trip", [&] {
    const auto t0 = Clock::now();
    TempDir dir;
    const Patch p = make_clean(seed, 1).front();
    write_pgm(dir.path() / "p.pgm", p);
    const Patch q = read_pgm(dir.path() / "p.pgm");
    const double err = (p.pixels - q.pixels).cwiseAbs().maxCoeff();
    return make("metrics", "pgm round trip", err, 1.0 / 255.0, err <= 1.0 / 255.0, t0);
  }));
  return out;
}

}  // namespace

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{"tensor", "kernel", "gp", "grad", "metrics"};
  return names;
}

namespace checks {

CheckResult gp_joint_gaussian(std::size_t cases, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(mix_seed(seed, 20));
  double worst = 0.0;
  for (std::size_t c = 0; c < cases; ++c) {
    const KernelSpec spec = random_kernel(rng, true);
    const auto n = static_cast<std::size_t>(1 + rng() % 16);
    const auto sd = static_cast<Eigen::Index>(1 + rng() % 8);
    const auto zd = static_cast<Eigen::Index>(1 + rng() % 8);
    FeatureBank bank;
    const auto count = static_cast<Eigen::Index>(n + rng() % 8);
    bank.s.resize(count, sd);
    bank.z.resize(count, zd);
    for (Eigen::Index i = 0; i < count; ++i) {
      bank.s.row(i) = random_vec(rng, sd, 0.6).transpose();
      bank.z.row(i) = random_vec(rng, zd).transpose();
    }
    const Vec query_s = random_vec(rng, sd, 0.6);
    const auto ids = knn_select(bank, random_vec(rng, zd), n);
    const auto got = gp_condition(spec, bank, ids, query_s);
    const auto want = reference::gp_condition(spec, bank, ids, query_s);
    worst = std::max({worst, rel_err(got.pseudo_label, want.pseudo_label),
                      rel_err(got.variance, want.variance)});
  }
  auto r = make("gp", "posterior vs joint Gaussian", worst, 1e-8, worst <= 1e-8, t0);
  r.detail = std::to_string(cases) + " cases";
  return r;
}

CheckResult kernel_depth_one(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(mix_seed(seed, 21));
  std::uniform_real_distribution<double> u(0.3, 3.0);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    KernelSpec spec = KernelSpec::homogeneous(1, u(rng), u(rng));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
    const Vec x = random_vec(rng, d), y = random_vec(rng, d);
    const double b = spec.layers[0].beta, g = spec.layers[0].gamma;
    const double se = b * b * std::exp(-(x - y).squaredNorm() / (2.0 * g * g));
    worst = std::max(worst, std::abs(effective_kernel(spec, x, y) - se));
  }
  return make("kernel", "depth 1 equals SE", worst, 1e-15, worst <= 1e-15, t0);
}

CheckResult kernel_diagonal(std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(mix_seed(seed, 22));
  std::uniform_real_distribution<double> u(0.3, 3.0);
  double worst = 0.0;
  for (std::size_t depth = 1; depth <= 4; ++depth)
    for (int f : {0, 2}) {  // stationary bases
      for (int c = 0; c < 25; ++c) {
        KernelSpec spec = KernelSpec::composed(static_cast<KernelFamily>(f), depth);
        for (auto& l : spec.layers) l = {u(rng), u(rng)};
        const Vec x = random_vec(rng, 1 + static_cast<Eigen::Index>(rng() % 8));
        const double b = spec.outer().beta;
        worst = std::max(worst, std::abs(effective_kernel(spec, x, x) - b * b));
      }
    }
  return make("kernel", "diagonal equals beta_L^2", worst, 1e-12, worst <= 1e-12, t0);
}

CheckResult kernel_two_layer_value() {
  const auto t0 = Clock::now();
  Vec x = Vec::Zero(2), y(2);
  y << 1.0, 1.0;
  const double v = effective_kernel(KernelSpec::homogeneous(2), x, y);
  auto r = make("kernel", "L=2 closed form", v, 0.664567, std::abs(v - 0.664567) <= 1e-6, t0);
  return r;
}

CheckResult pseudo_grad(std::size_t cases, std::uint64_t seed, bool flip_sign) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(mix_seed(seed, 23));
  std::uniform_real_distribution<double> var(0.05, 2.0);
  double worst = 0.0;
  for (std::size_t c = 0; c < cases; ++c) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 16);
    GpPosterior post;
    post.pseudo_label = random_vec(rng, d);
    post.variance = var(rng);
    const Vec z = random_vec(rng, d);
    Vec g = pseudo_loss_grad(post, z);
    if (flip_sign) g = -g;
    auto loss = [&](const Vec& v) { return pseudo_loss(post, v); };
    worst = std::max(worst, rel_err(g, reference::finite_difference(loss, z, 1e-5)));
  }
  return make("grad", "pseudo_loss_grad vs finite differences", worst, 1e-6, worst < 1e-6, t0);
}

CheckResult end_to_end_gradient(std::size_t seeds, std::uint64_t seed) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t max_params = 0;
  for (std::size_t k = 0; k < seeds; ++k) {
    const std::uint64_t s = mix_seed(seed, 100 + k);
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> px(0.0, 1.0);
    Dataset data;
    for (int i = 0; i < 6; ++i) {
      Patch w(4, 4, Domain::Weather), c(4, 4, Domain::Clean);
      for (auto& v : w.pixels) v = px(rng);
      for (auto& v : c.pixels) v = px(rng);
      data.train_weather.push_back(w);
      data.train_clean.push_back(c);
    }
    TrainConfig cfg;
    cfg.seed = s;
    cfg.n_neighbors = 4;
    cfg.generator.hidden = {4, 3, 3, 4};
    cfg.discriminator.tile = 4;
    cfg.discriminator.stride = 4;
    cfg.discriminator.hidden = {3};
    Trainer t(cfg, data);
    auto& m = t.model();
    max_params = std::max<std::size_t>(
        max_params, static_cast<std::size_t>(m.g_wc.net().params().size() + m.g_cw.net().params().size() +
                                             m.d_w.net().params().size() + m.d_c.net().params().size()));
    const EpochBanks banks = build_epoch_banks(data.train_weather, data.train_clean, m, 0);
    // Move the generators off their initial point so every loss term is active.
    m.g_wc.net().params() += random_vec(rng, m.g_wc.net().params().size(), 0.05);
    m.g_cw.net().params() += random_vec(rng, m.g_cw.net().params().size(), 0.05);
    const std::vector<std::pair<const Patch*, const Patch*>> batch{
        {&data.train_weather[1], &data.train_clean[4]}, {&data.train_weather[3], &data.train_clean[0]}};

    t.freeze_posteriors(true);
    t.compute_gradients(batch, banks);
    const auto nw = m.g_wc.net().params().size(), nc = m.g_cw.net().params().size();
    Vec analytic(nw + nc);
    analytic << m.g_wc.net().grads(), m.g_cw.net().grads();
    Vec theta(nw + nc);
    theta << m.g_wc.net().params(), m.g_cw.net().params();
    auto objective = [&](const Vec& p) {
      m.g_wc.net().params() = p.head(nw);
      m.g_cw.net().params() = p.tail(nc);
      return t.compute_gradients(batch, banks).losses.total;
    };
    const Vec fd = reference::finite_difference(objective, theta, 1e-6);
    worst = std::max(worst, rel_err(analytic, fd));
  }
  auto r = make("grad", "generator objective end to end", worst, 1e-3,
                worst < 1e-3 && max_params <= 500, t0);
  r.detail = std::to_string(seeds) + " seeds, " + std::to_string(max_params) + " parameters";
  return r;
}

CheckResult psnr_at_mse(double target_mse) {
  const auto t0 = Clock::now();
  Patch a(16, 16), b(16, 16);
  a.pixels.setConstant(0.5);
  b.pixels.setConstant(0.5 + std::sqrt(target_mse));
  const double v = psnr(a, b);
  const double want = 10.0 * std::log10(1.0 / target_mse);
  return make("metrics", "psnr at mse 0.01", v, want, std::abs(v - want) <= 1e-9, t0);
}

CheckResult ssim_identity(std::uint64_t seed) {
  const auto t0 = Clock::now();
  const auto patches = make_clean(seed, 5);
  double worst = 0.0;
  for (const auto& p : patches) worst = std::max(worst, std::abs(ssim(p, p) - 1.0));
  return make("metrics", "ssim(a,a) = 1", worst, 1e-12, worst <= 1e-12, t0);
}

CheckResult ssim_constant() {
  const auto t0 = Clock::now();
  Patch a(16, 16), b(16, 16);
  a.pixels.setConstant(0.2);
  b.pixels.setConstant(0.8);
  const double v = ssim(a, b);
  return make("metrics", "ssim constant images", v, 0.4702, std::abs(v - 0.4702) <= 1e-3, t0);
}

}  // namespace checks

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& options) {
  if (suite == "tensor") return tensor_suite(options.seed);
  if (suite == "kernel") return kernel_suite(options.seed);
  if (suite == "gp") return gp_suite(options.seed);
  if (suite == "grad") return grad_suite(options.seed, options.flip_pseudo_grad);
  if (suite == "metrics") return metrics_suite(options.seed);
  throw Error(Errc::InvalidConfig, "unknown verify suite '" + suite + "'");
}

int run_verify(const VerifyOptions& options, std::ostream& out) {
  const auto& selected = options.suites.empty() ? verify_suites() : options.suites;
  std::vector<std::string> failed;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %-44s %-5s %12s %12s %8s\n", "suite", "check", "ok",
                "measured", "bound", "sec");
  out << line;
  for (const auto& suite : selected) {
    for (const auto& r : run_suite(suite, options)) {
      std::snprintf(line, sizeof(line), "%-8s %-44s %-5s %12.4g %12.4g %8.3f", r.suite.c_str(),
                    r.name.c_str(), r.passed ? "PASS" : "FAIL", r.measured, r.threshold, r.seconds);
      out << line;
      if (!r.detail.empty()) out << "  " << r.detail;
      out << '\n';
      if (!r.passed && std::find(failed.begin(), failed.end(), suite) == failed.end())
        failed.push_back(suite);
    }
  }
  if (failed.empty()) {
    out << "all checks passed\n";
    return 0;
  }
  out << "failing suites:";
  for (const auto& s : failed) out << ' ' << s;
  out << '\n';
  return 1;
}

}  // namespace dgpcg
