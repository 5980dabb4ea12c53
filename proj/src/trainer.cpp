#include "dgpcg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "dgpcg/errors.hpp"
#include "dgpcg/rng.hpp"

namespace dgpcg {

void TrainConfig::validate() const {
  if (!(lambda_p >= 0.0) || !std::isfinite(lambda_p))
    throw Error(Errc::InvalidConfig, "lambda_p must be finite and >= 0");
  if (n_neighbors == 0) throw Error(Errc::InvalidConfig, "n_neighbors must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(Errc::InvalidConfig, "lr must be >= 0");
  if (lr_halve_every == 0) throw Error(Errc::InvalidConfig, "lr_halve_every must be >= 1");
  if (epochs == 0) throw Error(Errc::InvalidConfig, "epochs must be >= 1");
  if (batch_size == 0) throw Error(Errc::InvalidConfig, "batch_size must be >= 1");
  kernel.validate();
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  return config.lr * std::pow(0.5, static_cast<double>(epoch / config.lr_halve_every));
}

double l1_loss(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw Error(Errc::ShapeMismatch, "l1_loss operand sizes differ");
  return (a - b).cwiseAbs().sum() / static_cast<double>(a.size());
}

namespace {

// d/da of mean |a - b|
Vec l1_grad(const Vec& a, const Vec& b) {
  const double inv = 1.0 / static_cast<double>(a.size());
  return (a - b).unaryExpr([inv](double v) { return v > 0.0 ? inv : (v < 0.0 ? -inv : 0.0); });
}

// mean over tiles of (score - target)^2
double lsq(const std::vector<double>& scores, double target) {
  double acc = 0.0;
  for (double v : scores) acc += (v - target) * (v - target);
  return acc / static_cast<double>(scores.size());
}

// d/dscore of scale * lsq(scores, target)
std::vector<double> lsq_grad(const std::vector<double>& scores, double target, double scale) {
  std::vector<double> g(scores.size());
  const double k = 2.0 * scale / static_cast<double>(scores.size());
  for (std::size_t p = 0; p < scores.size(); ++p) g[p] = k * (scores[p] - target);
  return g;
}

}  // namespace

AdversarialTerms adversarial_losses(const Discriminator& d, const Vec& real, const Vec& fake) {
  const auto dr = d.forward(real).scores;
  const auto df = d.forward(fake).scores;
  return {lsq(df, 1.0), 0.5 * (lsq(dr, 1.0) + lsq(df, 0.0))};
}

double identity_loss(const Generator& fcw, const Generator& fwc, const Vec& iw, const Vec& ic) {
  return l1_loss(fcw.forward(iw).y, iw) + l1_loss(fwc.forward(ic).y, ic);
}

CycleGan CycleGan::create(const TrainConfig& config, int width, int height) {
  GeneratorShape shape = config.generator;
  shape.io_dim = static_cast<Eigen::Index>(width) * height;
  DiscriminatorShape dshape = config.discriminator;
  dshape.width = width;
  dshape.height = height;
  CycleGan m{Generator(shape), Generator(shape), Discriminator(dshape), Discriminator(dshape),
             {}, {}, {}, {}};
  m.g_wc.init(mix_seed(config.seed, 10));
  m.g_cw.init(mix_seed(config.seed, 11));
  m.d_w.net().init_glorot(mix_seed(config.seed, 12));
  m.d_c.net().init_glorot(mix_seed(config.seed, 13));
  for (AdamState* s : {&m.opt_wc, &m.opt_cw, &m.opt_dw, &m.opt_dc}) s->lr = config.lr;
  return m;
}

Checkpoint CycleGan::checkpoint(std::uint64_t step) const {
  return Checkpoint{step, {g_wc, g_cw}, {d_w, d_c}};
}

CycleGan CycleGan::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.generators.size() != 2 || ckpt.discriminators.size() != 2)
    throw Error(Errc::MalformedFile, "a CycleGAN checkpoint holds 2 generators + 2 discriminators");
  CycleGan m{ckpt.generators[0], ckpt.generators[1], ckpt.discriminators[0],
             ckpt.discriminators[1], {}, {}, {}, {}};
  return m;
}

EpochBanks build_epoch_banks(const std::vector<Patch>& weather, const std::vector<Patch>& clean,
                             const CycleGan& model, std::uint64_t epoch) {
  return {bank_build(weather, model.g_wc, Domain::Weather, epoch),
          bank_build(clean, model.g_cw, Domain::Clean, epoch)};
}

EvalResult evaluate(const Generator& g_wc, const std::vector<Patch>& test_weather,
                    const std::vector<Patch>& test_clean) {
  if (test_weather.empty() || test_weather.size() != test_clean.size())
    throw Error(Errc::EmptyDataset, "evaluation needs a non-empty paired test set");
  EvalResult r;
  for (std::size_t i = 0; i < test_weather.size(); ++i) {
    Patch restored = test_weather[i];
    restored.domain = Domain::Clean;
    restored.pixels = g_wc.forward(test_weather[i].pixels).y.cwiseMax(0.0).cwiseMin(1.0);
    r.psnr += psnr(restored, test_clean[i]);
    r.ssim += ssim(restored, test_clean[i]);
  }
  r.psnr /= static_cast<double>(test_weather.size());
  r.ssim /= static_cast<double>(test_weather.size());
  return r;
}

std::string epoch_csv_header() {
  return "epoch,lr,cyc_w,cyc_c,adv_fwd,adv_rev,identity,p_fwd,p_rev,total,disc,mean_sigma2,psnr,"
         "ssim";
}

std::string epoch_csv_row(const EpochStats& s) {
  char buf[512];
  const auto& l = s.losses;
  std::snprintf(buf, sizeof(buf),
                "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6f,%.6f", s.epoch,
                s.lr, l.cyc_w, l.cyc_c, l.adv_fwd, l.adv_rev, l.identity, l.p_fwd, l.p_rev,
                l.total, s.disc_loss, s.mean_sigma2, s.psnr, s.ssim);
  return buf;
}

Trainer::Trainer(TrainConfig config, Dataset data)
    : config_(std::move(config)), data_(std::move(data)) {
  config_.validate();
  if (data_.train_weather.empty() || data_.train_clean.empty())
    throw Error(Errc::EmptyDataset, "both training domains need at least one patch");
  model_ = CycleGan::create(config_, data_.train_weather.front().width,
                            data_.train_weather.front().height);
}

GpPosterior Trainer::posterior(const FeatureBank& bank, const Vec& z, const Vec& s,
                               std::size_t key) {
  if (freeze_) {
    if (const auto it = frozen_.find(key); it != frozen_.end()) return it->second;
  }
  const auto ids = knn_select(bank, z, config_.n_neighbors);
  GpPosterior post = gp_condition(config_.kernel, bank, ids, s);
  if (freeze_) frozen_.emplace(key, post);
  return post;
}

StepStats Trainer::accumulate_sample(const Patch& iw_patch, const Patch& ic_patch,
                                     const EpochBanks& banks, double weight, std::size_t slot) {
  const Vec& iw = iw_patch.pixels;
  const Vec& ic = ic_patch.pixels;
  const double lambda = config_.effective_lambda();
  const bool use_gp = config_.dgp_enabled;
  StepStats st;
  LossBreakdown& L = st.losses;
  Generator& g_wc = model_.g_wc;
  Generator& g_cw = model_.g_cw;

  // Forward cycle: I_w -> (s_w, z_w) -> I~_c -> (s~_c, z~_c) -> I^_w.
  const auto a = g_wc.forward(iw);
  const auto b = g_cw.forward(a.y);
  // Backward cycle: I_c -> (s_c, z_c) -> I~_w -> (s~_w, z~_w) -> I^_c.
  const auto c = g_cw.forward(ic);
  const auto d = g_wc.forward(c.y);

  L.cyc_w = l1_loss(b.y, iw);
  L.cyc_c = l1_loss(d.y, ic);

  Vec grad_zc, grad_sc, grad_zw, grad_sw;
  if (use_gp) {
    // z~_c is supervised by the clean bank, z~_w by the weather bank.
    const auto post_c = posterior(banks.clean, b.z, b.s, 2 * slot);
    L.p_fwd = pseudo_loss(post_c, b.z);
    st.sigma2_fwd = post_c.variance;
    const auto post_w = posterior(banks.weather, d.z, d.s, 2 * slot + 1);
    L.p_rev = pseudo_loss(post_w, d.z);
    st.sigma2_rev = post_w.variance;

    // A zero weight leaves the plain CycleGAN gradients untouched bit for bit.
    const double scale = weight * lambda;
    if (scale != 0.0) {
      grad_zc = scale * pseudo_loss_grad(post_c, b.z);
      grad_zw = scale * pseudo_loss_grad(post_w, d.z);
      if (config_.kernel_grad) {
        grad_sc = scale * pseudo_loss_grad_query_s(config_.kernel, banks.clean,
                                                   post_c.neighbor_ids, b.s, b.z);
        grad_sw = scale * pseudo_loss_grad_query_s(config_.kernel, banks.weather,
                                                   post_w.neighbor_ids, d.s, d.z);
      }
    }
  }

  // Adversarial terms for the generated images.
  const auto dc_fake = model_.d_c.forward(a.y);
  const auto dw_fake = model_.d_w.forward(c.y);
  L.adv_fwd = lsq(dc_fake.scores, 1.0);
  L.adv_rev = lsq(dw_fake.scores, 1.0);

  // Identity terms.
  const auto e = g_cw.forward(iw);
  const auto f = g_wc.forward(ic);
  L.identity = l1_loss(e.y, iw) + l1_loss(f.y, ic);
  L.total = L.assemble(lambda);

  // Generator gradients.
  Vec g_atilde = g_cw.backward(b, weight * l1_grad(b.y, iw), grad_sc, grad_zc);
  g_atilde += model_.d_c.backward(dc_fake, lsq_grad(dc_fake.scores, 1.0, weight), false);
  g_wc.backward(a, g_atilde, {}, {});

  Vec g_ctilde = g_wc.backward(d, weight * l1_grad(d.y, ic), grad_sw, grad_zw);
  g_ctilde += model_.d_w.backward(dw_fake, lsq_grad(dw_fake.scores, 1.0, weight), false);
  g_cw.backward(c, g_ctilde, {}, {});

  g_cw.backward(e, weight * l1_grad(e.y, iw), {}, {});
  g_wc.backward(f, weight * l1_grad(f.y, ic), {}, {});

  // Discriminator objectives on detached fakes.
  const auto dc_real = model_.d_c.forward(ic);
  const auto dw_real = model_.d_w.forward(iw);
  model_.d_c.backward(dc_real, lsq_grad(dc_real.scores, 1.0, 0.5 * weight), true);
  model_.d_c.backward(dc_fake, lsq_grad(dc_fake.scores, 0.0, 0.5 * weight), true);
  model_.d_w.backward(dw_real, lsq_grad(dw_real.scores, 1.0, 0.5 * weight), true);
  model_.d_w.backward(dw_fake, lsq_grad(dw_fake.scores, 0.0, 0.5 * weight), true);
  st.disc_loss = 0.5 * (lsq(dc_real.scores, 1.0) + lsq(dc_fake.scores, 0.0)) +
                 0.5 * (lsq(dw_real.scores, 1.0) + lsq(dw_fake.scores, 0.0));
  return st;
}

StepStats Trainer::compute_gradients(
    const std::vector<std::pair<const Patch*, const Patch*>>& batch, const EpochBanks& banks) {
  if (batch.empty()) throw Error(Errc::EmptyDataset, "empty batch");
  for (Mlp* net : {&model_.g_wc.net(), &model_.g_cw.net(), &model_.d_w.net(), &model_.d_c.net()})
    net->zero_grad();

  const double weight = 1.0 / static_cast<double>(batch.size());
  StepStats mean;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const StepStats s = accumulate_sample(*batch[i].first, *batch[i].second, banks, weight, i);
    auto& m = mean.losses;
    m.cyc_w += weight * s.losses.cyc_w;
    m.cyc_c += weight * s.losses.cyc_c;
    m.adv_fwd += weight * s.losses.adv_fwd;
    m.adv_rev += weight * s.losses.adv_rev;
    m.identity += weight * s.losses.identity;
    m.p_fwd += weight * s.losses.p_fwd;
    m.p_rev += weight * s.losses.p_rev;
    mean.disc_loss += weight * s.disc_loss;
    mean.sigma2_fwd += weight * s.sigma2_fwd;
    mean.sigma2_rev += weight * s.sigma2_rev;
  }
  mean.losses.total = mean.losses.assemble(config_.effective_lambda());
  return mean;
}

StepStats Trainer::train_step(const std::vector<std::pair<const Patch*, const Patch*>>& batch,
                              const EpochBanks& banks) {
  const StepStats mean = compute_gradients(batch, banks);
  adam_step(model_.opt_wc, model_.g_wc.net().params(), model_.g_wc.net().grads());
  adam_step(model_.opt_cw, model_.g_cw.net().params(), model_.g_cw.net().grads());
  adam_step(model_.opt_dw, model_.d_w.net().params(), model_.d_w.net().grads());
  adam_step(model_.opt_dc, model_.d_c.net().params(), model_.d_c.net().grads());
  ++step_;
  return mean;
}

StepStats Trainer::train_step(const Patch& iw, const Patch& ic, const EpochBanks& banks) {
  return train_step({{&iw, &ic}}, banks);
}

EpochStats Trainer::run_epoch() {
  EpochStats es;
  es.epoch = epoch_;
  es.lr = lr_at(epoch_, config_);
  for (AdamState* s : {&model_.opt_wc, &model_.opt_cw, &model_.opt_dw, &model_.opt_dc})
    s->lr = es.lr;

  if (config_.dgp_enabled)
    banks_ = build_epoch_banks(data_.train_weather, data_.train_clean, model_, epoch_);

  // Unpaired sampling: independent shuffles of the two domains.
  std::mt19937_64 rng(mix_seed(config_.seed, 1000 + epoch_));
  std::vector<std::size_t> wi(data_.train_weather.size()), ci(data_.train_clean.size());
  std::iota(wi.begin(), wi.end(), std::size_t{0});
  std::iota(ci.begin(), ci.end(), std::size_t{0});
  std::shuffle(wi.begin(), wi.end(), rng);
  std::shuffle(ci.begin(), ci.end(), rng);

  const std::size_t pairs = std::max(wi.size(), ci.size());
  std::size_t steps = 0;
  for (std::size_t start = 0; start < pairs; start += config_.batch_size) {
    std::vector<std::pair<const Patch*, const Patch*>> batch;
    for (std::size_t k = start; k < std::min(pairs, start + config_.batch_size); ++k)
      batch.emplace_back(&data_.train_weather[wi[k % wi.size()]],
                         &data_.train_clean[ci[k % ci.size()]]);
    const StepStats s = train_step(batch, banks_);
    auto& m = es.losses;
    m.cyc_w += s.losses.cyc_w;
    m.cyc_c += s.losses.cyc_c;
    m.adv_fwd += s.losses.adv_fwd;
    m.adv_rev += s.losses.adv_rev;
    m.identity += s.losses.identity;
    m.p_fwd += s.losses.p_fwd;
    m.p_rev += s.losses.p_rev;
    es.disc_loss += s.disc_loss;
    es.mean_sigma2 += 0.5 * (s.sigma2_fwd + s.sigma2_rev);
    ++steps;
  }
  const double inv = 1.0 / static_cast<double>(steps);
  auto& m = es.losses;
  for (double* v : {&m.cyc_w, &m.cyc_c, &m.adv_fwd, &m.adv_rev, &m.identity, &m.p_fwd, &m.p_rev,
                    &es.disc_loss, &es.mean_sigma2})
    *v *= inv;
  m.total = m.assemble(config_.effective_lambda());

  const EvalResult ev = evaluate_test();
  es.psnr = ev.psnr;
  es.ssim = ev.ssim;
  ++epoch_;
  return es;
}

std::vector<EpochStats> Trainer::run(const std::function<void(const EpochStats&)>& on_epoch) {
  std::vector<EpochStats> out;
  while (epoch_ < config_.epochs) {
    out.push_back(run_epoch());
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

EvalResult Trainer::evaluate_test() const {
  return evaluate(model_.g_wc, data_.test_weather, data_.test_clean);
}

Patch triptych(const Patch& input, const Patch& restored, const Patch& target) {
  Patch out(input.width * 3, input.height, Domain::Clean);
  for (int y = 0; y < input.height; ++y)
    for (int x = 0; x < input.width; ++x) {
      out.at(x, y) = input.at(x, y);
      out.at(x + input.width, y) = std::clamp(restored.at(x, y), 0.0, 1.0);
      out.at(x + 2 * input.width, y) = target.at(x, y);
    }
  return out;
}

}  // namespace dgpcg
