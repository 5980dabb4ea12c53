#pragma once

// CycleGAN training with deep-GP pseudo-label supervision in latent space.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <vector>

#include "dgpcg/gp.hpp"
#include "dgpcg/image.hpp"
#include "dgpcg/kernels.hpp"
#include "dgpcg/nets.hpp"

namespace dgpcg {

struct TrainConfig {
  double lambda_p = 0.03;
  std::size_t n_neighbors = 32;
  double lr = 2e-4;
  std::size_t lr_halve_every = 30;
  std::size_t epochs = 30;
  std::size_t batch_size = 2;
  std::uint64_t seed = 0;
  KernelSpec kernel = KernelSpec::homogeneous(4);
  bool dgp_enabled = true;
  /// Also backpropagate the pseudo loss into s~ through the kernel terms.
  bool kernel_grad = false;
  GeneratorShape generator;
  DiscriminatorShape discriminator;  // width/height are taken from the data

  std::size_t gp_depth() const { return kernel.depth(); }
  /// lambda_p as applied to the loss; zero whenever the GP path is disabled.
  double effective_lambda() const { return dgp_enabled ? lambda_p : 0.0; }
  void validate() const;
};

/// lr * 0.5^floor(epoch / lr_halve_every)
double lr_at(std::size_t epoch, const TrainConfig& config);

struct LossBreakdown {
  double cyc_w = 0.0;
  double cyc_c = 0.0;
  double adv_fwd = 0.0;
  double adv_rev = 0.0;
  double identity = 0.0;
  double p_fwd = 0.0;
  double p_rev = 0.0;
  double total = 0.0;

  /// The generator objective assembled from the components above.
  double assemble(double lambda_p) const {
    return cyc_w + cyc_c + adv_fwd + adv_rev + identity + lambda_p * (p_fwd + p_rev);
  }
};

struct AdversarialTerms {
  double gen_term = 0.0;
  double disc_term = 0.0;
};

/// Least-squares GAN terms averaged over the score grid:
/// gen = mean (D(fake) - 1)^2, disc = [mean (D(real) - 1)^2 + mean D(fake)^2] / 2.
AdversarialTerms adversarial_losses(const Discriminator& d, const Vec& real, const Vec& fake);

/// Mean absolute error.
double l1_loss(const Vec& a, const Vec& b);

/// L1(F_cw(I_w), I_w) + L1(F_wc(I_c), I_c).
double identity_loss(const Generator& fcw, const Generator& fwc, const Vec& iw, const Vec& ic);

/// Both mapping networks, their discriminators and optimizer states.
struct CycleGan {
  Generator g_wc;      // weather -> clean (restoration)
  Generator g_cw;      // clean -> weather
  Discriminator d_w;   // judges weather-domain images
  Discriminator d_c;   // judges clean-domain images
  AdamState opt_wc, opt_cw, opt_dw, opt_dc;

  static CycleGan create(const TrainConfig& config, int width, int height);
  Checkpoint checkpoint(std::uint64_t step) const;
  static CycleGan from_checkpoint(const Checkpoint& ckpt);
};

struct EpochBanks {
  FeatureBank weather;  // (s_w, z_w) from F_wc on the weather set
  FeatureBank clean;    // (s_c, z_c) from F_cw on the clean set
};

EpochBanks build_epoch_banks(const std::vector<Patch>& weather, const std::vector<Patch>& clean,
                             const CycleGan& model, std::uint64_t epoch);

/// Per-step diagnostics beyond the loss breakdown.
struct StepStats {
  LossBreakdown losses;
  double disc_loss = 0.0;
  double sigma2_fwd = 0.0;  // posterior variance against the clean bank
  double sigma2_rev = 0.0;  // posterior variance against the weather bank
};

struct EvalResult {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Restores each test weather patch with F_wc (clamped to [0, 1]) and scores it
/// against its clean target.
EvalResult evaluate(const Generator& g_wc, const std::vector<Patch>& test_weather,
                    const std::vector<Patch>& test_clean);

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossBreakdown losses;  // means over the epoch's samples
  double disc_loss = 0.0;
  double mean_sigma2 = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Column order of metrics.csv.
std::string epoch_csv_header();
std::string epoch_csv_row(const EpochStats& stats);

class Trainer {
 public:
  Trainer(TrainConfig config, Dataset data);

  /// One optimizer step on a batch of (weather, clean) pairs: gradients of
  /// every sample are averaged, then both generators and both discriminators
  /// take one Adam step.
  StepStats train_step(const std::vector<std::pair<const Patch*, const Patch*>>& batch,
                       const EpochBanks& banks);
  StepStats train_step(const Patch& iw, const Patch& ic, const EpochBanks& banks);

  /// Zeroes every gradient buffer and accumulates the batch gradients of
  /// train_step without updating any parameter.
  StepStats compute_gradients(const std::vector<std::pair<const Patch*, const Patch*>>& batch,
                              const EpochBanks& banks);

  /// While enabled, the GP posteriors found by the first call are reused by
  /// later calls with the same batch layout, so pseudo-labels and variances
  /// act as fixed targets. Used by gradient checks.
  void freeze_posteriors(bool on) {
    freeze_ = on;
    frozen_.clear();
  }

  /// Builds the epoch banks from the current weights, then runs every batch.
  EpochStats run_epoch();
  std::vector<EpochStats> run(const std::function<void(const EpochStats&)>& on_epoch = {});

  EvalResult evaluate_test() const;

  const TrainConfig& config() const { return config_; }
  const Dataset& data() const { return data_; }
  CycleGan& model() { return model_; }
  const CycleGan& model() const { return model_; }
  std::size_t epoch() const { return epoch_; }
  std::uint64_t step() const { return step_; }
  /// Banks used by the most recent epoch; empty when the GP path is off.
  const EpochBanks& banks() const { return banks_; }

 private:
  StepStats accumulate_sample(const Patch& iw, const Patch& ic, const EpochBanks& banks,
                              double weight, std::size_t slot);
  GpPosterior posterior(const FeatureBank& bank, const Vec& z, const Vec& s, std::size_t key);

  TrainConfig config_;
  Dataset data_;
  CycleGan model_;
  std::size_t epoch_ = 0;
  std::uint64_t step_ = 0;
  EpochBanks banks_;
  bool freeze_ = false;
  std::map<std::size_t, GpPosterior> frozen_;
};

/// input | restored | target side by side.
Patch triptych(const Patch& input, const Patch& restored, const Patch& target);

}  // namespace dgpcg
