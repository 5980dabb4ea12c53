#pragma once

// Small fully-connected generators and discriminators with hand-written
// reverse-mode gradients, plus the Adam optimizer that trains them.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dgpcg/tensor.hpp"

namespace dgpcg {

/// Stack of affine stages. Hidden stages apply a leaky rectifier, the last
/// stage is linear. Parameters live in one flat vector laid out stage by
/// stage as W (out x in, row-major) followed by b (out).
class Mlp {
 public:
  struct Cache {
    const Mlp* owner = nullptr;
    std::vector<Vec> inputs;  // inputs[l] feeds stage l; inputs[0] is the network input
    std::vector<Vec> pre;     // pre-activation of stage l
  };

  Mlp() = default;
  explicit Mlp(std::vector<Eigen::Index> widths, double leak = 0.2);

  std::size_t num_stages() const { return widths_.size() - 1; }
  const std::vector<Eigen::Index>& widths() const { return widths_; }
  Eigen::Index input_dim() const { return widths_.front(); }
  Eigen::Index output_dim() const { return widths_.back(); }
  double leak() const { return leak_; }

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  Vec& grads() { return grads_; }
  const Vec& grads() const { return grads_; }
  void zero_grad() { grads_.setZero(); }

  /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  void init_glorot(std::uint64_t seed);
  /// Zeroes the weights and bias of stage `l`.
  void zero_stage(std::size_t l);

  Vec forward(const Vec& x, Cache& cache) const;

  /// Backpropagates `grad_out`. `injected[l]`, when non-empty, is added to
  /// the gradient of inputs[l] (the activation leaving stage l-1). Parameter
  /// gradients are added to grads() only when `accumulate` is set. Returns
  /// the gradient with respect to the network input.
  Vec backward(const Cache& cache, const Vec& grad_out, const std::vector<Vec>& injected,
               bool accumulate);

 private:
  std::vector<Eigen::Index> widths_;
  std::vector<Eigen::Index> offsets_;
  double leak_ = 0.2;
  Vec params_;
  Vec grads_;
};

struct GeneratorShape {
  Eigen::Index io_dim = 1024;
  std::vector<Eigen::Index> hidden{128, 32, 32, 128};
  std::size_t tap_s = 2;  // taps count completed stages
  std::size_t tap_z = 3;
  bool residual = false;  // output = input + stack(input)
};

/// Image-to-image mapping with two exported latent taps s and z.
class Generator {
 public:
  struct Forward {
    Vec y;
    Vec s;
    Vec z;
    Mlp::Cache cache;
  };

  Generator() = default;
  explicit Generator(const GeneratorShape& shape, double leak = 0.2);

  const GeneratorShape& shape() const { return shape_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  Eigen::Index s_dim() const { return net_.widths()[shape_.tap_s]; }
  Eigen::Index z_dim() const { return net_.widths()[shape_.tap_z]; }

  /// Glorot init; a residual generator also gets a zero output stage so it
  /// starts as the identity map.
  void init(std::uint64_t seed);

  Forward forward(const Vec& x) const;

  /// Accumulates parameter gradients from the output and both taps. Empty
  /// vectors stand for zero upstream gradients. Returns dL/dx.
  Vec backward(const Forward& fwd, const Vec& grad_y, const Vec& grad_s, const Vec& grad_z,
               bool accumulate = true);

 private:
  GeneratorShape shape_;
  Mlp net_;
};

struct DiscriminatorShape {
  int width = 32;
  int height = 32;
  int tile = 8;     // side of the square tile scored by the shared stack
  int stride = 4;
  std::vector<Eigen::Index> hidden{64, 16};
};

/// Patch discriminator: one shared stack scores every tile of the image,
/// giving a grid of realness scores. A tile equal to the full image yields a
/// single score.
class Discriminator {
 public:
  struct Forward {
    std::vector<double> scores;
    std::vector<Mlp::Cache> caches;
  };

  Discriminator() = default;
  explicit Discriminator(const DiscriminatorShape& shape, double leak = 0.2);

  const DiscriminatorShape& shape() const { return shape_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  std::size_t tile_count() const { return origins_.size(); }

  Forward forward(const Vec& x) const;
  /// `grad_scores[p]` is dL/d(score of tile p). Returns dL/dx.
  Vec backward(const Forward& fwd, const std::vector<double>& grad_scores, bool accumulate = true);

 private:
  DiscriminatorShape shape_;
  std::vector<std::pair<int, int>> origins_;
  Mlp net_;
};

struct AdamState {
  Vec m;
  Vec v;
  std::int64_t t = 0;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Eigen::Ref<Vec> params, const Vec& grads);

/// Binary checkpoint of a set of networks. Layout (little-endian):
///   char[8]  "DGPCKPT1"
///   u64      step
///   u32      network count
///   per network:
///     u32 kind (0 generator, 1 discriminator)
///     u32 width count n, u64 widths[n]
///     generator:     u64 tap_s, u64 tap_z, u32 residual
///     discriminator: u32 width, u32 height, u32 tile, u32 stride
///     f64 leak
///     u64 parameter count p, f64 params[p]
struct Checkpoint {
  std::uint64_t step = 0;
  std::vector<Generator> generators;
  std::vector<Discriminator> discriminators;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace dgpcg
