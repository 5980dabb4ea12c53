#pragma once

// Latent feature banks and deep-GP pseudo-label supervision.
//
// A bank holds, for every image of one domain, the pair of tap activations
// (s, z) produced by one generator. For a new query pair (s~, z~) the
// nearest bank entries in z-space are selected and the GP with the effective
// deep kernel regresses z on s over those entries; its posterior mean at s~
// is the pseudo-label for z~ and its posterior variance weights the loss.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dgpcg/image.hpp"
#include "dgpcg/kernels.hpp"
#include "dgpcg/nets.hpp"
#include "dgpcg/tensor.hpp"

namespace dgpcg {

/// Epoch snapshot of (s, z) tap pairs; row i of `s` and of `z` come from the
/// same forward pass of image i.
struct FeatureBank {
  Domain domain = Domain::Clean;
  Mat s;
  Mat z;
  std::uint64_t epoch_stamp = 0;

  std::size_t size() const { return static_cast<std::size_t>(s.rows()); }
  bool empty() const { return s.rows() == 0; }
  Eigen::Index s_dim() const { return s.cols(); }
  Eigen::Index z_dim() const { return z.cols(); }
};

/// One forward pass per image, in order.
FeatureBank bank_build(const std::vector<Patch>& images, const Generator& generator,
                       Domain domain, std::uint64_t epoch = 0);

/// Indices of the min(n, |bank|) entries closest to `query_z` in Euclidean
/// distance, nearest first, ties to the lower index.
std::vector<std::size_t> knn_select(const FeatureBank& bank, const Vec& query_z, std::size_t n);

struct GpPosterior {
  Vec pseudo_label;
  double variance = 0.0;
  std::vector<std::size_t> neighbor_ids;
};

/// Posterior of z at `query_s` given the selected bank entries.
GpPosterior gp_condition(const KernelSpec& spec, const FeatureBank& bank,
                         const std::vector<std::size_t>& neighbor_ids, const Vec& query_s);

/// ||z_pred - mu||^2 / var + d log var, the Gaussian NLL with isotropic
/// covariance var * I_d.
double pseudo_loss(const GpPosterior& posterior, const Vec& z_pred);

/// d pseudo_loss / d z_pred with the posterior held fixed.
Vec pseudo_loss_grad(const GpPosterior& posterior, const Vec& z_pred);

/// d pseudo_loss / d query_s through the kernel terms of the posterior, with
/// z_pred and the bank held fixed. Only used when the kernel-gradient toggle
/// of the trainer is on.
Vec pseudo_loss_grad_query_s(const KernelSpec& spec, const FeatureBank& bank,
                             const std::vector<std::size_t>& neighbor_ids, const Vec& query_s,
                             const Vec& z_pred);

/// d k_eff(x, y) / d x.
Vec effective_kernel_grad_x(const KernelSpec& spec, const Vec& x, const Vec& y);

/// Flat binary bank dump (little-endian):
///   char[8] "DGPBANK1"
///   u32     domain (0 clean, 1 weather)
///   u64     epoch_stamp
///   u64     s_dim, u64 z_dim, u64 count
///   count x (f64 s[s_dim], f64 z[z_dim])
void write_bank(const std::filesystem::path& path, const FeatureBank& bank);
FeatureBank read_bank(const std::filesystem::path& path);

}  // namespace dgpcg
