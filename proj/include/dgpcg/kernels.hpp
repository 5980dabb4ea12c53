#pragma once

// Base covariance functions and the effective kernel of an L-layer deep GP.
//
// The hidden layers of the deep GP are never sampled. Each extra layer with a
// squared-exponential covariance is folded into the kernel analytically:
//
//   k_eff^(l)(x, y) = beta_l^2 / sqrt(1 + 2 gamma_l^-2 [m^(l-1)(x, y) - k_eff^(l-1)(x, y)])
//
// where m^(l-1)(x, y) = (k_eff^(l-1)(x, x) + k_eff^(l-1)(y, y)) / 2. For a
// stationary first layer (SE, SC) m^(l-1) is exactly beta_(l-1)^2.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "dgpcg/errors.hpp"
#include "dgpcg/tensor.hpp"

namespace dgpcg {

enum class KernelFamily { SE, LIN, SC };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Bias added to the linear kernel so that it is strictly positive definite.
inline constexpr double kLinearBias = 1e-6;

struct KernelLayer {
  double beta = 1.0;   // signal magnitude
  double gamma = 1.0;  // length scale
};

/// Deep-GP kernel configuration. `base_family` is the covariance of the first
/// layer; every further layer composes with the SE form, so SE[LIN] is
/// {base_family = LIN, depth 2}.
struct KernelSpec {
  KernelFamily base_family = KernelFamily::SE;
  std::vector<KernelLayer> layers{4};
  double noise_var = 0.01;
  double prior_mean = 0.0;

  std::size_t depth() const { return layers.size(); }
  const KernelLayer& outer() const { return layers.back(); }

  /// Throws InvalidConfig unless every invariant of the configuration holds.
  void validate() const;

  static KernelSpec homogeneous(std::size_t depth, double beta = 1.0, double gamma = 1.0,
                                double noise_var = 0.01);
  static KernelSpec composed(KernelFamily base, std::size_t depth, double beta = 1.0,
                             double gamma = 1.0, double noise_var = 0.01);
};

namespace detail {

template <typename DX, typename DY>
void require_same_dim(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  if (x.size() != y.size() || x.size() == 0) {
    std::ostringstream msg;
    msg << "kernel arguments have dims " << x.size() << " and " << y.size();
    throw Error(Errc::DimensionMismatch, msg.str());
  }
}

template <typename DX, typename DY>
double squared_distance(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x(i)) - static_cast<double>(y(i));
    acc += d * d;
  }
  return acc;
}

template <typename DX, typename DY>
double first_layer(KernelFamily family, const KernelLayer& p, const Eigen::MatrixBase<DX>& x,
                   const Eigen::MatrixBase<DY>& y) {
  const double b2 = p.beta * p.beta;
  switch (family) {
    case KernelFamily::SE:
      return b2 * std::exp(-squared_distance(x, y) / (2.0 * p.gamma * p.gamma));
    case KernelFamily::LIN: {
      double dot = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        dot += static_cast<double>(x(i)) * static_cast<double>(y(i));
      return b2 * dot / static_cast<double>(x.size()) + kLinearBias;
    }
    case KernelFamily::SC: {
      const double c = std::cos(std::sqrt(squared_distance(x, y)) / p.gamma);
      return b2 * c * c;
    }
  }
  return 0.0;
}

inline double compose_se(const KernelLayer& p, double half_diag_sum, double k_prev) {
  const double radicand = 1.0 + 2.0 * (half_diag_sum - k_prev) / (p.gamma * p.gamma);
  if (!(radicand > 0.0) || !std::isfinite(radicand)) {
    std::ostringstream msg;
    msg << "effective-kernel radicand " << radicand << " is not positive";
    throw Error(Errc::NonFiniteRecursion, msg.str());
  }
  return p.beta * p.beta / std::sqrt(radicand);
}

}  // namespace detail

/// Covariance of a single layer. Layer 0 uses `spec.base_family`, deeper
/// layers are SE.
template <typename DX, typename DY>
double base_kernel(const KernelSpec& spec, std::size_t layer, const Eigen::MatrixBase<DX>& x,
                   const Eigen::MatrixBase<DY>& y) {
  detail::require_same_dim(x, y);
  if (layer >= spec.depth()) throw Error(Errc::DimensionMismatch, "kernel layer out of range");
  const KernelFamily family = layer == 0 ? spec.base_family : KernelFamily::SE;
  return detail::first_layer(family, spec.layers[layer], x, y);
}

template <typename DX, typename DY>
double effective_kernel(const KernelSpec& spec, const Eigen::MatrixBase<DX>& x,
                        const Eigen::MatrixBase<DY>& y) {
  detail::require_same_dim(x, y);
  const KernelLayer& first = spec.layers.front();
  double kxy = detail::first_layer(spec.base_family, first, x, y);
  if (spec.depth() == 1) return kxy;

  // Stationary first layers have a constant diagonal; only LIN needs it tracked.
  double kxx, kyy;
  if (spec.base_family == KernelFamily::LIN) {
    kxx = detail::first_layer(spec.base_family, first, x, x);
    kyy = detail::first_layer(spec.base_family, first, y, y);
  } else {
    kxx = kyy = first.beta * first.beta;
  }
  for (std::size_t l = 1; l < spec.depth(); ++l) {
    const KernelLayer& p = spec.layers[l];
    kxy = detail::compose_se(p, 0.5 * (kxx + kyy), kxy);
    kxx = kyy = p.beta * p.beta;
  }
  return kxy;
}

/// Kernel matrix with one input vector per row of `rows` and of `cols`.
template <typename DR, typename DC>
Mat gram(const KernelSpec& spec, const Eigen::MatrixBase<DR>& rows,
         const Eigen::MatrixBase<DC>& cols) {
  if (rows.cols() != cols.cols()) {
    std::ostringstream msg;
    msg << "gram inputs have dims " << rows.cols() << " and " << cols.cols();
    throw Error(Errc::DimensionMismatch, msg.str());
  }
  Mat out(rows.rows(), cols.rows());
  bool same = false;
  if constexpr (std::is_same_v<DR, DC>) same = &rows.derived() == &cols.derived();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Eigen::Index j0 = same ? i : 0;
    for (Eigen::Index j = j0; j < cols.rows(); ++j) {
      out(i, j) = effective_kernel(spec, rows.row(i), cols.row(j));
      if (same) out(j, i) = out(i, j);
    }
  }
  return out;
}

}  // namespace dgpcg
