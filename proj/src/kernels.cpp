#include "dgpcg/kernels.hpp"

#include <cmath>

namespace dgpcg {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::SE: return "SE";
    case KernelFamily::LIN: return "LIN";
    case KernelFamily::SC: return "SC";
  }
  return "SE";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "SE") return KernelFamily::SE;
  if (name == "LIN") return KernelFamily::LIN;
  if (name == "SC") return KernelFamily::SC;
  throw Error(Errc::InvalidConfig, "unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (layers.empty()) throw Error(Errc::InvalidConfig, "kernel depth must be at least 1");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    if (!(p.beta > 0.0) || !(p.gamma > 0.0) || !std::isfinite(p.beta) || !std::isfinite(p.gamma))
      throw Error(Errc::InvalidConfig,
                  "kernel layer " + std::to_string(l) + " needs finite beta, gamma > 0");
  }
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var))
    throw Error(Errc::InvalidConfig, "noise variance must be finite and >= 0");
  if (prior_mean != 0.0) throw Error(Errc::InvalidConfig, "only a zero prior mean is supported");
}

KernelSpec KernelSpec::homogeneous(std::size_t depth, double beta, double gamma, double noise_var) {
  return composed(KernelFamily::SE, depth, beta, gamma, noise_var);
}

KernelSpec KernelSpec::composed(KernelFamily base, std::size_t depth, double beta, double gamma,
                                double noise_var) {
  KernelSpec spec;
  spec.base_family = base;
  spec.layers.assign(depth, KernelLayer{beta, gamma});
  spec.noise_var = noise_var;
  spec.validate();
  return spec;
}

}  // namespace dgpcg
