#pragma once

// Self-checks behind `dgpcg verify`. Each check compares production code
// against an independent reference, a closed form or a structural identity.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dgpcg {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst error or value seen
  double threshold = 0.0;  // bound the check compares against
  double seconds = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::vector<std::string> suites;  // empty runs all of them
  /// Mutation fixture: negate pseudo_loss_grad inside the gradient suite.
  bool flip_pseudo_grad = false;
  std::uint64_t seed = 0;
};

const std::vector<std::string>& verify_suites();

namespace checks {

/// GP posterior against the dense joint-Gaussian reference on random cases
/// with N <= 16 neighbors and dims <= 8. measured = max relative error.
CheckResult gp_joint_gaussian(std::size_t cases, std::uint64_t seed);

/// measured = max |k_eff - SE| over random pairs at depth 1.
CheckResult kernel_depth_one(std::uint64_t seed);
/// measured = max |k_eff(x,x) - beta_L^2| over L in 1..4.
CheckResult kernel_diagonal(std::uint64_t seed);
/// measured = k_eff at L=2, beta=gamma=1, |x-y|^2=2.
CheckResult kernel_two_layer_value();

/// pseudo_loss_grad against central differences. measured = max relative error.
CheckResult pseudo_grad(std::size_t cases, std::uint64_t seed, bool flip_sign = false);

/// Gradient of the generator objective of a <= 500 parameter CycleGAN with
/// GP supervision against central differences, one model per seed.
/// measured = max relative error over seeds.
CheckResult end_to_end_gradient(std::size_t seeds, std::uint64_t seed);

CheckResult psnr_at_mse(double mse);
CheckResult ssim_identity(std::uint64_t seed);
CheckResult ssim_constant();

}  // namespace checks

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& options);

/// Runs the selected suites, prints one table row per check and returns 0 iff
/// every check passed, 1 otherwise.
int run_verify(const VerifyOptions& options, std::ostream& out);

}  // namespace dgpcg
