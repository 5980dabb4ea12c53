#pragma once

// Run configuration for the command-line tool: one flat JSON object whose
// keys are listed by config_keys(). Command-line flags of the form
// `--key value` override file values.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dgpcg/image.hpp"
#include "dgpcg/trainer.hpp"

namespace dgpcg {

struct RunConfig {
  TrainConfig train;
  DatasetSpec data;

  // The kernel is described by scalars and expanded into train.kernel by finalize().
  KernelFamily kernel_base = KernelFamily::SE;
  std::size_t gp_depth = 4;
  double kernel_beta = 1.0;
  double kernel_gamma = 1.0;
  double noise_var = 0.01;

  std::filesystem::path output_dir = "runs/desk";
  std::size_t sample_every = 5;      // epochs between sample triptychs
  std::size_t samples_per_eval = 4;
  std::size_t checkpoint_every = 10;
  bool dump_banks = false;

  std::vector<std::size_t> ablate_depths{1, 2, 3, 4};
  std::vector<std::size_t> ablate_neighbors{16, 32, 64};
  std::vector<double> ablate_lambdas{0.3, 0.03, 0.003};
  std::size_t jobs = 1;

  std::optional<std::uint64_t> seed;  // unset: DGP_SEED, then 0

  /// Resolves the seed, copies it into train/data and rebuilds train.kernel.
  void finalize();
};

/// Every accepted key, in the order written by to_json().
const std::vector<std::string>& config_keys();

/// Parses a config file. Every key except `seed` must be present; unknown
/// keys and ill-typed values throw InvalidConfig naming the key.
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `--key value` override. Lists are comma separated, flags take
/// on/off/true/false/1/0.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

/// Flat JSON text holding every key; load_config() reads it back unchanged.
std::string to_json(const RunConfig& config);

/// Seed precedence: explicit value, then the DGP_SEED environment variable, then 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& explicit_seed);

}  // namespace dgpcg
