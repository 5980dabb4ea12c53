#pragma once

// Synthetic unpaired rain-streak data, full-reference quality metrics and
// 8-bit PGM file I/O.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgpcg/tensor.hpp"

namespace dgpcg {

enum class Domain { Clean, Weather };

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view name);

/// Single-channel image, row-major pixels in [0, 1].
struct Patch {
  int width = 0;
  int height = 0;
  Vec pixels;
  Domain domain = Domain::Clean;

  Patch() = default;
  Patch(int w, int h, Domain tag = Domain::Clean)
      : width(w), height(h), pixels(Vec::Zero(static_cast<Eigen::Index>(w) * h)), domain(tag) {}

  double& at(int x, int y) { return pixels[static_cast<Eigen::Index>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<Eigen::Index>(y) * width + x]; }
};

/// Additive rain-streak degradation.
struct DegradeSpec {
  int streak_count = 8;
  double streak_amplitude = 0.5;
  double streak_angle = 1.25;  // radians from the x axis
  double streak_width = 0.8;   // Gaussian cross-section sigma in pixels
  int streak_length = 14;      // pixels
  std::uint64_t seed = 0;
};

/// Smooth clean patches: 3-6 random Gaussian bumps, min-max normalized.
std::vector<Patch> make_clean(std::uint64_t seed, std::size_t n, int width = 32, int height = 32);

/// The non-negative streak layer that `degrade` adds before clamping.
Vec streak_field(int width, int height, const DegradeSpec& spec);

/// clamp(p + streak_field, 0, 1), tagged as weather.
Patch degrade(const Patch& p, const DegradeSpec& spec);

/// Returned by psnr() for identical inputs.
inline constexpr double kPsnrCap = 99.0;

double mse(const Patch& a, const Patch& b);
double psnr(const Patch& a, const Patch& b);

/// Mean local SSIM over valid 11x11 Gaussian windows (sigma 1.5) on range-1 data.
double ssim(const Patch& a, const Patch& b);

void write_pgm(const std::filesystem::path& path, const Patch& p);
Patch read_pgm(const std::filesystem::path& path);

/// Unpaired training sets plus a paired held-out test set.
struct DatasetSpec {
  std::size_t train_per_domain = 200;
  std::size_t test_size = 50;
  int width = 32;
  int height = 32;
  DegradeSpec degrade;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Patch> train_weather;
  std::vector<Patch> train_clean;
  std::vector<Patch> test_clean;    // test_clean[i] is the target of test_weather[i]
  std::vector<Patch> test_weather;
};

/// Clean training images, the clean sources of the weather training images and
/// the test images come from disjoint seed streams, so no weather training
/// patch has its clean counterpart in the training data.
Dataset make_dataset(const DatasetSpec& spec);

struct ManifestEntry {
  std::filesystem::path path;
  Domain domain;
};

/// Plain text index, one "<path> <clean|weather>" line per file.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace dgpcg
