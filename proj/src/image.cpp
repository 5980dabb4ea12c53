#include "dgpcg/image.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dgpcg/errors.hpp"
#include "dgpcg/rng.hpp"

namespace dgpcg {

std::string_view to_string(Domain d) { return d == Domain::Clean ? "clean" : "weather"; }

Domain domain_from_string(std::string_view name) {
  if (name == "clean") return Domain::Clean;
  if (name == "weather") return Domain::Weather;
  throw Error(Errc::InvalidConfig, "unknown domain '" + std::string(name) + "'");
}

std::vector<Patch> make_clean(std::uint64_t seed, std::size_t n, int width, int height) {
  std::vector<Patch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    std::uniform_int_distribution<int> count_dist(3, 6);
    std::uniform_real_distribution<double> cx_dist(-0.2 * width, 1.2 * width);
    std::uniform_real_distribution<double> cy_dist(-0.2 * height, 1.2 * height);
    std::uniform_real_distribution<double> sigma_dist(3.0, 10.0);
    std::uniform_real_distribution<double> weight_dist(-1.0, 1.0);

    Patch p(width, height, Domain::Clean);
    const int bumps = count_dist(rng);
    for (int k = 0; k < bumps; ++k) {
      const double cx = cx_dist(rng), cy = cy_dist(rng);
      const double sigma = sigma_dist(rng), weight = weight_dist(rng);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double dx = x - cx, dy = y - cy;
          p.at(x, y) += weight * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    }
    const double lo = p.pixels.minCoeff(), hi = p.pixels.maxCoeff();
    if (hi - lo > 1e-12) {
      p.pixels = (p.pixels.array() - lo) / (hi - lo);
    } else {
      p.pixels.setConstant(0.5);
    }
    out.push_back(std::move(p));
  }
  return out;
}

Vec streak_field(int width, int height, const DegradeSpec& spec) {
  Vec field = Vec::Zero(static_cast<Eigen::Index>(width) * height);
  if (spec.streak_amplitude == 0.0 || spec.streak_count <= 0) return field;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> cx_dist(0.0, width);
  std::uniform_real_distribution<double> cy_dist(0.0, height);
  const double ux = std::cos(spec.streak_angle), uy = std::sin(spec.streak_angle);
  const double half = 0.5 * spec.streak_length;
  const double inv2s2 = 1.0 / (2.0 * spec.streak_width * spec.streak_width);
  for (int k = 0; k < spec.streak_count; ++k) {
    const double cx = cx_dist(rng), cy = cy_dist(rng);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double along = dx * ux + dy * uy;
        if (std::abs(along) > half) continue;
        const double across = -dx * uy + dy * ux;
        field[static_cast<Eigen::Index>(y) * width + x] +=
            spec.streak_amplitude * std::exp(-across * across * inv2s2);
      }
  }
  return field;
}

Patch degrade(const Patch& p, const DegradeSpec& spec) {
  Patch out = p;
  out.domain = Domain::Weather;
  if (spec.streak_amplitude == 0.0) return out;
  out.pixels = (p.pixels + streak_field(p.width, p.height, spec)).cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

namespace {

void require_same_shape(const Patch& a, const Patch& b) {
  if (a.width != b.width || a.height != b.height || a.pixels.size() != b.pixels.size()) {
    std::ostringstream msg;
    msg << a.width << "x" << a.height << " vs " << b.width << "x" << b.height;
    throw Error(Errc::ShapeMismatch, msg.str());
  }
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::array<double, kSsimWindow * kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow * kSsimWindow> w{};
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int y = 0; y < kSsimWindow; ++y)
    for (int x = 0; x < kSsimWindow; ++x) {
      const double dx = x - r, dy = y - r;
      w[y * kSsimWindow + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
      sum += w[y * kSsimWindow + x];
    }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

double mse(const Patch& a, const Patch& b) {
  require_same_shape(a, b);
  return (a.pixels - b.pixels).squaredNorm() / static_cast<double>(a.pixels.size());
}

double psnr(const Patch& a, const Patch& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / e));
}

double ssim(const Patch& a, const Patch& b) {
  require_same_shape(a, b);
  if (a.width < kSsimWindow || a.height < kSsimWindow)
    throw Error(Errc::TooSmall, "ssim needs at least 11x11 pixels");
  static const auto window = gaussian_window();

  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + kSsimWindow <= a.height; ++y0)
    for (int x0 = 0; x0 + kSsimWindow <= a.width; ++x0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int y = 0; y < kSsimWindow; ++y)
        for (int x = 0; x < kSsimWindow; ++x) {
          const double w = window[y * kSsimWindow + x];
          const double va = a.at(x0 + x, y0 + y), vb = b.at(x0 + x, y0 + y);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2)) /
               ((ma * ma + mb * mb + kSsimC1) * (var_a + var_b + kSsimC2));
      ++count;
    }
  return total / count;
}

void write_pgm(const std::filesystem::path& path, const Patch& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  os << "P5 " << p.width << ' ' << p.height << " 255\n";
  std::vector<unsigned char> bytes(p.pixels.size());
  for (Eigen::Index i = 0; i < p.pixels.size(); ++i)
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(p.pixels[i], 0.0, 1.0) * 255.0));
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(Errc::IoError, "write failed for " + path.string());
}

namespace {

// Reads one header integer, skipping whitespace and '#' comments.
int read_header_int(std::istream& is) {
  int c;
  while ((c = is.peek()) != EOF) {
    if (std::isspace(c)) {
      is.get();
    } else if (c == '#') {
      std::string skip;
      std::getline(is, skip);
    } else {
      break;
    }
  }
  int value = 0, digits = 0;
  while ((c = is.peek()) != EOF && std::isdigit(c)) {
    value = value * 10 + (is.get() - '0');
    if (++digits > 9) throw Error(Errc::MalformedFile, "header value too large");
  }
  if (digits == 0) throw Error(Errc::MalformedFile, "expected a number in PGM header");
  return value;
}

}  // namespace

Patch read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::IoError, "cannot open " + path.string());
  char magic[2];
  if (!is.read(magic, 2) || magic[0] != 'P' || magic[1] != '5')
    throw Error(Errc::MalformedFile, path.string() + " is not a binary PGM");
  const int width = read_header_int(is);
  const int height = read_header_int(is);
  const int maxval = read_header_int(is);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw Error(Errc::MalformedFile, "unsupported PGM geometry or maxval");
  if (!std::isspace(is.get())) throw Error(Errc::MalformedFile, "missing separator after maxval");

  Patch p(width, height, Domain::Clean);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height);
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw Error(Errc::MalformedFile, path.string() + " is truncated");
  for (std::size_t i = 0; i < bytes.size(); ++i)
    p.pixels[static_cast<Eigen::Index>(i)] = static_cast<double>(bytes[i]) / maxval;
  return p;
}

Dataset make_dataset(const DatasetSpec& spec) {
  if (spec.train_per_domain == 0) throw Error(Errc::EmptyDataset, "train_per_domain must be > 0");
  // Independent streams: 1 clean train, 2 weather sources, 3 test, 4/5 streaks.
  Dataset ds;
  ds.train_clean = make_clean(mix_seed(spec.seed, 1), spec.train_per_domain, spec.width, spec.height);
  const auto sources =
      make_clean(mix_seed(spec.seed, 2), spec.train_per_domain, spec.width, spec.height);
  ds.test_clean = make_clean(mix_seed(spec.seed, 3), spec.test_size, spec.width, spec.height);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    DegradeSpec d = spec.degrade;
    d.seed = mix_seed(mix_seed(spec.seed, 4), i);
    ds.train_weather.push_back(degrade(sources[i], d));
  }
  for (std::size_t i = 0; i < ds.test_clean.size(); ++i) {
    DegradeSpec d = spec.degrade;
    d.seed = mix_seed(mix_seed(spec.seed, 5), i);
    ds.test_weather.push_back(degrade(ds.test_clean[i], d));
  }
  return ds;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  for (const auto& e : entries) os << e.path.string() << ' ' << to_string(e.domain) << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto sep = line.find_last_of(' ');
    if (sep == std::string::npos || sep == 0)
      throw Error(Errc::MalformedFile, "manifest line without domain tag: " + line);
    out.push_back({line.substr(0, sep), domain_from_string(line.substr(sep + 1))});
  }
  return out;
}

}  // namespace dgpcg
