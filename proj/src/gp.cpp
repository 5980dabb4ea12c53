#include "dgpcg/gp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dgpcg/errors.hpp"

namespace dgpcg {

FeatureBank bank_build(const std::vector<Patch>& images, const Generator& generator,
                       Domain domain, std::uint64_t epoch) {
  if (images.empty()) throw Error(Errc::EmptyDataset, "cannot build a bank from zero images");
  FeatureBank bank;
  bank.domain = domain;
  bank.epoch_stamp = epoch;
  bank.s.resize(static_cast<Eigen::Index>(images.size()), generator.s_dim());
  bank.z.resize(static_cast<Eigen::Index>(images.size()), generator.z_dim());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto f = generator.forward(images[i].pixels);
    bank.s.row(static_cast<Eigen::Index>(i)) = f.s.transpose();
    bank.z.row(static_cast<Eigen::Index>(i)) = f.z.transpose();
  }
  return bank;
}

std::vector<std::size_t> knn_select(const FeatureBank& bank, const Vec& query_z, std::size_t n) {
  if (bank.empty()) throw Error(Errc::EmptyBank, "knn_select on an empty bank");
  if (n == 0) throw Error(Errc::DimensionMismatch, "knn_select needs n >= 1");
  if (query_z.size() != bank.z_dim())
    throw Error(Errc::DimensionMismatch, "query z-dim does not match the bank");

  const std::size_t count = bank.size();
  std::vector<double> dist(count);
  for (std::size_t i = 0; i < count; ++i)
    dist[i] = (bank.z.row(static_cast<Eigen::Index>(i)).transpose() - query_z).squaredNorm();
  std::vector<std::size_t> ids(count);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  const std::size_t k = std::min(n, count);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  ids.resize(k);
  return ids;
}

namespace {

struct Conditioning {
  Mat neighbors_s;
  Mat neighbors_z;
  CholFactor<double> factor;
  Vec cross;  // k(query, neighbors)
  double prior_var = 0.0;
};

Conditioning condition(const KernelSpec& spec, const FeatureBank& bank,
                       const std::vector<std::size_t>& ids, const Vec& query_s) {
  if (ids.empty()) throw Error(Errc::EmptyBank, "gp_condition needs at least one neighbor");
  if (query_s.size() != bank.s_dim())
    throw Error(Errc::DimensionMismatch, "query s-dim does not match the bank");
  Conditioning c;
  const auto n = static_cast<Eigen::Index>(ids.size());
  c.neighbors_s.resize(n, bank.s_dim());
  c.neighbors_z.resize(n, bank.z_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ids[i] >= bank.size()) throw Error(Errc::DimensionMismatch, "neighbor id out of range");
    c.neighbors_s.row(i) = bank.s.row(static_cast<Eigen::Index>(ids[i]));
    c.neighbors_z.row(i) = bank.z.row(static_cast<Eigen::Index>(ids[i]));
  }
  Mat k = gram(spec, c.neighbors_s, c.neighbors_s);
  k.diagonal().array() += spec.noise_var;
  c.factor = cholesky(k);
  c.cross = gram(spec, query_s.transpose(), c.neighbors_s).row(0).transpose();
  c.prior_var = effective_kernel(spec, query_s, query_s);
  return c;
}

void require_loss_args(const GpPosterior& posterior, const Vec& z_pred) {
  if (z_pred.size() != posterior.pseudo_label.size())
    throw Error(Errc::DimensionMismatch, "z_pred and pseudo-label dims differ");
  if (!(posterior.variance > 0.0)) throw Error(Errc::DimensionMismatch, "posterior variance <= 0");
}

}  // namespace

GpPosterior gp_condition(const KernelSpec& spec, const FeatureBank& bank,
                         const std::vector<std::size_t>& neighbor_ids, const Vec& query_s) {
  const Conditioning c = condition(spec, bank, neighbor_ids, query_s);
  GpPosterior post;
  post.neighbor_ids = neighbor_ids;
  const Vec weights = solve_posdef(c.factor, c.cross);  // (K + s2 I)^-1 k
  post.pseudo_label = c.neighbors_z.transpose() * weights;
  // The explained part never exceeds the prior; clamp rounding below zero.
  const double reduction = c.cross.dot(weights);
  post.variance = std::max(c.prior_var - reduction, 0.0) + spec.noise_var;
  return post;
}

double pseudo_loss(const GpPosterior& posterior, const Vec& z_pred) {
  require_loss_args(posterior, z_pred);
  const double d = static_cast<double>(z_pred.size());
  return (z_pred - posterior.pseudo_label).squaredNorm() / posterior.variance +
         d * std::log(posterior.variance);
}

Vec pseudo_loss_grad(const GpPosterior& posterior, const Vec& z_pred) {
  require_loss_args(posterior, z_pred);
  return 2.0 * (z_pred - posterior.pseudo_label) / posterior.variance;
}

Vec effective_kernel_grad_x(const KernelSpec& spec, const Vec& x, const Vec& y) {
  detail::require_same_dim(x, y);
  const KernelLayer& first = spec.layers.front();
  const double b2 = first.beta * first.beta;
  const Vec diff = x - y;
  const double dim = static_cast<double>(x.size());

  double k = detail::first_layer(spec.base_family, first, x, y);
  Vec dk(x.size());
  Vec dm = Vec::Zero(x.size());  // d/dx of (k(x,x) + k(y,y)) / 2
  double m = b2;
  switch (spec.base_family) {
    case KernelFamily::SE:
      dk = -k * diff / (first.gamma * first.gamma);
      break;
    case KernelFamily::SC: {
      const double r = diff.norm();
      if (r == 0.0) {
        dk.setZero();
      } else {
        dk = (-b2 * std::sin(2.0 * r / first.gamma) / first.gamma / r) * diff;
      }
      break;
    }
    case KernelFamily::LIN:
      dk = b2 * y / dim;
      dm = b2 * x / dim;
      m = 0.5 * (detail::first_layer(spec.base_family, first, x, x) +
                 detail::first_layer(spec.base_family, first, y, y));
      break;
  }
  for (std::size_t l = 1; l < spec.depth(); ++l) {
    const KernelLayer& p = spec.layers[l];
    const double g2 = p.gamma * p.gamma;
    const double radicand = 1.0 + 2.0 * (m - k) / g2;
    const double next = detail::compose_se(p, m, k);
    // d next / d (m - k) = -beta^2 radicand^-3/2 / gamma^2
    const double slope = p.beta * p.beta * std::pow(radicand, -1.5) / g2;
    dk = slope * (dk - dm);
    dm.setZero();
    k = next;
    m = p.beta * p.beta;
  }
  return dk;
}

Vec pseudo_loss_grad_query_s(const KernelSpec& spec, const FeatureBank& bank,
                             const std::vector<std::size_t>& neighbor_ids, const Vec& query_s,
                             const Vec& z_pred) {
  const Conditioning c = condition(spec, bank, neighbor_ids, query_s);
  const Vec weights = solve_posdef(c.factor, c.cross);
  const Vec mean = c.neighbors_z.transpose() * weights;
  const double raw_var = c.prior_var - c.cross.dot(weights);
  const double var = std::max(raw_var, 0.0) + spec.noise_var;
  const Vec delta = z_pred - mean;
  const double d = static_cast<double>(z_pred.size());

  // L = |delta|^2 / var + d log var, with mean = Z^T W k and var = kqq - k^T W k + s2.
  const Vec dl_dmean = -2.0 * delta / var;
  const double dl_dvar = -delta.squaredNorm() / (var * var) + d / var;
  const Mat alpha = solve_posdef(c.factor, Mat(c.neighbors_z));  // W Z
  Vec dl_dk = alpha * dl_dmean;
  if (raw_var > 0.0) dl_dk += dl_dvar * (-2.0 * weights);

  Vec grad = Vec::Zero(query_s.size());
  for (Eigen::Index i = 0; i < c.neighbors_s.rows(); ++i)
    grad += dl_dk[i] * effective_kernel_grad_x(spec, query_s, c.neighbors_s.row(i).transpose());
  // k(s~, s~) is constant for stationary bases; LIN adds its own slope.
  if (spec.base_family == KernelFamily::LIN && raw_var > 0.0)
    grad += dl_dvar * effective_kernel_grad_x(spec, query_s, query_s) * 2.0;
  return grad;
}

namespace {

constexpr char kBankMagic[8] = {'D', 'G', 'P', 'B', 'A', 'N', 'K', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw Error(Errc::MalformedFile, "bank file truncated");
  return v;
}

}  // namespace

void write_bank(const std::filesystem::path& path, const FeatureBank& bank) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  os.write(kBankMagic, 8);
  put<std::uint32_t>(os, bank.domain == Domain::Clean ? 0 : 1);
  put<std::uint64_t>(os, bank.epoch_stamp);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(bank.s_dim()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(bank.z_dim()));
  put<std::uint64_t>(os, bank.size());
  for (Eigen::Index i = 0; i < bank.s.rows(); ++i) {
    os.write(reinterpret_cast<const char*>(bank.s.row(i).data()),
             static_cast<std::streamsize>(bank.s_dim() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(bank.z.row(i).data()),
             static_cast<std::streamsize>(bank.z_dim() * sizeof(double)));
  }
  if (!os) throw Error(Errc::IoError, "write failed for " + path.string());
}

FeatureBank read_bank(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::IoError, "cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kBankMagic, 8) != 0)
    throw Error(Errc::MalformedFile, "bad bank magic in " + path.string());
  FeatureBank bank;
  const auto domain = get<std::uint32_t>(is);
  if (domain > 1) throw Error(Errc::MalformedFile, "bad bank domain tag");
  bank.domain = domain == 0 ? Domain::Clean : Domain::Weather;
  bank.epoch_stamp = get<std::uint64_t>(is);
  const auto s_dim = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  const auto z_dim = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  const auto count = static_cast<Eigen::Index>(get<std::uint64_t>(is));
  if (s_dim <= 0 || z_dim <= 0 || count < 0 || s_dim > (1 << 20) || z_dim > (1 << 20))
    throw Error(Errc::MalformedFile, "implausible bank header");
  bank.s.resize(count, s_dim);
  bank.z.resize(count, z_dim);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!is.read(reinterpret_cast<char*>(bank.s.row(i).data()),
                 static_cast<std::streamsize>(s_dim * sizeof(double))) ||
        !is.read(reinterpret_cast<char*>(bank.z.row(i).data()),
                 static_cast<std::streamsize>(z_dim * sizeof(double))))
      throw Error(Errc::MalformedFile, "bank file truncated");
  }
  return bank;
}

}  // namespace dgpcg
