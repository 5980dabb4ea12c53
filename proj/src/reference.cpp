#include "dgpcg/reference.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "dgpcg/errors.hpp"

namespace dgpcg::reference {

namespace {

double base_value(KernelFamily family, const KernelLayer& p, const Vec& x, const Vec& y) {
  const double b2 = p.beta * p.beta;
  switch (family) {
    case KernelFamily::SE:
      return b2 * std::exp(-(x - y).squaredNorm() / (2.0 * p.gamma * p.gamma));
    case KernelFamily::LIN:
      return b2 * x.dot(y) / static_cast<double>(x.size()) + kLinearBias;
    case KernelFamily::SC:
      return b2 * std::pow(std::cos((x - y).norm() / p.gamma), 2);
  }
  return 0.0;
}

}  // namespace

double effective_kernel(const KernelSpec& spec, const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "reference kernel dims differ");
  const KernelLayer& first = spec.layers[0];
  double kxy = base_value(spec.base_family, first, x, y);
  double kxx = base_value(spec.base_family, first, x, x);
  double kyy = base_value(spec.base_family, first, y, y);
  for (std::size_t l = 1; l < spec.layers.size(); ++l) {
    const KernelLayer& p = spec.layers[l];
    auto step = [&](double diag_mean, double k) {
      return p.beta * p.beta / std::sqrt(1.0 + 2.0 * (diag_mean - k) / (p.gamma * p.gamma));
    };
    const double mean_diag = 0.5 * (kxx + kyy);
    const double next_xy = step(mean_diag, kxy);
    kxx = step(kxx, kxx);
    kyy = step(kyy, kyy);
    kxy = next_xy;
  }
  return kxy;
}

GpPosterior gp_condition(const KernelSpec& spec, const FeatureBank& bank,
                         const std::vector<std::size_t>& neighbor_ids, const Vec& query_s) {
  const auto n = static_cast<Eigen::Index>(neighbor_ids.size());
  std::vector<Vec> pts;
  for (auto id : neighbor_ids) pts.push_back(bank.s.row(static_cast<Eigen::Index>(id)).transpose());
  pts.push_back(query_s);

  // Joint covariance of (y_1..y_N, f_query); observations carry the noise.
  Eigen::MatrixXd c(n + 1, n + 1);
  for (Eigen::Index i = 0; i <= n; ++i)
    for (Eigen::Index j = 0; j <= n; ++j)
      c(i, j) = effective_kernel(spec, pts[static_cast<std::size_t>(i)],
                                 pts[static_cast<std::size_t>(j)]);
  for (Eigen::Index i = 0; i < n; ++i) c(i, i) += spec.noise_var;
  const Eigen::MatrixXd precision = c.fullPivLu().inverse();

  // f | y ~ N(-P_qq^-1 P_qy y, P_qq^-1) for each output dimension.
  const double pqq = precision(n, n);
  Eigen::MatrixXd z(n, bank.z_dim());
  for (Eigen::Index i = 0; i < n; ++i)
    z.row(i) = bank.z.row(static_cast<Eigen::Index>(neighbor_ids[static_cast<std::size_t>(i)]));
  GpPosterior post;
  post.neighbor_ids = neighbor_ids;
  post.pseudo_label = -(precision.row(n).head(n) * z).transpose() / pqq;
  post.variance = 1.0 / pqq + spec.noise_var;
  return post;
}

Vec finite_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double down = f(p);
    p[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double logdet(const Mat& a) {
  const Eigen::MatrixXd sym = 0.5 * (Eigen::MatrixXd(a) + Eigen::MatrixXd(a).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().array().log().sum();
}

}  // namespace dgpcg::reference
