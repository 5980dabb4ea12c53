#include "dgpcg/nets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "dgpcg/errors.hpp"

namespace dgpcg {

namespace {

using ConstMatMap = Eigen::Map<const Mat>;
using MatMap = Eigen::Map<Mat>;

void require_dim(const Vec& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    std::ostringstream msg;
    msg << what << " has size " << v.size() << ", expected " << expected;
    throw Error(Errc::ShapeMismatch, msg.str());
  }
}

}  // namespace

Mlp::Mlp(std::vector<Eigen::Index> widths, double leak) : widths_(std::move(widths)), leak_(leak) {
  if (widths_.size() < 2) throw Error(Errc::ShapeMismatch, "an MLP needs at least one stage");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] <= 0 || widths_[l + 1] <= 0)
      throw Error(Errc::ShapeMismatch, "layer widths must be positive");
    offsets_.push_back(total);
    total += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
  offsets_.push_back(total);
  params_ = Vec::Zero(total);
  grads_ = Vec::Zero(total);
}

void Mlp::init_glorot(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < num_stages(); ++l) {
    const Eigen::Index in = widths_[l], out = widths_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* w = params_.data() + offsets_[l];
    for (Eigen::Index i = 0; i < in * out; ++i) w[i] = dist(rng);
    std::fill(w + in * out, w + in * out + out, 0.0);
  }
}

void Mlp::zero_stage(std::size_t l) {
  if (l >= num_stages()) throw Error(Errc::ShapeMismatch, "stage index out of range");
  std::fill(params_.data() + offsets_[l], params_.data() + offsets_[l + 1], 0.0);
}

Vec Mlp::forward(const Vec& x, Cache& cache) const {
  require_dim(x, input_dim(), "network input");
  const std::size_t n = num_stages();
  cache.owner = this;
  cache.inputs.resize(n);
  cache.pre.resize(n);
  Vec h = x;
  for (std::size_t l = 0; l < n; ++l) {
    const Eigen::Index in = widths_[l], out = widths_[l + 1];
    ConstMatMap w(params_.data() + offsets_[l], out, in);
    Eigen::Map<const Vec> b(params_.data() + offsets_[l] + out * in, out);
    cache.inputs[l] = h;
    cache.pre[l].noalias() = w * h;
    cache.pre[l] += b;
    if (l + 1 < n) {
      h = cache.pre[l].unaryExpr([this](double v) { return v > 0.0 ? v : leak_ * v; });
    } else {
      h = cache.pre[l];
    }
  }
  return h;
}

Vec Mlp::backward(const Cache& cache, const Vec& grad_out, const std::vector<Vec>& injected,
                  bool accumulate) {
  const std::size_t n = num_stages();
  if (cache.owner != this || cache.inputs.size() != n || cache.pre.size() != n)
    throw Error(Errc::CacheMismatch, "cache was not produced by this network");
  require_dim(grad_out, output_dim(), "output gradient");

  Vec g = grad_out;
  for (std::size_t l = n; l-- > 0;) {
    const Eigen::Index in = widths_[l], out = widths_[l + 1];
    if (l + 1 < n) {
      const Vec& pre = cache.pre[l];
      for (Eigen::Index i = 0; i < out; ++i)
        if (!(pre[i] > 0.0)) g[i] *= leak_;
    }
    if (accumulate) {
      MatMap gw(grads_.data() + offsets_[l], out, in);
      Eigen::Map<Vec> gb(grads_.data() + offsets_[l] + out * in, out);
      gw.noalias() += g * cache.inputs[l].transpose();
      gb += g;
    }
    ConstMatMap w(params_.data() + offsets_[l], out, in);
    Vec gin = w.transpose() * g;
    if (l < injected.size() && injected[l].size() != 0) {
      require_dim(injected[l], in, "injected tap gradient");
      gin += injected[l];
    }
    g = std::move(gin);
  }
  return g;
}

Generator::Generator(const GeneratorShape& shape, double leak) : shape_(shape) {
  std::vector<Eigen::Index> widths;
  widths.push_back(shape.io_dim);
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(shape.io_dim);
  const std::size_t stages = widths.size() - 1;
  if (!(shape.tap_s >= 1 && shape.tap_s < shape.tap_z && shape.tap_z < stages))
    throw Error(Errc::ShapeMismatch, "taps must satisfy 1 <= tap_s < tap_z < stage count");
  net_ = Mlp(std::move(widths), leak);
}

void Generator::init(std::uint64_t seed) {
  net_.init_glorot(seed);
  if (shape_.residual) net_.zero_stage(net_.num_stages() - 1);
}

Generator::Forward Generator::forward(const Vec& x) const {
  Forward f;
  f.y = net_.forward(x, f.cache);
  if (shape_.residual) f.y += x;
  // inputs[t] is the activation after t stages, so s is always produced first.
  f.s = f.cache.inputs[shape_.tap_s];
  f.z = f.cache.inputs[shape_.tap_z];
  return f;
}

Vec Generator::backward(const Forward& fwd, const Vec& grad_y, const Vec& grad_s,
                        const Vec& grad_z, bool accumulate) {
  std::vector<Vec> injected(net_.num_stages());
  injected[shape_.tap_s] = grad_s;
  injected[shape_.tap_z] = grad_z;
  const Vec gy = grad_y.size() == 0 ? Vec::Zero(net_.output_dim()) : grad_y;
  Vec gx = net_.backward(fwd.cache, gy, injected, accumulate);
  if (shape_.residual) gx += gy;
  return gx;
}

Discriminator::Discriminator(const DiscriminatorShape& shape, double leak) : shape_(shape) {
  if (shape.tile <= 0 || shape.stride <= 0 || shape.tile > shape.width || shape.tile > shape.height)
    throw Error(Errc::ShapeMismatch, "discriminator tile must fit inside the image");
  for (int y = 0; y + shape.tile <= shape.height; y += shape.stride)
    for (int x = 0; x + shape.tile <= shape.width; x += shape.stride) origins_.emplace_back(x, y);
  std::vector<Eigen::Index> widths;
  widths.push_back(static_cast<Eigen::Index>(shape.tile) * shape.tile);
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(1);
  net_ = Mlp(std::move(widths), leak);
}

Discriminator::Forward Discriminator::forward(const Vec& x) const {
  require_dim(x, static_cast<Eigen::Index>(shape_.width) * shape_.height, "discriminator input");
  const int t = shape_.tile;
  Forward f;
  f.scores.resize(origins_.size());
  f.caches.resize(origins_.size());
  Vec tile(static_cast<Eigen::Index>(t) * t);
  for (std::size_t p = 0; p < origins_.size(); ++p) {
    const auto [x0, y0] = origins_[p];
    for (int y = 0; y < t; ++y)
      tile.segment(static_cast<Eigen::Index>(y) * t, t) =
          x.segment(static_cast<Eigen::Index>(y0 + y) * shape_.width + x0, t);
    f.scores[p] = net_.forward(tile, f.caches[p])[0];
  }
  return f;
}

Vec Discriminator::backward(const Forward& fwd, const std::vector<double>& grad_scores,
                            bool accumulate) {
  if (grad_scores.size() != origins_.size() || fwd.caches.size() != origins_.size())
    throw Error(Errc::CacheMismatch, "score gradient does not match the tile grid");
  const int t = shape_.tile;
  Vec gx = Vec::Zero(static_cast<Eigen::Index>(shape_.width) * shape_.height);
  Vec g(1);
  for (std::size_t p = 0; p < origins_.size(); ++p) {
    if (grad_scores[p] == 0.0 && !accumulate) continue;
    g[0] = grad_scores[p];
    const Vec gt = net_.backward(fwd.caches[p], g, {}, accumulate);
    const auto [x0, y0] = origins_[p];
    for (int y = 0; y < t; ++y)
      gx.segment(static_cast<Eigen::Index>(y0 + y) * shape_.width + x0, t) +=
          gt.segment(static_cast<Eigen::Index>(y) * t, t);
  }
  return gx;
}

void adam_step(AdamState& state, Eigen::Ref<Vec> params, const Vec& grads) {
  if (params.size() != grads.size()) throw Error(Errc::ShapeMismatch, "adam: grads/params size");
  if (state.m.size() == 0) {
    state.m = Vec::Zero(params.size());
    state.v = Vec::Zero(params.size());
  }
  if (state.m.size() != params.size()) throw Error(Errc::ShapeMismatch, "adam: state size");
  ++state.t;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

namespace {

constexpr char kCkptMagic[8] = {'D', 'G', 'P', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw Error(Errc::MalformedFile, "checkpoint truncated");
  return value;
}

void put_widths(std::ostream& os, std::uint32_t kind, const Mlp& net) {
  put<std::uint32_t>(os, kind);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.widths().size()));
  for (auto w : net.widths()) put<std::uint64_t>(os, static_cast<std::uint64_t>(w));
}

void put_params(std::ostream& os, const Mlp& net) {
  put<double>(os, net.leak());
  put<std::uint64_t>(os, static_cast<std::uint64_t>(net.params().size()));
  os.write(reinterpret_cast<const char*>(net.params().data()),
           static_cast<std::streamsize>(net.params().size() * sizeof(double)));
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  os.write(kCkptMagic, sizeof(kCkptMagic));
  put<std::uint64_t>(os, ckpt.step);
  put<std::uint32_t>(os,
                     static_cast<std::uint32_t>(ckpt.generators.size() + ckpt.discriminators.size()));
  for (const auto& g : ckpt.generators) {
    put_widths(os, 0, g.net());
    put<std::uint64_t>(os, g.shape().tap_s);
    put<std::uint64_t>(os, g.shape().tap_z);
    put<std::uint32_t>(os, g.shape().residual ? 1 : 0);
    put_params(os, g.net());
  }
  for (const auto& d : ckpt.discriminators) {
    put_widths(os, 1, d.net());
    for (int v : {d.shape().width, d.shape().height, d.shape().tile, d.shape().stride})
      put<std::uint32_t>(os, static_cast<std::uint32_t>(v));
    put_params(os, d.net());
  }
  if (!os) throw Error(Errc::IoError, "write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::IoError, "cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw Error(Errc::MalformedFile, "bad checkpoint magic in " + path.string());
  Checkpoint ckpt;
  ckpt.step = get<std::uint64_t>(is);
  const auto count = get<std::uint32_t>(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto kind = get<std::uint32_t>(is);
    const auto nw = get<std::uint32_t>(is);
    if (nw < 2 || nw > 64) throw Error(Errc::MalformedFile, "implausible width count");
    std::vector<Eigen::Index> widths(nw);
    for (auto& w : widths) w = static_cast<Eigen::Index>(get<std::uint64_t>(is));
    Mlp* net = nullptr;
    if (kind == 0) {
      GeneratorShape shape;
      shape.io_dim = widths.front();
      shape.hidden.assign(widths.begin() + 1, widths.end() - 1);
      shape.tap_s = get<std::uint64_t>(is);
      shape.tap_z = get<std::uint64_t>(is);
      shape.residual = get<std::uint32_t>(is) != 0;
      const auto leak = get<double>(is);
      ckpt.generators.emplace_back(shape, leak);
      net = &ckpt.generators.back().net();
    } else if (kind == 1) {
      DiscriminatorShape shape;
      shape.width = static_cast<int>(get<std::uint32_t>(is));
      shape.height = static_cast<int>(get<std::uint32_t>(is));
      shape.tile = static_cast<int>(get<std::uint32_t>(is));
      shape.stride = static_cast<int>(get<std::uint32_t>(is));
      shape.hidden.assign(widths.begin() + 1, widths.end() - 1);
      const auto leak = get<double>(is);
      ckpt.discriminators.emplace_back(shape, leak);
      net = &ckpt.discriminators.back().net();
    } else {
      throw Error(Errc::MalformedFile, "unknown network kind");
    }
    const auto np = get<std::uint64_t>(is);
    if (static_cast<std::uint64_t>(net->params().size()) != np)
      throw Error(Errc::MalformedFile, "parameter count does not match shape");
    if (!is.read(reinterpret_cast<char*>(net->params().data()),
                 static_cast<std::streamsize>(np * sizeof(double))))
      throw Error(Errc::MalformedFile, "checkpoint truncated");
  }
  return ckpt;
}

}  // namespace dgpcg
