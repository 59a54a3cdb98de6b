// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/mlp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "binflow/error.hpp"
#include "binflow/losses.hpp"
#include "binflow/rng.hpp"

namespace binflow {
namespace {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using MatMap = Eigen::Map<Mat<S>>;
template <class S>
using ConstMatMap = Eigen::Map<const Mat<S>>;
template <class S>
using VecMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <class S>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;

constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC = 0.044715;

// Offsets of each block inside the flat parameter vector.
struct Layout {
  std::size_t in_w, in_b;
  std::vector<std::size_t> blk_w, blk_b;
  std::size_t out_w, out_b, total;

  explicit Layout(const MlpArch& a) {
    std::size_t o = 0;
    in_w = o;
    o += a.width * a.input_dim();
    in_b = o;
    o += a.width;
    for (std::size_t k = 0; k < a.depth; ++k) {
      blk_w.push_back(o);
      o += a.width * a.width;
      blk_b.push_back(o);
      o += a.width;
    }
    out_w = o;
    o += a.dim * a.width;
    out_b = o;
    o += a.dim;
    total = o;
  }
};

template <class S>
void check_finite(const Mat<S>& m, const std::string& layer) {
  if (!m.allFinite()) throw NumericError("non-finite activation in layer " + layer);
}

}  // namespace

std::size_t MlpArch::num_params() const noexcept { return Layout(*this).total; }

void MlpArch::validate() const {
  if (dim == 0) throw ParameterError("model dim must be >= 1");
  if (width == 0) throw ParameterError("model width must be >= 1");
  if (time_dim == 0 || time_dim % 2 != 0)
    throw ParameterError("time_dim must be a positive even number, got " + std::to_string(time_dim));
}

void DataScaling::validate() const {
  if (!std::isfinite(mu_data)) throw ParameterError("mu_data must be finite");
  if (!(sigma2_data > 0.0)) throw ParameterError("sigma2_data must be > 0");
  if (!(final_time > 0.0)) throw ParameterError("final time T must be > 0");
}

void time_embedding(double v, std::span<double> out) {
  const std::size_t half = out.size() / 2;
  thread_local std::vector<double> freq;
  if (freq.size() != half) {
    freq.resize(half);
    for (std::size_t k = 0; k < half; ++k)
      freq[k] = half > 1 ? std::pow(1e4, static_cast<double>(k) / static_cast<double>(half - 1))
                         : 1.0;
  }
  for (std::size_t k = 0; k < half; ++k) {
    const double w = freq[k];
    out[2 * k] = std::sin(w * v);
    out[2 * k + 1] = std::cos(w * v);
  }
}

template <class S>
AlignedVector<S> mlp_init(const MlpArch& arch, std::uint64_t seed, bool zero_head) {
  arch.validate();
  const Layout L(arch);
  AlignedVector<S> p(L.total);
  StreamEngine eng(splitmix64(seed));
  auto fill = [&](std::size_t from, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i)
      p[from + i] = static_cast<S>((2.0 * uniform01(eng) - 1.0) * bound);
  };
  fill(L.in_w, arch.width * arch.input_dim(), arch.input_dim());
  fill(L.in_b, arch.width, arch.input_dim());
  for (std::size_t k = 0; k < arch.depth; ++k) {
    fill(L.blk_w[k], arch.width * arch.width, arch.width);
    fill(L.blk_b[k], arch.width, arch.width);
  }
  if (zero_head) {
    std::fill(p.begin() + static_cast<std::ptrdiff_t>(L.out_w), p.end(), S(0));
  } else {
    fill(L.out_w, arch.dim * arch.width, arch.width);
    fill(L.out_b, arch.dim, arch.width);
  }
  return p;
}

template <class S>
void mlp_forward(const MlpArch& arch, std::span<const S> params, MlpCache<S>& cache) {
  const Layout L(arch);
  if (params.size() != L.total)
    throw ParameterError("parameter count " + std::to_string(params.size()) + " != " +
                         std::to_string(L.total));
  const auto B = static_cast<Eigen::Index>(cache.batch);
  const auto W = static_cast<Eigen::Index>(arch.width);
  const auto D = static_cast<Eigen::Index>(arch.dim);
  const auto I = static_cast<Eigen::Index>(arch.input_dim());
  const auto wb = static_cast<std::size_t>(W * B);
  if (cache.input.size() != static_cast<std::size_t>(I * B))
    throw ParameterError("input buffer has wrong size");
  cache.hidden.resize((arch.depth + 1) * wb);
  cache.pre.resize(arch.depth * wb);
  cache.output.resize(static_cast<std::size_t>(D * B));

  const S* p = params.data();
  ConstMatMap<S> in(cache.input.data(), I, B);
  MatMap<S> u0(cache.hidden.data(), W, B);
  u0.noalias() = ConstMatMap<S>(p + L.in_w, W, I) * in;
  u0.colwise() += ConstVecMap<S>(p + L.in_b, W);
  check_finite<S>(u0, "input");

  for (std::size_t k = 0; k < arch.depth; ++k) {
    ConstMatMap<S> u(cache.hidden.data() + k * wb, W, B);
    MatMap<S> z(cache.pre.data() + k * wb, W, B);
    MatMap<S> next(cache.hidden.data() + (k + 1) * wb, W, B);
    z.noalias() = ConstMatMap<S>(p + L.blk_w[k], W, W) * u;
    z.colwise() += ConstVecMap<S>(p + L.blk_b[k], W);
    const auto za = z.array();
    next.array() =
        u.array() +
        S(0.5) * za * (S(1) + (S(kGeluK) * (za + S(kGeluC) * za.cube())).tanh());
    check_finite<S>(next, "block " + std::to_string(k));
  }

  ConstMatMap<S> top(cache.hidden.data() + arch.depth * wb, W, B);
  MatMap<S> out(cache.output.data(), D, B);
  out.noalias() = ConstMatMap<S>(p + L.out_w, D, W) * top;
  out.colwise() += ConstVecMap<S>(p + L.out_b, D);
  check_finite<S>(out, "head");
}

template <class S>
void mlp_backward(const MlpArch& arch, std::span<const S> params, const MlpCache<S>& cache,
                  std::span<const S> grad_output, std::span<S> grad_params) {
  const Layout L(arch);
  if (params.size() != L.total || grad_params.size() != L.total)
    throw ParameterError("parameter/gradient size mismatch");
  const auto B = static_cast<Eigen::Index>(cache.batch);
  const auto W = static_cast<Eigen::Index>(arch.width);
  const auto D = static_cast<Eigen::Index>(arch.dim);
  const auto I = static_cast<Eigen::Index>(arch.input_dim());
  const auto wb = static_cast<std::size_t>(W * B);
  if (grad_output.size() != static_cast<std::size_t>(D * B))
    throw ParameterError("grad_output has wrong size");

  const S* p = params.data();
  S* g = grad_params.data();
  ConstMatMap<S> gout(grad_output.data(), D, B);
  ConstMatMap<S> top(cache.hidden.data() + arch.depth * wb, W, B);
  MatMap<S>(g + L.out_w, D, W).noalias() = gout * top.transpose();
  VecMap<S>(g + L.out_b, D) = gout.rowwise().sum();

  Mat<S> du = ConstMatMap<S>(p + L.out_w, D, W).transpose() * gout;
  Mat<S> dz(W, B);
  for (std::size_t kk = arch.depth; kk-- > 0;) {
    ConstMatMap<S> u(cache.hidden.data() + kk * wb, W, B);
    const auto z = ConstMatMap<S>(cache.pre.data() + kk * wb, W, B).array();
    const auto th = (S(kGeluK) * (z + S(kGeluC) * z.cube())).tanh().eval();
    const auto dgelu = (S(0.5) * (S(1) + th) +
                        S(0.5) * z * (S(1) - th.square()) * S(kGeluK) *
                            (S(1) + S(3 * kGeluC) * z.square()))
                           .eval();
    dz.array() = du.array() * dgelu;
    MatMap<S>(g + L.blk_w[kk], W, W).noalias() = dz * u.transpose();
    VecMap<S>(g + L.blk_b[kk], W) = dz.rowwise().sum();
    du.noalias() += ConstMatMap<S>(p + L.blk_w[kk], W, W).transpose() * dz;
  }
  ConstMatMap<S> in(cache.input.data(), I, B);
  MatMap<S>(g + L.in_w, W, I).noalias() = du * in.transpose();
  VecMap<S>(g + L.in_b, W) = du.rowwise().sum();
}

template <class S>
OutputMap prepare_inputs(const MlpArch& arch, const DataScaling& sc, std::span<const double> t,
                         std::span<const double> x, MlpCache<S>& cache) {
  const std::size_t d = arch.dim;
  const std::size_t batch = t.size();
  if (x.size() != d * batch)
    throw ParameterError("x has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(d * batch));
  cache.batch = batch;
  cache.input.assign(arch.input_dim() * batch, S(0));
  OutputMap map{std::vector<double>(d * batch), std::vector<double>(d * batch)};
  const double sigma = std::sqrt(sc.sigma2_data);
  const double sigma_max = sigma_of_t(0.0);
  std::vector<double> emb(arch.time_dim);
  for (std::size_t b = 0; b < batch; ++b) {
    const double s = t[b] / sc.final_time;
    if (!(s >= 0.0 && s <= 1.0))
      throw RangeError("model time t=" + std::to_string(t[b]) + " outside [0, T]");
    S* col = cache.input.data() + b * arch.input_dim();
    if (arch.precondition) {
      const PrecondCoeffs c = precond_coeffs(s, sc.mu_data, sc.sigma2_data);
      for (std::size_t i = 0; i < d; ++i) {
        const double xi = x[b * d + i];
        col[i] = static_cast<S>(c.c_in * xi + c.s_in);
        map.offset[b * d + i] = c.c_skip * xi;
        map.scale[b * d + i] = c.c_out;
      }
      time_embedding(sigma_of_t(s) / sigma_max, emb);
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        const double xi = x[b * d + i];
        col[i] = static_cast<S>((xi - sc.mu_data) / sigma);
        map.offset[b * d + i] = xi + (1.0 - s) * sc.mu_data;
        map.scale[b * d + i] = (1.0 - s) * sigma;
      }
      time_embedding(s, emb);
    }
    for (std::size_t j = 0; j < arch.time_dim; ++j) col[d + j] = static_cast<S>(emb[j]);
  }
  return map;
}

MlpDenoiser::MlpDenoiser(MlpArch arch, DataScaling scaling, std::uint64_t seed, bool zero_head)
    : arch_(arch), scaling_(scaling), seed_(seed) {
  arch_.validate();
  scaling_.validate();
  params_ = mlp_init<float>(arch_, seed, zero_head);
  ema_ = params_;
}

std::vector<double> MlpDenoiser::forward_batch(std::span<const double> t,
                                               std::span<const double> x) const {
  MlpCache<float> cache;
  const OutputMap map = prepare_inputs(arch_, scaling_, t, x, cache);
  mlp_forward<float>(arch_, use_ema_ ? ema_ : params_, cache);
  std::vector<double> m(map.offset.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = map.offset[i] + map.scale[i] * static_cast<double>(cache.output[i]);
  return m;
}

std::vector<double> MlpDenoiser::forward(double t, std::span<const double> x) const {
  if (x.size() % arch_.dim != 0)
    throw ParameterError("x length " + std::to_string(x.size()) + " is not a multiple of dim " +
                         std::to_string(arch_.dim));
  const std::vector<double> ts(x.size() / arch_.dim, t);
  return forward_batch(ts, x);
}

void MlpDenoiser::denoise(double t, std::span<const std::int64_t> x,
                          std::span<double> out) const {
  std::vector<double> xr(x.begin(), x.end());
  const auto m = forward(t, xr);
  std::copy(m.begin(), m.end(), out.begin());
}

template AlignedVector<float> mlp_init<float>(const MlpArch&, std::uint64_t, bool);
template AlignedVector<double> mlp_init<double>(const MlpArch&, std::uint64_t, bool);
template void mlp_forward<float>(const MlpArch&, std::span<const float>, MlpCache<float>&);
template void mlp_forward<double>(const MlpArch&, std::span<const double>, MlpCache<double>&);
template void mlp_backward<float>(const MlpArch&, std::span<const float>, const MlpCache<float>&,
                                  std::span<const float>, std::span<float>);
template void mlp_backward<double>(const MlpArch&, std::span<const double>,
                                   const MlpCache<double>&, std::span<const double>,
                                   std::span<double>);
template OutputMap prepare_inputs<float>(const MlpArch&, const DataScaling&,
                                         std::span<const double>, std::span<const double>,
                                         MlpCache<float>&);
template OutputMap prepare_inputs<double>(const MlpArch&, const DataScaling&,
                                          std::span<const double>, std::span<const double>,
                                          MlpCache<double>&);

}  // namespace binflow
