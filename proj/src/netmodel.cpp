#include "breakeven/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "breakeven/error.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

std::string to_string(LossKind l) {
  return l == LossKind::mse ? "mse" : "softmax_cross_entropy";
}

std::string to_string(HvpMethod m) { return m == HvpMethod::fd ? "fd" : "pearlmutter"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw Error(ErrorKind::InvalidArgument, "unknown activation '" + s + "'");
}

LossKind loss_from_string(const std::string& s) {
  if (s == "softmax_cross_entropy") return LossKind::softmax_cross_entropy;
  if (s == "mse") return LossKind::mse;
  throw Error(ErrorKind::InvalidArgument, "unknown loss '" + s + "'");
}

HvpMethod hvp_method_from_string(const std::string& s) {
  if (s == "pearlmutter") return HvpMethod::pearlmutter;
  if (s == "fd") return HvpMethod::fd;
  throw Error(ErrorKind::InvalidArgument, "unknown hvp method '" + s + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2)
    throw Error(ErrorKind::InvalidArgument, "an MLP needs at least input and output layers");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw Error(ErrorKind::InvalidArgument, "layer sizes must be positive");
  if (activations.size() != num_hidden() || batch_norm.size() != num_hidden())
    throw Error(ErrorKind::InvalidArgument,
                "activations and batch_norm need one entry per hidden layer");
  if (loss == LossKind::softmax_cross_entropy && output_dim() < 2)
    throw Error(ErrorKind::InvalidArgument, "softmax cross-entropy needs >= 2 classes");
  if (!std::isfinite(loss_scale)) throw Error(ErrorKind::InvalidArgument, "loss_scale");
}

bool MlpSpec::has_batch_norm() const {
  return std::any_of(batch_norm.begin(), batch_norm.end(), [](bool b) { return b; });
}

MlpSpec make_mlp(std::vector<std::size_t> sizes, Activation act, LossKind loss, bool batch_norm,
                 std::uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes = std::move(sizes);
  const std::size_t hidden = spec.layer_sizes.size() >= 2 ? spec.layer_sizes.size() - 2 : 0;
  spec.activations.assign(hidden, act);
  spec.batch_norm.assign(hidden, batch_norm);
  spec.loss = loss;
  spec.seed = seed;
  spec.validate();
  return spec;
}

ParamLayout::ParamLayout(const MlpSpec& spec) {
  spec.validate();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.num_affine_layers(); ++l) {
    LayerSlices s;
    s.in = spec.layer_sizes[l];
    s.out = spec.layer_sizes[l + 1];
    s.weights = offset;
    offset += s.in * s.out;
    s.biases = offset;
    offset += s.out;
    if (l < spec.num_hidden() && spec.batch_norm[l]) {
      s.gamma = offset;
      offset += s.out;
      s.beta = offset;
      offset += s.out;
    }
    layers_.push_back(s);
  }
  size_ = offset;
}

ParamVector init_params(const MlpSpec& spec) {
  const ParamLayout layout(spec);
  ParamVector theta(layout.size(), 0.0);
  Rng rng(spec.seed);
  for (std::size_t l = 0; l < layout.num_layers(); ++l) {
    const LayerSlices& s = layout.layer(l);
    if (spec.init.kind == InitScheme::Kind::constant) {
      std::fill_n(theta.begin() + static_cast<std::ptrdiff_t>(s.weights), s.in * s.out,
                  spec.init.constant);
      std::fill_n(theta.begin() + static_cast<std::ptrdiff_t>(s.biases), s.out,
                  spec.init.constant);
    } else {
      double gain = 1.0;
      if (spec.init.gain) {
        gain = *spec.init.gain;
      } else if (l < spec.num_hidden() && spec.activations[l] == Activation::relu) {
        gain = std::sqrt(2.0);
      }
      const double sigma = gain / std::sqrt(static_cast<double>(s.in));
      for (std::size_t i = 0; i < s.in * s.out; ++i) theta[s.weights + i] = sigma * rng.normal();
    }
    if (s.gamma) std::fill_n(theta.begin() + static_cast<std::ptrdiff_t>(*s.gamma), s.out, 1.0);
  }
  return theta;
}

Batch Batch::select(std::span<const std::size_t> rows) const {
  Batch out;
  out.n = rows.size();
  out.d = d;
  out.target_dim = target_dim;
  out.inputs.reserve(rows.size() * d);
  for (std::size_t r : rows) {
    if (r >= n) throw Error(ErrorKind::InvalidArgument, "row index out of range");
    out.inputs.insert(out.inputs.end(), inputs.begin() + static_cast<std::ptrdiff_t>(r * d),
                      inputs.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    if (!labels.empty()) out.labels.push_back(labels[r]);
    if (!targets.empty())
      out.targets.insert(out.targets.end(),
                         targets.begin() + static_cast<std::ptrdiff_t>(r * target_dim),
                         targets.begin() + static_cast<std::ptrdiff_t>((r + 1) * target_dim));
  }
  return out;
}

BnStats initial_bn_stats(const MlpSpec& spec) {
  BnStats s;
  s.mean.resize(spec.num_hidden());
  s.var.resize(spec.num_hidden());
  for (std::size_t l = 0; l < spec.num_hidden(); ++l) {
    if (!spec.batch_norm[l]) continue;
    s.mean[l].assign(spec.layer_sizes[l + 1], 0.0);
    s.var[l].assign(spec.layer_sizes[l + 1], 1.0);
  }
  return s;
}

void ema_update(BnStats& running, const BnStats& batch, double decay) {
  for (std::size_t l = 0; l < running.mean.size(); ++l) {
    for (std::size_t j = 0; j < running.mean[l].size(); ++j) {
      running.mean[l][j] = decay * running.mean[l][j] + (1.0 - decay) * batch.mean[l][j];
      running.var[l][j] = decay * running.var[l][j] + (1.0 - decay) * batch.var[l][j];
    }
  }
}

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

// First and second derivative w.r.t. the pre-activation x, given out = act(x).
double activate_d1(Activation a, double x, double out) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

double activate_d2(Activation a, double out) {
  return a == Activation::tanh ? -2.0 * out * (1.0 - out * out) : 0.0;
}

struct LayerCache {
  Vec input;    // n x in
  Vec z;        // n x out, affine output
  Vec xhat;     // BN only
  Vec inv_std;  // BN only, per feature
  Vec y;        // input to the activation (== z without BN)
  Vec act;      // n x out, hidden layers only
};

struct Pass {
  std::vector<LayerCache> layers;
  Vec probs;  // softmax probabilities (cross-entropy only), n x classes
  ForwardResult result;
};

void check_batch(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                 const ParamLayout& layout) {
  if (theta.size() != layout.size())
    throw Error(ErrorKind::DimensionMismatch, "parameter vector length does not match spec");
  if (batch.n == 0) throw Error(ErrorKind::InvalidArgument, "empty batch");
  if (batch.d != spec.input_dim() || batch.inputs.size() != batch.n * batch.d)
    throw Error(ErrorKind::DimensionMismatch, "batch input dimension");
  if (spec.loss == LossKind::softmax_cross_entropy) {
    if (batch.labels.size() != batch.n)
      throw Error(ErrorKind::InvalidArgument, "classification batch needs one label per row");
  } else if (batch.targets.size() != batch.n * spec.output_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "mse batch needs n x output_dim targets");
  }
  for (int label : batch.labels)
    if (label < 0 || static_cast<std::size_t>(label) >= spec.output_dim())
      throw Error(ErrorKind::InvalidArgument, "label out of range");
}

Vec affine(std::span<const double> input, std::size_t n, const LayerSlices& s,
           std::span<const double> theta) {
  Vec z(n * s.out);
  const double* w = theta.data() + s.weights;
  const double* b = theta.data() + s.biases;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = input.data() + i * s.in;
    for (std::size_t o = 0; o < s.out; ++o) {
      double acc = b[o];
      const double* wr = w + o * s.in;
      for (std::size_t k = 0; k < s.in; ++k) acc += wr[k] * x[k];
      z[i * s.out + o] = acc;
    }
  }
  return z;
}

// out[i, k] = sum_o d[i, o] * W[o, k]
Vec back_through_weights(std::span<const double> d, std::size_t n, const LayerSlices& s,
                         const double* w) {
  Vec out(n * s.in, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < s.out; ++o) {
      const double g = d[i * s.out + o];
      if (g == 0.0) continue;
      const double* wr = w + o * s.in;
      double* dst = out.data() + i * s.in;
      for (std::size_t k = 0; k < s.in; ++k) dst[k] += g * wr[k];
    }
  return out;
}

// dW[o, k] += sum_i d[i, o] * input[i, k]; db[o] += sum_i d[i, o]
void accumulate_affine_grad(std::span<const double> d, std::span<const double> input,
                            std::size_t n, const LayerSlices& s, ParamVector& g) {
  double* dw = g.data() + s.weights;
  double* db = g.data() + s.biases;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = input.data() + i * s.in;
    for (std::size_t o = 0; o < s.out; ++o) {
      const double dv = d[i * s.out + o];
      db[o] += dv;
      if (dv == 0.0) continue;
      double* row = dw + o * s.in;
      for (std::size_t k = 0; k < s.in; ++k) row[k] += dv * x[k];
    }
  }
}

Pass run_forward(const MlpSpec& spec, const ParamLayout& layout, std::span<const double> theta,
                 const Batch& batch, const BnMode& bn) {
  check_batch(spec, theta, batch, layout);
  const std::size_t n = batch.n;
  Pass pass;
  pass.layers.resize(layout.num_layers());
  pass.result.batch_stats = initial_bn_stats(spec);

  Vec current = batch.inputs;
  for (std::size_t l = 0; l < layout.num_layers(); ++l) {
    const LayerSlices& s = layout.layer(l);
    LayerCache& cache = pass.layers[l];
    cache.input = std::move(current);
    cache.z = affine(cache.input, n, s, theta);
    if (l + 1 == layout.num_layers()) break;

    cache.y = cache.z;
    if (s.gamma) {
      Vec mean(s.out, 0.0), var(s.out, 0.0);
      if (bn.kind == BnMode::Kind::batch_stats) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t o = 0; o < s.out; ++o) mean[o] += cache.z[i * s.out + o];
        for (auto& m : mean) m /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t o = 0; o < s.out; ++o) {
            const double dz = cache.z[i * s.out + o] - mean[o];
            var[o] += dz * dz;
          }
        for (auto& v : var) v /= static_cast<double>(n);
      } else {
        if (bn.stats.mean.size() <= l || bn.stats.mean[l].size() != s.out)
          throw Error(ErrorKind::DimensionMismatch, "frozen BN statistics do not match spec");
        mean = bn.stats.mean[l];
        var = bn.stats.var[l];
      }
      cache.inv_std.resize(s.out);
      for (std::size_t o = 0; o < s.out; ++o) cache.inv_std[o] = 1.0 / std::sqrt(var[o] + kBnEpsilon);
      cache.xhat.resize(n * s.out);
      const double* gamma = theta.data() + *s.gamma;
      const double* beta = theta.data() + *s.beta;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < s.out; ++o) {
          const double xh = (cache.z[i * s.out + o] - mean[o]) * cache.inv_std[o];
          cache.xhat[i * s.out + o] = xh;
          cache.y[i * s.out + o] = gamma[o] * xh + beta[o];
        }
      pass.result.batch_stats.mean[l] = std::move(mean);
      pass.result.batch_stats.var[l] = std::move(var);
    }
    cache.act.resize(cache.y.size());
    for (std::size_t i = 0; i < cache.y.size(); ++i)
      cache.act[i] = activate(spec.activations[l], cache.y[i]);
    if (!all_finite(cache.act)) throw Error(ErrorKind::NonFinite, "hidden activations overflowed");
    current = cache.act;
  }

  const Vec& logits = pass.layers.back().z;
  if (!all_finite(logits)) throw Error(ErrorKind::NonFinite, "network output overflowed");
  const std::size_t c = spec.output_dim();
  pass.result.per_example.resize(n);
  if (spec.loss == LossKind::softmax_cross_entropy) pass.probs.resize(n * c);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = logits.data() + i * c;
    double loss = 0.0;
    if (spec.loss == LossKind::softmax_cross_entropy) {
      const double m = *std::max_element(zi, zi + c);
      double sum = 0.0;
      for (std::size_t k = 0; k < c; ++k) sum += std::exp(zi[k] - m);
      const double lse = m + std::log(sum);
      loss = lse - zi[batch.labels[i]];
      for (std::size_t k = 0; k < c; ++k) pass.probs[i * c + k] = std::exp(zi[k] - lse);
    } else {
      const double* t = batch.targets.data() + i * c;
      for (std::size_t k = 0; k < c; ++k) loss += (zi[k] - t[k]) * (zi[k] - t[k]);
    }
    pass.result.per_example[i] = spec.loss_scale * loss;
    if (!batch.labels.empty()) {
      // max_element returns the first maximum: ties go to the lowest class.
      const auto pred = static_cast<int>(std::max_element(zi, zi + c) - zi);
      if (pred == batch.labels[i]) ++correct;
    }
  }
  double total = 0.0;
  for (double v : pass.result.per_example) total += v;
  pass.result.mean_loss = total / static_cast<double>(n);
  if (!std::isfinite(pass.result.mean_loss)) throw Error(ErrorKind::NonFinite, "loss overflowed");
  pass.result.accuracy = batch.labels.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : static_cast<double>(correct) / static_cast<double>(n);
  return pass;
}

// dLoss/dlogits of the mean loss.
Vec output_delta(const MlpSpec& spec, const Pass& pass, const Batch& batch) {
  const std::size_t n = batch.n;
  const std::size_t c = spec.output_dim();
  const double w = spec.loss_scale / static_cast<double>(n);
  Vec d(n * c);
  if (spec.loss == LossKind::softmax_cross_entropy) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) {
        const double onehot = static_cast<int>(k) == batch.labels[i] ? 1.0 : 0.0;
        d[i * c + k] = w * (pass.probs[i * c + k] - onehot);
      }
  } else {
    const Vec& z = pass.layers.back().z;
    for (std::size_t i = 0; i < n * c; ++i) d[i] = w * 2.0 * (z[i] - batch.targets[i]);
  }
  return d;
}

ParamVector run_backward(const MlpSpec& spec, const ParamLayout& layout,
                         std::span<const double> theta, const Pass& pass, const Batch& batch,
                         const BnMode& bn) {
  const std::size_t n = batch.n;
  ParamVector g(layout.size(), 0.0);
  Vec delta = output_delta(spec, pass, batch);
  for (std::size_t l = layout.num_layers(); l-- > 0;) {
    const LayerSlices& s = layout.layer(l);
    const LayerCache& cache = pass.layers[l];
    accumulate_affine_grad(delta, cache.input, n, s, g);
    if (l == 0) break;

    const std::size_t h = l - 1;
    const LayerSlices& hs = layout.layer(h);
    const LayerCache& hc = pass.layers[h];
    Vec dy = back_through_weights(delta, n, s, theta.data() + s.weights);
    for (std::size_t i = 0; i < dy.size(); ++i)
      dy[i] *= activate_d1(spec.activations[h], hc.y[i], hc.act[i]);
    if (!hs.gamma) {
      delta = std::move(dy);
      continue;
    }
    const double* gamma = theta.data() + *hs.gamma;
    double* dgamma = g.data() + *hs.gamma;
    double* dbeta = g.data() + *hs.beta;
    const std::size_t m = hs.out;
    Vec dxhat(n * m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t o = 0; o < m; ++o) {
        const double v = dy[i * m + o];
        dgamma[o] += v * hc.xhat[i * m + o];
        dbeta[o] += v;
        dxhat[i * m + o] = v * gamma[o];
      }
    Vec dz(n * m);
    if (bn.kind == BnMode::Kind::batch_stats) {
      const double nn = static_cast<double>(n);
      for (std::size_t o = 0; o < m; ++o) {
        double sum = 0.0, sum_x = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          sum += dxhat[i * m + o];
          sum_x += dxhat[i * m + o] * hc.xhat[i * m + o];
        }
        for (std::size_t i = 0; i < n; ++i)
          dz[i * m + o] = hc.inv_std[o] / nn *
                          (nn * dxhat[i * m + o] - sum - hc.xhat[i * m + o] * sum_x);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < m; ++o) dz[i * m + o] = dxhat[i * m + o] * hc.inv_std[o];
    }
    delta = std::move(dz);
  }
  if (!all_finite(g)) throw Error(ErrorKind::NonFinite, "gradient overflowed");
  return g;
}

}  // namespace

ForwardResult forward_loss(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                           const BnMode& bn) {
  const ParamLayout layout(spec);
  return run_forward(spec, layout, theta, batch, bn).result;
}

LossAndGrad loss_and_grad(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                          const BnMode& bn) {
  const ParamLayout layout(spec);
  Pass pass = run_forward(spec, layout, theta, batch, bn);
  ParamVector g = run_backward(spec, layout, theta, pass, batch, bn);
  return {std::move(pass.result), std::move(g)};
}

ParamVector grad(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                 const BnMode& bn) {
  return loss_and_grad(spec, theta, batch, bn).grad;
}

std::vector<ParamVector> per_example_grads(const MlpSpec& spec, std::span<const double> theta,
                                           const Batch& batch, const BnMode& bn, Exec exec) {
  if (spec.has_batch_norm() && bn.kind == BnMode::Kind::batch_stats)
    throw Error(ErrorKind::BnBatchStatsUnsupported,
                "per-example gradients need frozen BN statistics");
  std::vector<ParamVector> out(batch.n);
  for_each_index(exec, batch.n, [&](std::size_t i) {
    const std::size_t row[] = {i};
    out[i] = grad(spec, theta, batch.select(row), bn);
  });
  return out;
}

ParamVector hvp_pearlmutter(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                            std::span<const double> v) {
  if (spec.has_batch_norm())
    throw Error(ErrorKind::BnUnsupported, "Pearlmutter HVP is implemented for BN-free nets");
  const ParamLayout layout(spec);
  if (v.size() != layout.size()) throw Error(ErrorKind::DimensionMismatch, "direction length");
  if (!all_finite(v)) throw Error(ErrorKind::NonFinite, "direction has NaN/Inf");
  const Pass pass = run_forward(spec, layout, theta, batch, BnMode::batch());
  const std::size_t n = batch.n;
  const std::size_t num_layers = layout.num_layers();

  // R-forward: directional derivatives of every affine output along v.
  std::vector<Vec> r_input(num_layers);
  std::vector<Vec> r_z(num_layers);
  r_input[0].assign(n * layout.layer(0).in, 0.0);
  for (std::size_t l = 0; l < num_layers; ++l) {
    const LayerSlices& s = layout.layer(l);
    const LayerCache& cache = pass.layers[l];
    Vec rz = affine(cache.input, n, s, v);
    const double* w = theta.data() + s.weights;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t o = 0; o < s.out; ++o) {
        double acc = 0.0;
        const double* wr = w + o * s.in;
        const double* rx = r_input[l].data() + i * s.in;
        for (std::size_t k = 0; k < s.in; ++k) acc += wr[k] * rx[k];
        rz[i * s.out + o] += acc;
      }
    if (l + 1 < num_layers) {
      Vec ra(rz.size());
      for (std::size_t i = 0; i < rz.size(); ++i)
        ra[i] = activate_d1(spec.activations[l], cache.y[i], cache.act[i]) * rz[i];
      r_input[l + 1] = std::move(ra);
    }
    r_z[l] = std::move(rz);
  }

  // Output delta and its directional derivative.
  const std::size_t c = spec.output_dim();
  const double wscale = spec.loss_scale / static_cast<double>(n);
  Vec delta = output_delta(spec, pass, batch);
  Vec r_delta(n * c);
  const Vec& rzl = r_z.back();
  if (spec.loss == LossKind::softmax_cross_entropy) {
    for (std::size_t i = 0; i < n; ++i) {
      double pr = 0.0;
      for (std::size_t k = 0; k < c; ++k) pr += pass.probs[i * c + k] * rzl[i * c + k];
      for (std::size_t k = 0; k < c; ++k)
        r_delta[i * c + k] = wscale * pass.probs[i * c + k] * (rzl[i * c + k] - pr);
    }
  } else {
    for (std::size_t i = 0; i < n * c; ++i) r_delta[i] = wscale * 2.0 * rzl[i];
  }

  ParamVector hv(layout.size(), 0.0);
  for (std::size_t l = num_layers; l-- > 0;) {
    const LayerSlices& s = layout.layer(l);
    const LayerCache& cache = pass.layers[l];
    accumulate_affine_grad(r_delta, cache.input, n, s, hv);
    // delta * R(input)^T contributes to the weight block only.
    {
      double* dw = hv.data() + s.weights;
      for (std::size_t i = 0; i < n; ++i) {
        const double* rx = r_input[l].data() + i * s.in;
        for (std::size_t o = 0; o < s.out; ++o) {
          const double dv = delta[i * s.out + o];
          if (dv == 0.0) continue;
          double* row = dw + o * s.in;
          for (std::size_t k = 0; k < s.in; ++k) row[k] += dv * rx[k];
        }
      }
    }
    if (l == 0) break;

    const std::size_t h = l - 1;
    const LayerCache& hc = pass.layers[h];
    const Activation act = spec.activations[h];
    Vec da = back_through_weights(delta, n, s, theta.data() + s.weights);
    Vec r_da = back_through_weights(r_delta, n, s, theta.data() + s.weights);
    const Vec v_da = back_through_weights(delta, n, s, v.data() + s.weights);
    Vec next_delta(da.size()), next_r_delta(da.size());
    for (std::size_t i = 0; i < da.size(); ++i) {
      const double d1 = activate_d1(act, hc.y[i], hc.act[i]);
      const double d2 = activate_d2(act, hc.act[i]);
      next_delta[i] = d1 * da[i];
      next_r_delta[i] = d2 * r_z[h][i] * da[i] + d1 * (r_da[i] + v_da[i]);
    }
    delta = std::move(next_delta);
    r_delta = std::move(next_r_delta);
  }
  if (!all_finite(hv)) throw Error(ErrorKind::NonFinite, "Hessian-vector product overflowed");
  return hv;
}

ParamVector hvp_fd(const MlpSpec& spec, std::span<const double> theta, const Batch& batch,
                   std::span<const double> v, const BnMode& bn, double eps) {
  if (v.size() != theta.size()) throw Error(ErrorKind::DimensionMismatch, "direction length");
  const double vn = norm2(v);
  if (vn == 0.0) throw Error(ErrorKind::ZeroDirection, "finite-difference HVP needs |v| > 0");
  ParamVector plus(theta.begin(), theta.end());
  ParamVector minus(theta.begin(), theta.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double step = eps * v[i] / vn;
    plus[i] += step;
    minus[i] -= step;
  }
  const ParamVector gp = grad(spec, plus, batch, bn);
  const ParamVector gm = grad(spec, minus, batch, bn);
  ParamVector out(v.size());
  const double f = vn / (2.0 * eps);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (gp[i] - gm[i]) * f;
  return out;
}

LinearOperator hessian_operator(const MlpSpec& spec, std::span<const double> theta,
                                const Batch& batch, HvpMethod method, const BnMode& bn) {
  if (method == HvpMethod::pearlmutter && spec.has_batch_norm())
    throw Error(ErrorKind::BnUnsupported, "use the fd method for BN specs");
  struct State {
    MlpSpec spec;
    ParamVector theta;
    Batch batch;
    BnMode bn;
  };
  auto state = std::make_shared<const State>(
      State{spec, ParamVector(theta.begin(), theta.end()), batch, bn});
  LinearOperator op;
  op.dim = theta.size();
  if (method == HvpMethod::pearlmutter) {
    op.apply = [state](std::span<const double> v) {
      return hvp_pearlmutter(state->spec, state->theta, state->batch, v);
    };
  } else {
    op.apply = [state](std::span<const double> v) {
      if (norm2(v) == 0.0) return Vec(v.size(), 0.0);
      return hvp_fd(state->spec, state->theta, state->batch, v, state->bn);
    };
  }
  return op;
}

double bn_gamma_norm(const MlpSpec& spec, std::span<const double> theta, std::size_t layer_index) {
  const ParamLayout layout(spec);
  if (layer_index >= spec.num_hidden() || !layout.layer(layer_index).gamma)
    throw Error(ErrorKind::NoBnLayer, "layer " + std::to_string(layer_index) + " has no BN");
  if (theta.size() != layout.size()) throw Error(ErrorKind::DimensionMismatch, "theta length");
  const LayerSlices& s = layout.layer(layer_index);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.out; ++i) sum += theta[*s.gamma + i] * theta[*s.gamma + i];
  return std::sqrt(sum);
}

}  // namespace breakeven
